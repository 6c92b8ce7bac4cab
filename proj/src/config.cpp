#include "memefuse/config.hpp"

#include "memefuse/error.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace memefuse {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

/// Typed access to one config section; every key must be consumed or listed.
class Section {
public:
    Section(const json& node, std::string name) : node_(node), name_(std::move(name)) {
        if (!node_.is_object()) throw ConfigError(name_ + " must be an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        for (const auto& [key, _] : node_.items()) {
            bool known = false;
            for (const char* k : keys) known = known || key == k;
            if (!known) throw ConfigError("unknown key " + name_ + "." + key);
        }
    }

    bool has(const char* key) const { return node_.contains(key) && !node_[key].is_null(); }
    const json& raw(const char* key) const { return node_[key]; }
    std::string path(const char* key) const { return name_ + "." + key; }

    template <typename T>
    std::optional<T> get(const char* key) const {
        if (!has(key)) return std::nullopt;
        const json& v = node_[key];
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(path(key) + " must be a string");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(path(key) + " must be a boolean");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!v.is_number_unsigned()) throw ConfigError(path(key) + " must be a non-negative integer");
        } else {
            if (!v.is_number_integer()) throw ConfigError(path(key) + " must be an integer");
        }
        return v.get<T>();
    }

    Section child(const char* key) const { return Section(node_[key], path(key)); }

private:
    const json& node_;
    std::string name_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

DatasetPaths dataset_paths_for_dir(const std::filesystem::path& dir) {
    DatasetPaths paths;
    paths.manifest = dir / kManifestFile;
    paths.channels = discover_channels(dir);
    if (std::filesystem::exists(dir / kTagsFile)) paths.tags = dir / kTagsFile;
    return paths;
}

Dataset load_dataset(const DatasetPaths& paths) {
    return load_dataset(paths.manifest, paths.channels);
}

RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base) {
    const json doc = parse_json(text);
    const Section root(doc, "config");
    root.allow({"dataset", "fusion", "train", "output", "metrics"});
    RunConfig rc;

    if (!root.has("dataset")) throw ConfigError("config.dataset is required");
    {
        const Section ds = root.child("dataset");
        ds.allow({"dir", "manifest", "channels", "tags"});
        if (auto dir = ds.get<std::string>("dir")) {
            if (ds.has("manifest") || ds.has("channels")) {
                throw ConfigError("dataset.dir excludes dataset.manifest/dataset.channels");
            }
            const auto resolved = resolve(base, *dir);
            if (!std::filesystem::is_directory(resolved)) {
                throw ConfigError("dataset.dir " + resolved.string() + " does not exist");
            }
            rc.dataset = dataset_paths_for_dir(resolved);
        } else {
            auto manifest = ds.get<std::string>("manifest");
            if (!manifest) throw ConfigError("dataset needs either dir or manifest");
            rc.dataset.manifest = resolve(base, *manifest);
            if (ds.has("channels")) {
                const Section ch = ds.child("channels");
                ch.allow({"mm", "cap", "senti_t", "senti_v"});
                for (auto name : kChannelNames) {
                    if (auto p = ch.get<std::string>(std::string(name).c_str())) {
                        rc.dataset.channels[std::string(name)] = resolve(base, *p);
                    }
                }
            }
        }
        if (auto tags = ds.get<std::string>("tags")) rc.dataset.tags = resolve(base, *tags);
        if (!std::filesystem::exists(rc.dataset.manifest)) {
            throw ConfigError("dataset manifest " + rc.dataset.manifest.string() + " does not exist");
        }
        for (const auto& [name, p] : rc.dataset.channels) {
            if (!std::filesystem::exists(p)) {
                throw ConfigError("dataset.channels." + name + ": " + p.string() + " does not exist");
            }
        }
    }

    if (root.has("fusion")) {
        const Section fu = root.child("fusion");
        fu.allow({"mode", "bilinear_dim", "d_m", "d_h", "k"});
        if (auto mode = fu.get<std::string>("mode")) {
            auto parsed = parse_fusion_mode(*mode);
            if (!parsed) throw ConfigError("fusion.mode: unknown mode \"" + *mode + "\"");
            rc.mode = *parsed;
        }
        auto positive = [&](const char* key) -> std::optional<Eigen::Index> {
            auto v = fu.get<std::int64_t>(key);
            if (v && *v < 1) throw ConfigError(fu.path(key) + " must be positive");
            return v;
        };
        if (auto v = positive("bilinear_dim")) rc.bilinear_dim = *v;
        rc.d_m = positive("d_m");
        rc.d_h = positive("d_h");
        rc.k = positive("k");
    }

    if (root.has("train")) {
        const Section tr = root.child("train");
        tr.allow({"learning_rate", "optimizer", "beta1", "beta2", "epsilon", "batch_size", "max_epochs", "patience",
                  "seed", "hidden"});
        auto& t = rc.train;
        if (auto v = tr.get<double>("learning_rate")) t.optimizer.learning_rate = *v;
        if (auto v = tr.get<std::string>("optimizer")) {
            auto kind = parse_optimizer(*v);
            if (!kind) throw ConfigError("train.optimizer must be sgd or adam");
            t.optimizer.kind = *kind;
        }
        if (auto v = tr.get<double>("beta1")) t.optimizer.beta1 = *v;
        if (auto v = tr.get<double>("beta2")) t.optimizer.beta2 = *v;
        if (auto v = tr.get<double>("epsilon")) t.optimizer.epsilon = *v;
        if (auto v = tr.get<int>("batch_size")) t.batch_size = *v;
        if (auto v = tr.get<int>("max_epochs")) t.max_epochs = *v;
        if (auto v = tr.get<int>("patience")) t.patience = *v;
        if (auto v = tr.get<std::uint64_t>("seed")) t.seed = *v;
        if (tr.has("hidden")) {
            const json& hidden = tr.raw("hidden");
            if (!hidden.is_array()) throw ConfigError("train.hidden must be an array of widths");
            t.hidden.clear();
            for (const auto& w : hidden) {
                if (!w.is_number_integer()) throw ConfigError("train.hidden must contain integers");
                t.hidden.push_back(w.get<Eigen::Index>());
            }
        }
    }

    if (root.has("output")) {
        const Section out = root.child("output");
        out.allow({"dir"});
        if (auto dir = out.get<std::string>("dir")) rc.output_dir = resolve(base, *dir);
    } else {
        rc.output_dir = base / rc.output_dir;
    }

    if (root.has("metrics")) {
        const Section m = root.child("metrics");
        m.allow({"threshold"});
        if (auto v = m.get<double>("threshold")) rc.threshold = *v;
    }
    rc.train.threshold = rc.threshold;
    validate(rc.train);
    return rc;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
    return parse_run_config_text(read_text(path), path.parent_path());
}

SynthRunConfig parse_synth_config_text(const std::string& text, const std::filesystem::path& base) {
    const json doc = parse_json(text);
    const Section root(doc, "config");
    root.allow({"synth", "output"});
    SynthRunConfig rc;
    if (root.has("synth")) {
        const Section s = root.child("synth");
        s.allow({"n", "seed", "d_m", "d_h", "k", "mix", "noise_sigma", "split", "content_dim", "senti_fidelity",
                 "label_test"});
        auto& c = rc.synth;
        if (auto v = s.get<std::size_t>("n")) c.n = *v;
        if (auto v = s.get<std::uint64_t>("seed")) c.seed = *v;
        if (auto v = s.get<std::int64_t>("d_m")) c.d_m = *v;
        if (auto v = s.get<std::int64_t>("d_h")) c.d_h = *v;
        if (auto v = s.get<std::int64_t>("k")) c.k = *v;
        if (auto v = s.get<std::int64_t>("content_dim")) c.content_dim = *v;
        if (auto v = s.get<double>("noise_sigma")) c.noise_sigma = *v;
        if (auto v = s.get<double>("senti_fidelity")) c.senti_fidelity = *v;
        if (auto v = s.get<bool>("label_test")) c.label_test = *v;
        if (s.has("mix")) {
            const Section mix = s.child("mix");
            mix.allow({"multimodal_hate", "unimodal_hate", "benign_text_confounder", "benign_image_confounder",
                       "random_benign"});
            // A partial mix leaves unspecified types at zero.
            for (std::size_t i = 0; i < kMemeTypes.size(); ++i) {
                c.mix[i] = mix.get<double>(std::string(to_string(kMemeTypes[i])).c_str()).value_or(0.0);
            }
        }
        if (s.has("split")) {
            const Section split = s.child("split");
            split.allow({"train", "val", "test"});
            c.split = {split.get<double>("train").value_or(0.0), split.get<double>("val").value_or(0.0),
                       split.get<double>("test").value_or(0.0)};
        }
    }
    if (root.has("output")) {
        const Section out = root.child("output");
        out.allow({"dir"});
        if (auto dir = out.get<std::string>("dir")) rc.output_dir = resolve(base, *dir);
    } else {
        rc.output_dir = base / rc.output_dir;
    }
    validate(rc.synth);
    return rc;
}

SynthRunConfig parse_synth_config(const std::filesystem::path& path) {
    return parse_synth_config_text(read_text(path), path.parent_path());
}

} // namespace memefuse
