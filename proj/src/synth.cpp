#include "memefuse/synth.hpp"

#include "memefuse/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace memefuse {

std::string_view to_string(MemeType type) {
    switch (type) {
    case MemeType::multimodal_hate: return "multimodal_hate";
    case MemeType::unimodal_hate: return "unimodal_hate";
    case MemeType::benign_text_confounder: return "benign_text_confounder";
    case MemeType::benign_image_confounder: return "benign_image_confounder";
    case MemeType::random_benign: return "random_benign";
    }
    return "?";
}

std::optional<MemeType> parse_meme_type(std::string_view text) {
    for (auto t : kMemeTypes) {
        if (text == to_string(t)) return t;
    }
    return std::nullopt;
}

void validate(const SynthConfig& c) {
    auto sum = [](const auto& xs) { return std::accumulate(xs.begin(), xs.end(), 0.0); };
    if (c.n < 20) throw ConfigError("synth.n must be at least 20");
    for (double w : c.mix) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("synth.mix: proportions must be non-negative");
    }
    if (std::abs(sum(c.mix) - 1.0) > 1e-9) {
        throw ConfigError("synth.mix: proportions sum to " + std::to_string(sum(c.mix)) + ", expected 1");
    }
    if (c.mix[0] + c.mix[1] <= 0.0 || c.mix[2] + c.mix[3] + c.mix[4] <= 0.0) {
        throw ConfigError("synth.mix: balanced splits need both hateful and benign types");
    }
    for (double f : c.split) {
        if (!(f >= 0.0) || !std::isfinite(f)) throw ConfigError("synth.split: fractions must be non-negative");
    }
    if (std::abs(sum(c.split) - 1.0) > 1e-9) {
        throw ConfigError("synth.split: fractions sum to " + std::to_string(sum(c.split)) + ", expected 1");
    }
    if (c.content_dim < 1) throw ConfigError("synth.content_dim must be positive");
    if (c.d_m < 3 + c.content_dim) {
        throw ConfigError("synth.d_m must be at least content_dim + 3 (" + std::to_string(3 + c.content_dim) + ")");
    }
    if (c.d_h < 1 + c.content_dim) {
        throw ConfigError("synth.d_h must be at least content_dim + 1 (" + std::to_string(1 + c.content_dim) + ")");
    }
    if (c.k < 3) throw ConfigError("synth.k must be at least 3 (negative, neutral, positive)");
    if (!(c.noise_sigma >= 0.0) || !std::isfinite(c.noise_sigma)) {
        throw ConfigError("synth.noise_sigma must be non-negative");
    }
    if (!(c.senti_fidelity >= 0.0 && c.senti_fidelity <= 1.0)) {
        throw ConfigError("synth.senti_fidelity must lie in [0, 1]");
    }
}

namespace {

/// Largest-remainder apportionment of `total` over `weights`; ties go to the
/// lower index.
std::vector<std::size_t> largest_remainder(std::size_t total, const std::vector<double>& weights) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<double> fraction(weights.size(), -1.0);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        const double quota = static_cast<double>(total) * weights[i] / sum;
        counts[i] = static_cast<std::size_t>(std::floor(quota + 1e-9));
        fraction[i] = quota - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fraction[a] > fraction[b]; });
    for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
        if (weights[order[i]] <= 0.0) continue;
        ++counts[order[i]];
        ++assigned;
    }
    return counts;
}

Eigen::MatrixXd orthonormal_columns(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) g(r, c) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

Eigen::VectorXd unit_vector(Eigen::Index dim, std::mt19937_64& rng, std::normal_distribution<double>& normal) {
    Eigen::VectorXd v(dim);
    for (auto& x : v) x = normal(rng);
    return v / v.norm();
}

constexpr int kNegative = 0;
constexpr int kNeutral = 1;
constexpr int kPositive = 2;

} // namespace

std::map<Split, std::array<std::size_t, 5>> apportion(const SynthConfig& config) {
    validate(config);
    const auto split_counts =
        largest_remainder(config.n, {config.split[0], config.split[1], config.split[2]});
    std::map<Split, std::array<std::size_t, 5>> out;
    const Split splits[] = {Split::train, Split::val, Split::test};
    for (std::size_t s = 0; s < 3; ++s) {
        const std::size_t total = split_counts[s];
        const std::size_t hateful = total / 2;
        const auto hate = largest_remainder(hateful, {config.mix[0], config.mix[1]});
        const auto benign = largest_remainder(total - hateful, {config.mix[2], config.mix[3], config.mix[4]});
        out[splits[s]] = {hate[0], hate[1], benign[0], benign[1], benign[2]};
    }
    return out;
}

SynthDataset generate(const SynthConfig& config) {
    validate(config);
    const auto counts = apportion(config);
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const Eigen::Index f = config.content_dim;
    const Eigen::MatrixXd mm_embed = orthonormal_columns(config.d_m, 3 + f, rng);
    const Eigen::MatrixXd cap_embed = orthonormal_columns(config.d_h, 1 + f, rng);
    const Eigen::VectorXd twist = unit_vector(f, rng, normal);

    SynthDataset out;
    out.channels["mm"].resize(static_cast<Eigen::Index>(config.n), config.d_m);
    out.channels["cap"].resize(static_cast<Eigen::Index>(config.n), config.d_h);
    out.channels["senti_t"].resize(static_cast<Eigen::Index>(config.n), config.k);
    out.channels["senti_v"].resize(static_cast<Eigen::Index>(config.n), config.k);

    auto noise = [&](Eigen::Index dim) {
        Eigen::VectorXd v(dim);
        for (auto& x : v) x = normal(rng);
        return Eigen::VectorXd(config.noise_sigma * v);
    };
    auto sentiment_logits = [&](int cls) {
        Eigen::VectorXd v = Eigen::VectorXd::Constant(config.k, -1.0);
        v[cls] = 1.0;
        return Eigen::VectorXd(v + noise(config.k));
    };

    std::size_t row = 0;
    for (Split split : {Split::train, Split::val, Split::test}) {
        std::vector<MemeType> types;
        const auto& per_type = counts.at(split);
        for (std::size_t t = 0; t < kMemeTypes.size(); ++t) types.insert(types.end(), per_type[t], kMemeTypes[t]);
        std::shuffle(types.begin(), types.end(), rng);

        for (MemeType type : types) {
            double ambiguous = 0.0, target = 0.0, hateful_text = 0.0;
            const Eigen::VectorXd text = unit_vector(f, rng, normal);
            Eigen::VectorXd image = unit_vector(f, rng, normal);
            switch (type) {
            case MemeType::multimodal_hate:
                ambiguous = 1.0;
                target = 1.0;
                image = text - twist;
                break;
            case MemeType::benign_text_confounder:
                ambiguous = 1.0;
                target = 1.0;
                image = text;
                break;
            case MemeType::benign_image_confounder:
                ambiguous = 1.0;
                break;
            case MemeType::unimodal_hate:
                hateful_text = 1.0;
                target = uniform(rng) < 0.5 ? 1.0 : 0.0;
                break;
            case MemeType::random_benign:
                break;
            }

            Eigen::VectorXd mm_latent(3 + f);
            mm_latent << ambiguous, target, hateful_text, text;
            Eigen::VectorXd cap_latent(1 + f);
            cap_latent << target, image;

            int text_senti;
            int image_senti;
            if (uniform(rng) < config.senti_fidelity) {
                if (label_of(type) == 1) {
                    text_senti = kNegative;
                    image_senti = kPositive;
                } else {
                    text_senti = image_senti = uniform(rng) < 0.5 ? kNeutral : kPositive;
                }
            } else {
                text_senti = static_cast<int>(std::min(2.0, std::floor(3.0 * uniform(rng))));
                image_senti = static_cast<int>(std::min(2.0, std::floor(3.0 * uniform(rng))));
            }

            const auto r = static_cast<Eigen::Index>(row);
            out.channels["mm"].row(r) = (mm_embed * mm_latent + noise(config.d_m)).cast<float>().transpose();
            out.channels["cap"].row(r) = (cap_embed * cap_latent + noise(config.d_h)).cast<float>().transpose();
            out.channels["senti_t"].row(r) = sentiment_logits(text_senti).cast<float>().transpose();
            out.channels["senti_v"].row(r) = sentiment_logits(image_senti).cast<float>().transpose();

            char id[32];
            std::snprintf(id, sizeof id, "syn-%06zu", row);
            ManifestEntry entry;
            entry.id = id;
            entry.split = split;
            if (split != Split::test || config.label_test) entry.label = label_of(type);
            for (auto name : kChannelNames) entry.channels[std::string(name)] = row;
            out.entries.push_back(std::move(entry));
            out.tags.emplace_back(id, type);
            ++row;
        }
    }
    return out;
}

Dataset SynthDataset::to_dataset() const {
    std::map<std::string, ChannelData> data;
    for (const auto& [name, rows] : channels) {
        data[name] = ChannelData{static_cast<std::uint32_t>(rows.cols()), rows};
    }
    return assemble_dataset(entries, data);
}

void write_synth(const std::filesystem::path& dir, const SynthDataset& data) {
    std::filesystem::create_directories(dir);
    write_manifest(dir / kManifestFile, data.entries);
    for (const auto& [name, rows] : data.channels) {
        write_file_bytes(channel_path(dir, name), write_channel(rows));
    }
    std::ofstream tags(dir / kTagsFile, std::ios::binary | std::ios::trunc);
    if (!tags) throw DataError("cannot write " + (dir / kTagsFile).string());
    for (const auto& [id, type] : data.tags) tags << id << ',' << to_string(type) << '\n';
}

TagMap read_tags(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open tag file " + path.string());
    TagMap tags;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        auto type = comma == std::string::npos ? std::nullopt : parse_meme_type(line.substr(comma + 1));
        if (!type) {
            throw FormatError("tag file line " + std::to_string(number) + ": expected \"id,meme_type\"");
        }
        tags[line.substr(0, comma)] = *type;
    }
    return tags;
}

CompositionReport describe(const Dataset& dataset, const TagMap& tags) {
    CompositionReport report;
    for (const auto& r : dataset.records) {
        ++report.records[r.split];
        if (r.label) ++(*r.label == 1 ? report.positives : report.negatives)[r.split];
        if (auto it = tags.find(r.id); it != tags.end()) {
            ++report.by_type[it->second][r.split];
        } else {
            ++report.untagged;
        }
    }
    return report;
}

std::string format_composition(const CompositionReport& report) {
    auto get = [](const std::map<Split, std::size_t>& m, Split s) {
        auto it = m.find(s);
        return it == m.end() ? std::size_t{0} : it->second;
    };
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-26s %8s %8s %8s\n", "", "train", "val", "test");
    out << line;
    for (auto type : kMemeTypes) {
        const auto it = report.by_type.find(type);
        const std::map<Split, std::size_t> empty;
        const auto& row = it == report.by_type.end() ? empty : it->second;
        std::snprintf(line, sizeof line, "%-26s %8zu %8zu %8zu\n", std::string(to_string(type)).c_str(),
                      get(row, Split::train), get(row, Split::val), get(row, Split::test));
        out << line;
    }
    for (auto [name, map] : {std::pair{"records", &report.records}, std::pair{"label=1", &report.positives},
                             std::pair{"label=0", &report.negatives}}) {
        std::snprintf(line, sizeof line, "%-26s %8zu %8zu %8zu\n", name, get(*map, Split::train),
                      get(*map, Split::val), get(*map, Split::test));
        out << line;
    }
    if (report.untagged > 0) out << "untagged records: " << report.untagged << '\n';
    return out.str();
}

} // namespace memefuse
