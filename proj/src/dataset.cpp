#include "memefuse/dataset.hpp"

#include "memefuse/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace memefuse {

using nlohmann::json;

std::string_view to_string(Split split) {
    switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

std::optional<Split> parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "val") return Split::val;
    if (text == "test") return Split::test;
    return std::nullopt;
}

bool is_channel_name(std::string_view name) {
    return std::find(kChannelNames.begin(), kChannelNames.end(), name) != kChannelNames.end();
}

std::string format_manifest_line(const ManifestEntry& entry) {
    // ordered_json keeps the field order stable across writers.
    nlohmann::ordered_json line;
    line["id"] = entry.id;
    line["split"] = std::string(to_string(entry.split));
    if (entry.label) {
        line["label"] = *entry.label;
    }
    nlohmann::ordered_json channels = nlohmann::ordered_json::object();
    for (auto name : kChannelNames) {
        if (auto it = entry.channels.find(std::string(name)); it != entry.channels.end()) {
            channels[std::string(name)] = it->second;
        }
    }
    line["channels"] = channels;
    return line.dump();
}

ManifestEntry parse_manifest_line(std::string_view text, std::size_t line_number) {
    const std::string where = "manifest line " + std::to_string(line_number);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(where + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw FormatError(where + ": expected a JSON object");
    }
    for (const auto& [key, _] : doc.items()) {
        if (key != "id" && key != "split" && key != "label" && key != "channels") {
            throw FormatError(where + ": unknown key \"" + key + "\"");
        }
    }

    ManifestEntry entry;
    if (!doc.contains("id") || !doc["id"].is_string() || doc["id"].get<std::string>().empty()) {
        throw FormatError(where + ": missing or empty \"id\"");
    }
    entry.id = doc["id"].get<std::string>();
    const std::string who = where + " (id " + entry.id + ")";

    if (!doc.contains("split") || !doc["split"].is_string()) {
        throw FormatError(who + ": missing \"split\"");
    }
    auto split = parse_split(doc["split"].get<std::string>());
    if (!split) {
        throw FormatError(who + ": split must be train, val or test");
    }
    entry.split = *split;

    if (doc.contains("label") && !doc["label"].is_null()) {
        const auto& label = doc["label"];
        if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1)) {
            throw ValidationError(who + ": label must be 0 or 1");
        }
        entry.label = label.get<int>();
    }

    if (!doc.contains("channels") || !doc["channels"].is_object()) {
        throw FormatError(who + ": missing \"channels\" object");
    }
    for (const auto& [name, row] : doc["channels"].items()) {
        if (!is_channel_name(name)) {
            throw ValidationError(who + ": unknown channel \"" + name + "\"");
        }
        if (!row.is_number_unsigned()) {
            throw FormatError(who + ": row index for channel " + name + " must be a non-negative integer");
        }
        entry.channels[name] = row.get<std::uint64_t>();
    }
    return entry;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open manifest " + path.string());
    }
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        entries.push_back(parse_manifest_line(line, number));
    }
    return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write manifest " + path.string());
    }
    for (const auto& entry : entries) {
        out << format_manifest_line(entry) << '\n';
    }
}

const Eigen::VectorXd* EmbeddingRecord::channel(std::string_view name) const {
    if (name == "mm") return &e_m;
    if (name == "cap") return h ? &*h : nullptr;
    if (name == "senti_t") return s_t ? &*s_t : nullptr;
    if (name == "senti_v") return s_v ? &*s_v : nullptr;
    return nullptr;
}

std::vector<const EmbeddingRecord*> Dataset::split(Split s) const {
    std::vector<const EmbeddingRecord*> out;
    for (const auto& r : records) {
        if (r.split == s) {
            out.push_back(&r);
        }
    }
    return out;
}

std::size_t Dataset::count(Split s) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [s](const auto& r) { return r.split == s; }));
}

bool Dataset::has_channel(std::string_view name) const {
    return channel_dims.count(std::string(name)) != 0;
}

Dataset assemble_dataset(const std::vector<ManifestEntry>& entries,
                         const std::map<std::string, ChannelData>& channels) {
    Dataset dataset;
    for (const auto& [name, data] : channels) {
        if (!is_channel_name(name)) {
            throw ValidationError("unknown channel \"" + name + "\"");
        }
        dataset.channel_dims[name] = data.dim;
    }

    std::set<std::string> seen;
    dataset.records.reserve(entries.size());
    for (const auto& entry : entries) {
        if (!seen.insert(entry.id).second) {
            throw ValidationError("duplicate id " + entry.id);
        }
        if (entry.split != Split::test && !entry.label) {
            throw ValidationError("id " + entry.id + ": " + std::string(to_string(entry.split)) +
                                  " entry has no label");
        }
        if (!entry.channels.count("mm")) {
            throw ValidationError("id " + entry.id + ": channel mm is required");
        }

        EmbeddingRecord record;
        record.id = entry.id;
        record.label = entry.label;
        record.split = entry.split;
        for (const auto& [name, row] : entry.channels) {
            auto it = channels.find(name);
            if (it == channels.end()) {
                throw ValidationError("id " + entry.id + ": channel " + name + " has no channel file");
            }
            const ChannelData& data = it->second;
            if (row >= data.count()) {
                throw ValidationError("id " + entry.id + ": channel " + name + " row " + std::to_string(row) +
                                      " out of range (count " + std::to_string(data.count()) + ")");
            }
            Eigen::VectorXd v = data.rows.row(static_cast<Eigen::Index>(row)).transpose().cast<double>();
            if (name == "mm") record.e_m = std::move(v);
            else if (name == "cap") record.h = std::move(v);
            else if (name == "senti_t") record.s_t = std::move(v);
            else record.s_v = std::move(v);
        }
        dataset.records.push_back(std::move(record));
    }
    return dataset;
}

Dataset load_dataset(const std::filesystem::path& manifest,
                     const std::map<std::string, std::filesystem::path>& channel_files) {
    auto entries = read_manifest(manifest);
    std::map<std::string, ChannelData> channels;
    for (const auto& [name, path] : channel_files) {
        channels.emplace(name, read_channel_file(path));
    }
    return assemble_dataset(entries, channels);
}

std::filesystem::path channel_path(const std::filesystem::path& dir, std::string_view channel) {
    return dir / (std::string(channel) + ".mfe");
}

std::map<std::string, std::filesystem::path> discover_channels(const std::filesystem::path& dir) {
    std::map<std::string, std::filesystem::path> out;
    for (auto name : kChannelNames) {
        auto path = channel_path(dir, name);
        if (std::filesystem::exists(path)) {
            out.emplace(std::string(name), path);
        }
    }
    return out;
}

Dataset load_dataset_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw DataError("dataset directory " + dir.string() + " does not exist");
    }
    return load_dataset(dir / kManifestFile, discover_channels(dir));
}

} // namespace memefuse
