#pragma once

#include "memefuse/channel_file.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace memefuse {

enum class Split { train, val, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

/// Channel names understood by the store. `mm` is mandatory for every entry.
inline constexpr std::array<std::string_view, 4> kChannelNames = {"mm", "cap", "senti_t", "senti_v"};

bool is_channel_name(std::string_view name);

struct ManifestEntry {
    std::string id;
    std::optional<int> label;
    Split split = Split::train;
    std::map<std::string, std::uint64_t> channels;
};

/// One manifest line per entry, JSON object:
///   {"id":"...","split":"train","label":1,"channels":{"mm":0,"cap":0}}
/// `label` is omitted (or null) for unlabeled test entries.
std::string format_manifest_line(const ManifestEntry& entry);
ManifestEntry parse_manifest_line(std::string_view line, std::size_t line_number);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

/// A meme's channels widened to double.
struct EmbeddingRecord {
    std::string id;
    Eigen::VectorXd e_m;
    std::optional<Eigen::VectorXd> h;
    std::optional<Eigen::VectorXd> s_t;
    std::optional<Eigen::VectorXd> s_v;
    std::optional<int> label;
    Split split = Split::train;

    /// Vector for a channel name, or nullptr when absent.
    const Eigen::VectorXd* channel(std::string_view name) const;
};

/// Immutable after loading; safe to share between readers.
struct Dataset {
    std::vector<EmbeddingRecord> records;
    /// Dimension of each channel file that was supplied.
    std::map<std::string, std::uint32_t> channel_dims;

    /// Records of one split, in manifest order.
    std::vector<const EmbeddingRecord*> split(Split s) const;
    std::size_t count(Split s) const;
    bool has_channel(std::string_view name) const;
};

/// Resolves every manifest entry against the channel files. Throws
/// ValidationError naming the entry on dangling indices, duplicate ids,
/// missing labels on train/val, or channels without a file.
Dataset load_dataset(const std::filesystem::path& manifest,
                     const std::map<std::string, std::filesystem::path>& channel_files);

Dataset assemble_dataset(const std::vector<ManifestEntry>& entries,
                         const std::map<std::string, ChannelData>& channels);

/// Directory convention: `manifest.jsonl` plus `<channel>.mfe` for each
/// channel file present.
inline constexpr std::string_view kManifestFile = "manifest.jsonl";
inline constexpr std::string_view kTagsFile = "tags.csv";
std::filesystem::path channel_path(const std::filesystem::path& dir, std::string_view channel);
std::map<std::string, std::filesystem::path> discover_channels(const std::filesystem::path& dir);
Dataset load_dataset_dir(const std::filesystem::path& dir);

} // namespace memefuse
