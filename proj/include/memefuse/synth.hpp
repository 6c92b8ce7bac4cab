#pragma once

#include "memefuse/channel_file.hpp"
#include "memefuse/dataset.hpp"

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

enum class MemeType {
    multimodal_hate,
    unimodal_hate,
    benign_text_confounder,
    benign_image_confounder,
    random_benign,
};

inline constexpr std::array<MemeType, 5> kMemeTypes = {
    MemeType::multimodal_hate, MemeType::unimodal_hate, MemeType::benign_text_confounder,
    MemeType::benign_image_confounder, MemeType::random_benign};

std::string_view to_string(MemeType type);
std::optional<MemeType> parse_meme_type(std::string_view text);
constexpr int label_of(MemeType type) {
    return type == MemeType::multimodal_hate || type == MemeType::unimodal_hate ? 1 : 0;
}

struct SynthConfig {
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    Eigen::Index d_m = 768;
    Eigen::Index d_h = 768;
    Eigen::Index k = 3;
    /// Proportions in kMemeTypes order.
    std::array<double, 5> mix = {0.40, 0.10, 0.20, 0.20, 0.10};
    double noise_sigma = 0.1;
    /// train / val / test fractions.
    std::array<double, 3> split = {0.85, 0.05, 0.10};
    /// Dimension of the latent text/image content vectors.
    Eigen::Index content_dim = 8;
    /// Probability that a record's sentiment pair follows its label's pattern
    /// (opposed text/image sentiment for hateful, agreeing for benign).
    double senti_fidelity = 0.8;
    /// The challenge's test split is unlabeled; synthetic test labels are kept by default.
    bool label_test = true;
};

/// Throws ConfigError naming the offending field ("synth.mix", ...).
void validate(const SynthConfig& config);

struct SynthDataset {
    std::vector<ManifestEntry> entries;
    std::map<std::string, ChannelRows> channels;
    std::vector<std::pair<std::string, MemeType>> tags;

    Dataset to_dataset() const;
};

/// Exact per-split, per-type record counts: splits by largest remainder over
/// the split fractions, then within each split half the records (rounded down)
/// are hateful, apportioned over the hateful types by their mix weight, and
/// the rest over the benign types likewise.
std::map<Split, std::array<std::size_t, 5>> apportion(const SynthConfig& config);

/// Deterministic in `config` (including seed).
///
/// Latent construction per record: coarse text factors (ambiguous, hateful),
/// a coarse image factor (target), a text content vector t and an image
/// content vector c. e_m embeds [ambiguous, target, hateful, t]; the caption
/// channel embeds [target, c]. Multimodal hate has c = t - delta for a fixed
/// twist delta; its benign text confounder has c = t, so the two are
/// indistinguishable from e_m alone and separated by comparing e_m with h.
SynthDataset generate(const SynthConfig& config);

/// Writes manifest.jsonl, <channel>.mfe and tags.csv into `dir` (created if needed).
void write_synth(const std::filesystem::path& dir, const SynthDataset& data);

using TagMap = std::map<std::string, MemeType>;
TagMap read_tags(const std::filesystem::path& path);

struct CompositionReport {
    std::map<MemeType, std::map<Split, std::size_t>> by_type;
    std::map<Split, std::size_t> records;
    std::map<Split, std::size_t> positives;
    std::map<Split, std::size_t> negatives;
    std::size_t untagged = 0;
};

CompositionReport describe(const Dataset& dataset, const TagMap& tags);
std::string format_composition(const CompositionReport& report);

} // namespace memefuse
