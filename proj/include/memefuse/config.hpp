#pragma once

#include "memefuse/fusion.hpp"
#include "memefuse/synth.hpp"
#include "memefuse/train.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace memefuse {

/// Dataset location: a directory following the manifest.jsonl/<channel>.mfe
/// convention, or an explicit manifest plus channel files.
struct DatasetPaths {
    std::filesystem::path manifest;
    std::map<std::string, std::filesystem::path> channels;
    std::filesystem::path tags;  // empty when absent
};

DatasetPaths dataset_paths_for_dir(const std::filesystem::path& dir);
Dataset load_dataset(const DatasetPaths& paths);

/// Experiment file for `train`. JSON with sections:
///   dataset { dir | manifest + channels{name: path} }
///   fusion  { mode, bilinear_dim, d_m?, d_h?, k? }
///   train   { learning_rate, optimizer, beta1, beta2, epsilon, batch_size,
///             max_epochs, patience, seed, hidden[] }
///   output  { dir }
///   metrics { threshold }
/// Relative paths resolve against the config file's directory.
struct RunConfig {
    DatasetPaths dataset;
    FusionMode mode = FusionMode::mm_only;
    Eigen::Index bilinear_dim = 768;
    std::optional<Eigen::Index> d_m;
    std::optional<Eigen::Index> d_h;
    std::optional<Eigen::Index> k;
    TrainConfig train;
    std::filesystem::path output_dir = "out";
    double threshold = 0.5;
};

/// Throws ConfigError naming the offending key (unknown keys, wrong types,
/// missing paths).
RunConfig parse_run_config(const std::filesystem::path& path);
RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir);

/// Generator file for `gen-synth`: sections `synth` (SynthConfig fields, with
/// `mix` keyed by meme type and `split` keyed by train/val/test) and `output { dir }`.
struct SynthRunConfig {
    SynthConfig synth;
    std::filesystem::path output_dir = "synth";
};

SynthRunConfig parse_synth_config(const std::filesystem::path& path);
SynthRunConfig parse_synth_config_text(const std::string& text, const std::filesystem::path& base_dir);

} // namespace memefuse
