#pragma once

#include "memefuse/dataset.hpp"
#include "memefuse/fusion.hpp"
#include "memefuse/model.hpp"
#include "memefuse/optimizer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace memefuse {

struct TrainConfig {
    OptimizerSettings optimizer;
    int batch_size = 32;
    int max_epochs = 30;
    /// Epochs without a validation improvement before stopping.
    int patience = 5;
    std::uint64_t seed = 0;
    std::vector<Eigen::Index> hidden = {768};
    double threshold = 0.5;
};

/// Throws ConfigError naming the offending field.
void validate(const TrainConfig& config);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;  // mean per-example cross-entropy over the epoch's batches
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double val_auc = 0.0;
    bool best = false;
};

struct TrainResult {
    Model model;    // parameters of the best validation epoch
    Model initial;
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_auc = 0.0;
};

/// Minimises summed cross-entropy over the train split with mini-batches in a
/// seeded shuffle order. After every epoch the val split is scored; the
/// parameters with the highest val AUCROC are kept (ties go to lower val loss)
/// and training stops after `patience` epochs without improvement.
///
/// Throws ConfigError on empty splits, DataError if the dataset lacks a channel
/// the mode needs, TrainingError on a non-finite loss.
TrainResult train(const Dataset& dataset, const FusionConfig& fusion, const TrainConfig& config);

/// FusionConfig with channel dims taken from the dataset's channel headers.
FusionConfig fusion_for_dataset(const Dataset& dataset, FusionMode mode, Eigen::Index bilinear_dim);

/// One line of the training log (JSON object).
std::string epoch_log_json(const EpochLog& entry);

} // namespace memefuse
