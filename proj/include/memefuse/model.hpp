#pragma once

#include "memefuse/dataset.hpp"
#include "memefuse/fusion.hpp"
#include "memefuse/mlp.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace memefuse {

/// Everything a trained classifier needs: the fusion layout, the bilinear
/// block (present iff the mode uses it) and the MLP head.
struct Model {
    FusionConfig fusion;
    std::optional<BilinearParams<double>> bilinear;
    MlpParams<double> mlp;
};

/// Throws ShapeError/ConfigError if the parts disagree with each other.
void validate(const Model& model);

/// Fresh parameters: bilinear and MLP initialised from one seeded stream.
Model init_model(const FusionConfig& fusion, const std::vector<Eigen::Index>& hidden, std::uint64_t seed);

/// Same structure, every entry zero.
Model zeros_like(const Model& model);

/// Channel columns for a batch of records, one example per column. Only the
/// blocks the fusion mode needs are filled.
struct FeatureBatch {
    Eigen::MatrixXd mm;
    Eigen::MatrixXd cap;
    Eigen::MatrixXd senti;  // 3k x B, already passed through sentiment_feature
    std::vector<int> labels;  // empty if any record is unlabeled

    Eigen::Index size() const { return mm.cols(); }
    FeatureBatch select(std::span<const Eigen::Index> columns) const;
};

/// Throws DataError naming record id and channel on a missing channel.
FeatureBatch make_batch(std::span<const EmbeddingRecord* const> records, const FusionConfig& fusion);

struct ForwardCache {
    Eigen::MatrixXd outer;  // vec(m h^T) per column, bilinear modes only
    MlpCache<double> mlp;
};

/// Assembled feature matrix (feature_dim x B) in the fixed block order.
Eigen::MatrixXd assemble_batch(const Model& model, const FeatureBatch& batch, ForwardCache* cache = nullptr);

/// 2 x B logits.
Eigen::MatrixXd model_forward(const Model& model, const FeatureBatch& batch, ForwardCache* cache = nullptr);

/// Summed softmax cross-entropy of the batch; fills `grad` (shaped like
/// `model`) with its exact gradient.
double loss_and_gradient(const Model& model, const FeatureBatch& batch, Model& grad);

/// P(class 1) for every column, evaluated in fixed chunks so the result does
/// not depend on the worker count.
std::vector<double> predict_proba(const Model& model, const FeatureBatch& batch);

/// Visits each parameter tensor of `params` alongside the matching tensor of
/// `other` (same structure) as flat spans.
void for_each_tensor(Model& params, const Model& other,
                     const std::function<void(std::span<double>, std::span<const double>)>& fn);

std::size_t parameter_count(const Model& model);

} // namespace memefuse
