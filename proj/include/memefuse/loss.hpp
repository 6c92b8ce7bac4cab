#pragma once

#include "memefuse/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace memefuse {

/// Clipping applied to probabilities before taking logs in bce_loss.
inline constexpr double kProbabilityEpsilon = 1e-12;

template <typename Scalar>
Scalar sigmoid(Scalar z) {
    // Branches keep exp() from overflowing for large |z|.
    if (z >= Scalar(0)) {
        return Scalar(1) / (Scalar(1) + std::exp(-z));
    }
    const Scalar e = std::exp(z);
    return e / (Scalar(1) + e);
}

/// Max-subtracted softmax over each column.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
softmax(const Eigen::MatrixBase<Derived>& logits) {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(logits.rows(), logits.cols());
    for (Eigen::Index n = 0; n < logits.cols(); ++n) {
        const Scalar top = logits.col(n).maxCoeff();
        out.col(n) = (logits.col(n).array() - top).exp().matrix();
        out.col(n) /= out.col(n).sum();
    }
    return out;
}

/// -log softmax(logits)[y] for one example, computed as logsumexp(z) - z_y.
/// Non-finite logits give NaN so callers can report divergence.
template <typename Derived>
typename Derived::Scalar softmax_ce(const Eigen::MatrixBase<Derived>& logits, int y) {
    using Scalar = typename Derived::Scalar;
    if (!logits.allFinite()) {
        return std::numeric_limits<Scalar>::quiet_NaN();
    }
    if (y < 0 || y >= logits.size()) {
        throw ShapeError("softmax_ce: label out of range");
    }
    const Scalar top = logits.maxCoeff();
    const Scalar lse = top + std::log((logits.array() - top).exp().sum());
    return std::max(Scalar(0), lse - logits(y));
}

struct BceLoss {
    double sum = 0.0;
    double mean = 0.0;
};

/// Binary cross-entropy summed over the sequence; the mean is for logging.
/// Probabilities are clipped to [eps, 1-eps].
inline BceLoss bce_loss(std::span<const double> p_hats, std::span<const int> ys) {
    if (p_hats.size() != ys.size()) {
        throw ShapeError("bce_loss: " + std::to_string(p_hats.size()) + " probabilities vs " +
                         std::to_string(ys.size()) + " labels");
    }
    BceLoss loss;
    for (std::size_t i = 0; i < p_hats.size(); ++i) {
        if (!std::isfinite(p_hats[i])) {
            throw ShapeError("bce_loss: non-finite probability at index " + std::to_string(i));
        }
        const double p = std::clamp(p_hats[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
        loss.sum -= ys[i] == 1 ? std::log(p) : std::log1p(-p);
    }
    loss.mean = p_hats.empty() ? 0.0 : loss.sum / static_cast<double>(p_hats.size());
    return loss;
}

/// d bce / d p for one clipped example.
inline double bce_gradient(double p_hat, int y) {
    const double p = std::clamp(p_hat, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    return y == 1 ? -1.0 / p : 1.0 / (1.0 - p);
}

/// Summed softmax cross-entropy over a 2 x B logit batch and its gradient
/// (softmax - onehot) with respect to the logits.
template <typename Derived>
typename Derived::Scalar softmax_ce_batch(const Eigen::MatrixBase<Derived>& logits, std::span<const int> labels,
                                          Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>* grad) {
    using Scalar = typename Derived::Scalar;
    if (static_cast<std::size_t>(logits.cols()) != labels.size()) {
        throw ShapeError("softmax_ce_batch: batch size mismatch");
    }
    Scalar total = 0;
    for (Eigen::Index n = 0; n < logits.cols(); ++n) {
        total += softmax_ce(logits.col(n), labels[static_cast<std::size_t>(n)]);
    }
    if (grad != nullptr) {
        *grad = softmax(logits);
        for (Eigen::Index n = 0; n < logits.cols(); ++n) {
            (*grad)(labels[static_cast<std::size_t>(n)], n) -= Scalar(1);
        }
    }
    return total;
}

} // namespace memefuse
