#pragma once

#include "memefuse/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace memefuse {

template <typename Scalar>
struct DenseLayer {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weight;  // out x in
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;
};

/// ReLU hidden layers followed by a linear 2-logit output layer.
template <typename Scalar>
struct MlpParams {
    std::vector<DenseLayer<Scalar>> layers;

    Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
    Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }
};

/// Throws ShapeError unless layer dims chain and the output width is 2.
template <typename Scalar>
void validate(const MlpParams<Scalar>& params) {
    if (params.layers.empty()) {
        throw ShapeError("MLP has no layers");
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        if (layer.bias.size() != layer.weight.rows()) {
            throw ShapeError("layer " + std::to_string(l) + ": bias length does not match weight rows");
        }
        if (l > 0 && layer.weight.cols() != params.layers[l - 1].weight.rows()) {
            throw ShapeError("layer " + std::to_string(l) + ": input width does not chain");
        }
    }
    if (params.output_dim() != 2) {
        throw ShapeError("MLP output width must be 2");
    }
}

/// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases.
template <typename Scalar, typename Rng>
MlpParams<Scalar> init_mlp(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden, Rng& rng) {
    MlpParams<Scalar> params;
    Eigen::Index fan_in = input_dim;
    std::vector<Eigen::Index> widths = hidden;
    widths.push_back(2);
    for (Eigen::Index fan_out : widths) {
        DenseLayer<Scalar> layer;
        layer.weight.resize(fan_out, fan_in);
        layer.bias = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(fan_out);
        std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)),
                                                    std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
        for (Eigen::Index r = 0; r < fan_out; ++r)
            for (Eigen::Index c = 0; c < fan_in; ++c)
                layer.weight(r, c) = static_cast<Scalar>(dist(rng));
        params.layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return params;
}

template <typename Scalar>
MlpParams<Scalar> zeros_like(const MlpParams<Scalar>& params) {
    MlpParams<Scalar> out;
    for (const auto& layer : params.layers) {
        out.layers.push_back({decltype(layer.weight)::Zero(layer.weight.rows(), layer.weight.cols()),
                              decltype(layer.bias)::Zero(layer.bias.size())});
    }
    return out;
}

/// Inputs to every layer, kept for the backward pass. inputs[l] is the
/// (post-activation) input of layer l, one example per column.
template <typename Scalar>
struct MlpCache {
    std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> inputs;
};

template <typename Derived, typename Scalar = typename Derived::Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
mlp_forward(const Eigen::MatrixBase<Derived>& x, const MlpParams<Scalar>& params, MlpCache<Scalar>* cache = nullptr) {
    if (x.rows() != params.input_dim()) {
        throw ShapeError("MLP input has width " + std::to_string(x.rows()) + ", expected " +
                         std::to_string(params.input_dim()));
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a = x;
    if (cache) cache->inputs.clear();
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> z = (layer.weight * a).colwise() + layer.bias;
        if (l + 1 < params.layers.size()) {
            z = z.cwiseMax(Scalar(0));
        }
        if (cache) cache->inputs.push_back(std::move(a));
        a = std::move(z);
    }
    return a;
}

/// Gradients of every layer plus the gradient with respect to the input batch.
template <typename Scalar>
struct MlpGradient {
    MlpParams<Scalar> params;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_input;
};

/// Backpropagates `d_logits` (2 x B) through the cached forward pass. The
/// ReLU derivative at exactly 0 is taken as 0.
template <typename Scalar, typename Derived>
MlpGradient<Scalar> mlp_backward(const MlpCache<Scalar>& cache, const MlpParams<Scalar>& params,
                                 const Eigen::MatrixBase<Derived>& d_logits) {
    const std::size_t depth = params.layers.size();
    if (cache.inputs.size() != depth) {
        throw ShapeError("MLP cache does not match the network depth");
    }
    MlpGradient<Scalar> grad;
    grad.params.layers.resize(depth);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> delta = d_logits;
    for (std::size_t l = depth; l-- > 0;) {
        const auto& input = cache.inputs[l];
        grad.params.layers[l].weight = delta * input.transpose();
        grad.params.layers[l].bias = delta.rowwise().sum();
        delta = params.layers[l].weight.transpose() * delta;
        if (l > 0) {
            // input of layer l is relu(pre-activation of layer l-1); positive iff pre > 0.
            delta = (input.array() > Scalar(0)).select(delta, Scalar(0));
        }
    }
    grad.d_input = std::move(delta);
    return grad;
}

} // namespace memefuse
