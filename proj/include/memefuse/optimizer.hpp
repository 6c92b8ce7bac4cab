#pragma once

#include "memefuse/model.hpp"

#include <Eigen/Core>

#include <optional>
#include <string_view>
#include <vector>

namespace memefuse {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind kind);
std::optional<OptimizerKind> parse_optimizer(std::string_view text);

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// SGD: p -= lr * g. Adam: bias-corrected first/second moment estimates.
/// State is allocated on the first step and tied to the model's structure.
class Optimizer {
public:
    explicit Optimizer(OptimizerSettings settings) : settings_(settings) {}

    void step(Model& params, const Model& grad);
    long steps() const { return steps_; }

private:
    OptimizerSettings settings_;
    long steps_ = 0;
    std::vector<Eigen::VectorXd> first_;
    std::vector<Eigen::VectorXd> second_;
};

} // namespace memefuse
