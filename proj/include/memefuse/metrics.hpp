#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace memefuse {

/// rows = true label, columns = predicted label.
using ConfusionMatrix = std::array<std::array<std::uint64_t, 2>, 2>;

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// All metric functions throw MetricError on empty input (and, for the
/// ranking metrics, on single-class labels) and ShapeError on length mismatch.
double accuracy(std::span<const int> label_hats, std::span<const int> labels);
ConfusionMatrix confusion(std::span<const int> label_hats, std::span<const int> labels);

/// Mann-Whitney statistic: fraction of (positive, negative) pairs where the
/// positive scores higher, ties counted half. O(n log n).
double auc_roc(std::span<const double> scores, std::span<const int> labels);

/// (0,0), one point per distinct score threshold (descending), ending at (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
double trapezoid_area(std::span<const RocPoint> points);

std::vector<int> threshold_labels(std::span<const double> p_hats, double threshold = 0.5);

struct EvalReport {
    std::size_t n = 0;
    double threshold = 0.5;
    double accuracy = 0.0;
    double auc_roc = 0.0;
    ConfusionMatrix confusion{};
    std::vector<RocPoint> roc_points;
};

EvalReport evaluate(std::span<const double> p_hats, std::span<const int> labels, double threshold = 0.5);

/// Key-value JSON object (roc points omitted; see roc_csv).
std::string report_json(const EvalReport& report);
/// "fpr,tpr" header then one row per point.
std::string roc_csv(std::span<const RocPoint> points);

} // namespace memefuse
