#include "memefuse/metrics.hpp"

#include "memefuse/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace memefuse {

namespace {

void check_pair(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw ShapeError(std::string(what) + ": " + std::to_string(a) + " predictions vs " + std::to_string(b) +
                         " labels");
    }
    if (a == 0) {
        throw MetricError(std::string(what) + " is undefined on empty input");
    }
}

void check_binary(std::span<const int> values, const char* what) {
    for (int v : values) {
        if (v != 0 && v != 1) {
            throw ShapeError(std::string(what) + ": entries must be 0 or 1");
        }
    }
}

struct ClassCounts {
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
};

ClassCounts count_classes(std::span<const int> labels, const char* what) {
    check_binary(labels, what);
    ClassCounts c;
    for (int y : labels) (y == 1 ? c.pos : c.neg)++;
    if (c.pos == 0 || c.neg == 0) {
        throw MetricError(std::string(what) + " is undefined when only one class is present");
    }
    return c;
}

/// Indices sorted by score, descending; ties keep input order.
std::vector<std::size_t> order_by_score(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

} // namespace

double accuracy(std::span<const int> label_hats, std::span<const int> labels) {
    check_pair(label_hats.size(), labels.size(), "accuracy");
    check_binary(label_hats, "accuracy");
    check_binary(labels, "accuracy");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += label_hats[i] == labels[i];
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

ConfusionMatrix confusion(std::span<const int> label_hats, std::span<const int> labels) {
    check_pair(label_hats.size(), labels.size(), "confusion");
    check_binary(label_hats, "confusion");
    check_binary(labels, "confusion");
    ConfusionMatrix m{};
    for (std::size_t i = 0; i < labels.size(); ++i) ++m[labels[i]][label_hats[i]];
    return m;
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
    check_pair(scores.size(), labels.size(), "auc_roc");
    const ClassCounts total = count_classes(labels, "auc_roc");

    // Walk tie groups from the lowest score upwards. Twice the Mann-Whitney
    // count is an integer, so the sum is exact until the final division.
    std::vector<std::size_t> order = order_by_score(scores);
    std::reverse(order.begin(), order.end());
    std::uint64_t twice_wins = 0;
    std::uint64_t neg_below = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        ClassCounts group;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? group.pos : group.neg)++;
            ++j;
        }
        twice_wins += group.pos * (2 * neg_below + group.neg);
        neg_below += group.neg;
        i = j;
    }
    return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(total.pos) * static_cast<double>(total.neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
    check_pair(scores.size(), labels.size(), "roc_curve");
    const ClassCounts total = count_classes(labels, "roc_curve");
    const std::vector<std::size_t> order = order_by_score(scores);

    std::vector<RocPoint> points{{0.0, 0.0}};
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? tp : fp)++;
            ++j;
        }
        points.push_back({static_cast<double>(fp) / static_cast<double>(total.neg),
                          static_cast<double>(tp) / static_cast<double>(total.pos)});
        i = j;
    }
    return points;
}

double trapezoid_area(std::span<const RocPoint> points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) * 0.5;
    }
    return area;
}

std::vector<int> threshold_labels(std::span<const double> p_hats, double threshold) {
    std::vector<int> out(p_hats.size());
    std::transform(p_hats.begin(), p_hats.end(), out.begin(), [threshold](double p) { return p >= threshold ? 1 : 0; });
    return out;
}

EvalReport evaluate(std::span<const double> p_hats, std::span<const int> labels, double threshold) {
    EvalReport report;
    report.n = labels.size();
    report.threshold = threshold;
    const std::vector<int> hats = threshold_labels(p_hats, threshold);
    report.accuracy = accuracy(hats, labels);
    report.confusion = confusion(hats, labels);
    report.auc_roc = auc_roc(p_hats, labels);
    report.roc_points = roc_curve(p_hats, labels);
    return report;
}

std::string report_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["n"] = report.n;
    doc["threshold"] = report.threshold;
    doc["accuracy"] = report.accuracy;
    doc["auc_roc"] = report.auc_roc;
    doc["tn"] = report.confusion[0][0];
    doc["fp"] = report.confusion[0][1];
    doc["fn"] = report.confusion[1][0];
    doc["tp"] = report.confusion[1][1];
    doc["roc_points"] = report.roc_points.size();
    return doc.dump(2);
}

std::string roc_csv(std::span<const RocPoint> points) {
    std::string out = "fpr,tpr\n";
    char line[64];
    for (const auto& p : points) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", p.fpr, p.tpr);
        out += line;
    }
    return out;
}

} // namespace memefuse
