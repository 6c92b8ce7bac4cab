#include "memefuse/error.hpp"
#include "memefuse/metrics.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace memefuse;
using memefuse::testing::brute_force_auc;

namespace {

struct Instance {
    std::vector<double> scores;
    std::vector<int> labels;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n, bool coarse) {
    Instance inst;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> bucket(0, 9);
    while (true) {
        inst.scores.clear();
        inst.labels.clear();
        for (std::size_t i = 0; i < n; ++i) {
            inst.scores.push_back(coarse ? bucket(rng) / 10.0 : u(rng));
            inst.labels.push_back(u(rng) < 0.4 ? 1 : 0);
        }
        const auto pos = std::count(inst.labels.begin(), inst.labels.end(), 1);
        if (pos > 0 && pos < static_cast<long>(n)) return inst;
    }
}

} // namespace

TEST(Accuracy, PerfectFlippedAndCounted) {
    const std::vector<int> y = {1, 0, 1, 1, 0, 0, 1};
    EXPECT_EQ(accuracy(y, y), 1.0);
    const std::vector<int> a = {1, 0, 1, 0, 1, 0, 1, 0}, b = {0, 1, 0, 1, 0, 1, 0, 1};
    EXPECT_EQ(accuracy(a, b), 0.0);
    EXPECT_EQ(accuracy(std::vector<int>{1, 0, 1, 0}, std::vector<int>{1, 1, 1, 0}), 0.75);
}

TEST(Accuracy, EmptyIsUndefined) {
    EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), MetricError);
    EXPECT_THROW(confusion(std::vector<int>{}, std::vector<int>{}), MetricError);
}

TEST(Confusion, Cases) {
    const std::vector<int> y = {0, 1, 0, 1};
    const auto perfect = confusion(y, y);
    EXPECT_EQ(perfect[0][0], 2u);
    EXPECT_EQ(perfect[1][1], 2u);
    EXPECT_EQ(perfect[0][1] + perfect[1][0], 0u);

    const auto all_one = confusion(std::vector<int>(6, 1), std::vector<int>{0, 1, 0, 1, 0, 1});
    EXPECT_EQ(all_one[0][0], 0u);
    EXPECT_EQ(all_one[0][1], 3u);
    EXPECT_EQ(all_one[1][0], 0u);
    EXPECT_EQ(all_one[1][1], 3u);

    // predictions {1,0,0,1} vs labels {1,1,0,0}
    const auto mixed = confusion(std::vector<int>{1, 0, 0, 1}, std::vector<int>{1, 1, 0, 0});
    for (const auto& row : mixed)
        for (auto v : row) EXPECT_EQ(v, 1u);
}

TEST(AucRoc, SpecExamples) {
    EXPECT_EQ(auc_roc(std::vector<double>{0.9, 0.8, 0.3, 0.2}, std::vector<int>{1, 1, 0, 0}), 1.0);
    EXPECT_EQ(auc_roc(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}), 0.5);
    EXPECT_EQ(auc_roc(std::vector<double>{0.9, 0.6, 0.4, 0.2}, std::vector<int>{1, 0, 1, 0}), 0.75);
}

TEST(AucRoc, SingleClassIsUndefined) {
    EXPECT_THROW(auc_roc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 1}), MetricError);
    EXPECT_THROW(roc_curve(std::vector<double>{0.1, 0.9}, std::vector<int>{0, 0}), MetricError);
    EXPECT_THROW(auc_roc(std::vector<double>{}, std::vector<int>{}), MetricError);
}

TEST(AucRoc, MatchesPairCounting) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> size(2, 500);
    for (int trial = 0; trial < 200; ++trial) {
        const auto inst = random_instance(rng, size(rng), trial % 2 == 0);
        ASSERT_NEAR(auc_roc(inst.scores, inst.labels), brute_force_auc(inst.scores, inst.labels), 1e-12);
    }
}

TEST(AucRoc, InvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto inst = random_instance(rng, 80, trial % 2 == 0);
        const double base = auc_roc(inst.scores, inst.labels);
        std::vector<double> warped;
        for (double s : inst.scores) warped.push_back(std::exp(3.0 * s) - 7.0);
        EXPECT_EQ(auc_roc(warped, inst.labels), base);
    }
}

TEST(AucRoc, ComplementWithoutTies) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = random_instance(rng, 60, false);
        std::vector<double> flipped;
        for (double s : inst.scores) flipped.push_back(1.0 - s);
        EXPECT_NEAR(auc_roc(flipped, inst.labels), 1.0 - auc_roc(inst.scores, inst.labels), 1e-12);
    }
}

TEST(RocCurve, PerfectSeparationPassesThroughTopLeft) {
    const auto pts = roc_curve(std::vector<double>{0.9, 0.8, 0.3, 0.2}, std::vector<int>{1, 1, 0, 0});
    bool corner = false;
    for (const auto& p : pts) corner = corner || (p.fpr == 0.0 && p.tpr == 1.0);
    EXPECT_TRUE(corner);
    EXPECT_EQ(trapezoid_area(pts), 1.0);
}

TEST(RocCurve, AllScoresEqualGivesDiagonal) {
    const auto pts = roc_curve(std::vector<double>(6, 0.3), std::vector<int>{1, 0, 1, 0, 0, 1});
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[0].fpr, 0.0);
    EXPECT_EQ(pts[0].tpr, 0.0);
    EXPECT_EQ(pts[1].fpr, 1.0);
    EXPECT_EQ(pts[1].tpr, 1.0);
    EXPECT_EQ(trapezoid_area(pts), 0.5);
}

TEST(RocCurve, ShapeAndAreaAgreeWithPairCount) {
    std::mt19937_64 rng(50);
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = random_instance(rng, trial == 0 ? 50 : 2 + trial * 3, trial % 3 == 0);
        const auto pts = roc_curve(inst.scores, inst.labels);
        ASSERT_EQ(pts.front().fpr, 0.0);
        ASSERT_EQ(pts.front().tpr, 0.0);
        ASSERT_EQ(pts.back().fpr, 1.0);
        ASSERT_EQ(pts.back().tpr, 1.0);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            ASSERT_GE(pts[i].fpr, pts[i - 1].fpr);
            ASSERT_GE(pts[i].tpr, pts[i - 1].tpr);
        }
        ASSERT_NEAR(trapezoid_area(pts), brute_force_auc(inst.scores, inst.labels), 1e-12);
    }
}

TEST(Evaluate, ReportIsConsistent) {
    std::mt19937_64 rng(1);
    const auto inst = random_instance(rng, 120, false);
    const EvalReport r = evaluate(inst.scores, inst.labels, 0.5);
    EXPECT_EQ(r.n, 120u);
    std::uint64_t total = 0;
    for (const auto& row : r.confusion)
        for (auto v : row) total += v;
    EXPECT_EQ(total, r.n);
    EXPECT_EQ(r.accuracy, static_cast<double>(r.confusion[0][0] + r.confusion[1][1]) / static_cast<double>(r.n));
    EXPECT_NE(report_json(r).find("\"auc_roc\""), std::string::npos);
    EXPECT_EQ(roc_csv(r.roc_points).rfind("fpr,tpr\n0,0\n", 0), 0u);
}

TEST(Evaluate, ThresholdIsConfigurable) {
    const std::vector<double> p = {0.55, 0.45};
    EXPECT_EQ(threshold_labels(p, 0.5), (std::vector<int>{1, 0}));
    EXPECT_EQ(threshold_labels(p, 0.6), (std::vector<int>{0, 0}));
    EXPECT_EQ(threshold_labels(std::vector<double>{0.5}, 0.5), std::vector<int>{1});
}
