#include "memefuse/dataset.hpp"
#include "memefuse/fusion.hpp"

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace memefuse;
using namespace memefuse::testing;

namespace {


EmbeddingRecord full_record(Eigen::Index dm, Eigen::Index dh, Eigen::Index k, std::mt19937_64& rng) {
    EmbeddingRecord r;
    r.id = "r";
    r.e_m = random_matrix(dm, 1, rng);
    r.h = random_matrix(dh, 1, rng);
    r.s_t = random_matrix(k, 1, rng);
    r.s_v = random_matrix(k, 1, rng);
    return r;
}

} // namespace

TEST(Bilinear, ZeroTensorReturnsBias) {
    auto p = BilinearParams<double>::zeros(2, 3, 4);
    p.bias << 0.5, -1.0;
    std::mt19937_64 rng(1);
    const Eigen::VectorXd out = bilinear_fuse(random_matrix(3, 1, rng), random_matrix(4, 1, rng), p);
    EXPECT_EQ(out, Eigen::Vector2d(0.5, -1.0));
}

TEST(Bilinear, HandComputedInstance) {
    auto p = BilinearParams<double>::zeros(1, 2, 2);
    p(0, 0, 1) = 1.0;  // M[0] = ((0,1),(0,0))
    const Eigen::VectorXd out = bilinear_fuse(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), p);
    ASSERT_EQ(out.size(), 1);
    EXPECT_EQ(out[0], 1.0);
    EXPECT_EQ(naive_bilinear(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), p)[0], 1.0);
}

TEST(Bilinear, LinearInEachArgument) {
    std::mt19937_64 rng(5);
    auto p = random_bilinear(4, 3, 5, rng);
    p.bias.setZero();
    const Eigen::VectorXd m = random_matrix(3, 1, rng), h = random_matrix(5, 1, rng);
    const Eigen::VectorXd once = bilinear_fuse(m, h, p);
    const Eigen::VectorXd twice = bilinear_fuse((2.0 * m).eval(), h, p);
    EXPECT_TRUE(twice.isApprox(2.0 * once, 1e-14));
}

TEST(Bilinear, MatchesTripleLoopOracle) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> dim(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const int out = dim(rng), dm = dim(rng), dh = dim(rng);
        const auto p = random_bilinear(out, dm, dh, rng);
        const Eigen::VectorXd m = random_matrix(dm, 1, rng), h = random_matrix(dh, 1, rng);
        const Eigen::VectorXd fast = bilinear_fuse(m, h, p);
        const Eigen::VectorXd slow = naive_bilinear(m, h, p);
        ASSERT_LE(relative_error(flat(fast), flat(slow)), 1e-12);
    }
}

TEST(Bilinear, BatchColumnsMatchSingleCalls) {
    std::mt19937_64 rng(3);
    const auto p = random_bilinear(3, 4, 2, rng);
    const Eigen::MatrixXd m = random_matrix(4, 5, rng), h = random_matrix(2, 5, rng);
    const Eigen::MatrixXd batch = bilinear_fuse(m, h, p);
    for (Eigen::Index c = 0; c < 5; ++c) {
        const Eigen::VectorXd single = naive_bilinear(m.col(c), h.col(c), p);
        EXPECT_LE(relative_error(flat(Eigen::VectorXd(batch.col(c))), flat(single)), 1e-12);
    }
}

TEST(Bilinear, ShapeMismatchThrows) {
    const auto p = BilinearParams<double>::zeros(2, 3, 4);
    EXPECT_THROW(bilinear_fuse(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(4), p), ShapeError);
    EXPECT_THROW(bilinear_backward(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4), p, Eigen::VectorXd::Zero(3)),
                 ShapeError);
}

TEST(BilinearBackward, ZeroUpstreamGivesZeroGradients) {
    std::mt19937_64 rng(8);
    const auto p = random_bilinear(3, 2, 4, rng);
    const auto g = bilinear_backward(random_matrix(2, 1, rng), random_matrix(4, 1, rng), p, Eigen::VectorXd::Zero(3));
    EXPECT_TRUE(g.d_m.isZero(0));
    EXPECT_TRUE(g.d_h.isZero(0));
    EXPECT_TRUE(g.d_params.weight.isZero(0));
    EXPECT_TRUE(g.d_params.bias.isZero(0));
}

TEST(BilinearBackward, BiasGradientEqualsUpstream) {
    std::mt19937_64 rng(9);
    const auto p = random_bilinear(5, 3, 3, rng);
    const Eigen::VectorXd up = random_matrix(5, 1, rng);
    const auto g = bilinear_backward(random_matrix(3, 1, rng), random_matrix(3, 1, rng), p, up);
    EXPECT_EQ(g.d_params.bias, up);
}

TEST(BilinearBackward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> dim(1, 4);
    for (int trial = 0; trial < 100; ++trial) {
        const int out = trial == 0 ? 2 : dim(rng), dm = trial == 0 ? 2 : dim(rng), dh = trial == 0 ? 2 : dim(rng);
        auto p = random_bilinear(out, dm, dh, rng);
        Eigen::VectorXd m = random_matrix(dm, 1, rng), h = random_matrix(dh, 1, rng);
        const Eigen::VectorXd up = random_matrix(out, 1, rng);
        const auto g = bilinear_backward(m, h, p, up);
        auto objective = [&] { return up.dot(naive_bilinear(m, h, p)); };

        EXPECT_LE(relative_error(flat(g.d_m), central_differences(flat_mut(m), objective)), 1e-6);
        EXPECT_LE(relative_error(flat(g.d_h), central_differences(flat_mut(h), objective)), 1e-6);
        EXPECT_LE(relative_error(flat(g.d_params.weight), central_differences(flat_mut(p.weight), objective)), 1e-6);
        EXPECT_LE(relative_error(flat(g.d_params.bias), central_differences(flat_mut(p.bias), objective)), 1e-6);
    }
}

TEST(BilinearInit, BoundedAndSeeded) {
    std::mt19937_64 a(4), b(4);
    const auto p = init_bilinear<double>(6, 5, 7, a);
    const auto q = init_bilinear<double>(6, 5, 7, b);
    EXPECT_EQ(p.weight, q.weight);
    const double limit = std::sqrt(6.0 / 12.0) / std::sqrt(6.0);
    EXPECT_LE(p.weight.cwiseAbs().maxCoeff(), limit);
    EXPECT_TRUE(p.bias.isZero(0));
}

TEST(Sentiment, ZerosAndDirectConstruction) {
    EXPECT_TRUE(sentiment_feature(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()).isZero(0));
    const Eigen::VectorXd f = sentiment_feature(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 0, 1));
    Eigen::VectorXd expected(9);
    expected << 1, 0, 0, 0, 0, 1, 1, 0, 1;
    EXPECT_EQ(f, expected);
}

TEST(Sentiment, PermutationEquivariance) {
    std::mt19937_64 rng(12);
    const Eigen::VectorXd st = random_matrix(3, 1, rng), sv = random_matrix(3, 1, rng);
    std::vector<int> pi = {2, 0, 1};
    Eigen::PermutationMatrix<3> perm;
    perm.indices() << pi[0], pi[1], pi[2];
    const Eigen::VectorXd base = sentiment_feature(st, sv);
    const Eigen::VectorXd permuted = sentiment_feature((perm * st).eval(), (perm * sv).eval());
    for (int block = 0; block < 3; ++block) {
        EXPECT_EQ(Eigen::VectorXd(permuted.segment(3 * block, 3)), perm * base.segment(3 * block, 3));
    }
}

TEST(Sentiment, DimensionMismatchIsConfigError) {
    EXPECT_THROW(sentiment_feature(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2)), ConfigError);
}

TEST(FeatureDim, PerMode) {
    FusionConfig c;
    c.mode = FusionMode::mm_only;
    EXPECT_EQ(feature_dim(c), 768);
    c.mode = FusionMode::senti;
    EXPECT_EQ(feature_dim(c), 777);
    c.mode = FusionMode::cap_concat;
    EXPECT_EQ(feature_dim(c), 1536);
    c.mode = FusionMode::cap_bilinear;
    EXPECT_EQ(feature_dim(c), 2304);
    c.mode = FusionMode::combined;
    EXPECT_EQ(feature_dim(c), 2313);
}

TEST(Assemble, MmOnlyIsIdentity) {
    std::mt19937_64 rng(2);
    const auto r = full_record(6, 4, 3, rng);
    FusionConfig c{FusionMode::mm_only, 6, 4, 5, 3};
    EXPECT_EQ(assemble(r, c), r.e_m);
}

TEST(Assemble, BlockOrderPerMode) {
    std::mt19937_64 rng(6);
    const auto r = full_record(4, 3, 3, rng);
    const auto p = random_bilinear(2, 4, 3, rng);

    FusionConfig c{FusionMode::combined, 4, 3, 2, 3};
    const Eigen::VectorXd x = assemble(r, c, &p);
    ASSERT_EQ(x.size(), 4 + 3 + 2 + 9);
    EXPECT_EQ(Eigen::VectorXd(x.head(4)), r.e_m);
    EXPECT_EQ(Eigen::VectorXd(x.segment(4, 3)), *r.h);
    EXPECT_LE(relative_error(flat(Eigen::VectorXd(x.segment(7, 2))), flat(naive_bilinear(r.e_m, *r.h, p))), 1e-12);
    EXPECT_EQ(Eigen::VectorXd(x.tail(9)), sentiment_feature(*r.s_t, *r.s_v));

    c.mode = FusionMode::senti;
    const Eigen::VectorXd s = assemble(r, c);
    EXPECT_EQ(Eigen::VectorXd(s.head(4)), r.e_m);
    EXPECT_EQ(Eigen::VectorXd(s.tail(9)), sentiment_feature(*r.s_t, *r.s_v));
}

// Property: length(assemble) == feature_dim for every mode on random records.
TEST(Assemble, LengthMatchesFeatureDim) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> dim(1, 9);
    for (int trial = 0; trial < 50; ++trial) {
        const int dm = dim(rng), dh = dim(rng), bd = dim(rng), k = dim(rng);
        const auto r = full_record(dm, dh, k, rng);
        const auto p = random_bilinear(bd, dm, dh, rng);
        for (auto mode : {FusionMode::mm_only, FusionMode::cap_concat, FusionMode::cap_bilinear, FusionMode::senti,
                          FusionMode::combined}) {
            FusionConfig c{mode, dm, dh, bd, k};
            const auto x = assemble(r, c, uses_bilinear(mode) ? &p : nullptr);
            ASSERT_EQ(x.size(), feature_dim(c));
            ASSERT_EQ(x, assemble(r, c, uses_bilinear(mode) ? &p : nullptr));
        }
    }
}

TEST(Assemble, MissingChannelNamesRecordAndChannel) {
    std::mt19937_64 rng(1);
    auto r = full_record(4, 3, 3, rng);
    r.id = "meme-42";
    r.h.reset();
    FusionConfig c{FusionMode::cap_concat, 4, 3, 2, 3};
    try {
        assemble(r, c);
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("meme-42"), std::string::npos);
        EXPECT_NE(msg.find("cap"), std::string::npos);
    }
}

TEST(Assemble, BilinearParamsRequiredExactlyWhenUsed) {
    std::mt19937_64 rng(1);
    const auto r = full_record(4, 3, 3, rng);
    const auto p = random_bilinear(2, 4, 3, rng);
    EXPECT_THROW(assemble(r, FusionConfig{FusionMode::cap_bilinear, 4, 3, 2, 3}), ConfigError);
    EXPECT_THROW(assemble(r, FusionConfig{FusionMode::cap_concat, 4, 3, 2, 3}, &p), ConfigError);
}
