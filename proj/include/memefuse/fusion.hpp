#pragma once

#include "memefuse/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace memefuse {

struct EmbeddingRecord;

enum class FusionMode { mm_only, cap_concat, cap_bilinear, senti, combined };

std::string_view to_string(FusionMode mode);
std::optional<FusionMode> parse_fusion_mode(std::string_view text);

constexpr bool uses_caption(FusionMode mode) {
    return mode == FusionMode::cap_concat || mode == FusionMode::cap_bilinear || mode == FusionMode::combined;
}
constexpr bool uses_bilinear(FusionMode mode) {
    return mode == FusionMode::cap_bilinear || mode == FusionMode::combined;
}
constexpr bool uses_sentiment(FusionMode mode) {
    return mode == FusionMode::senti || mode == FusionMode::combined;
}

struct FusionConfig {
    FusionMode mode = FusionMode::mm_only;
    Eigen::Index d_m = 768;
    Eigen::Index d_h = 768;
    Eigen::Index bilinear_dim = 768;
    Eigen::Index k = 3;

    friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

/// Throws ConfigError when a dimension is not positive.
void validate(const FusionConfig& config);

/// Length of the vector `assemble` produces. Block order is fixed:
/// [e_m ; h ; bilinear(e_m, h) ; sentiment], each present only when the mode uses it.
Eigen::Index feature_dim(const FusionConfig& config);

/// Third-order tensor M of shape (out, d_m, d_h) plus bias b. M is stored as an
/// out x (d_m*d_h) matrix whose column j + k*d_m holds M[.][j][k], so the
/// bilinear form becomes one product with vec(m h^T).
template <typename Scalar>
struct BilinearParams {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Matrix weight;
    Vector bias;
    Eigen::Index d_m = 0;
    Eigen::Index d_h = 0;

    static BilinearParams zeros(Eigen::Index out_dim, Eigen::Index d_m, Eigen::Index d_h) {
        BilinearParams p;
        p.weight = Matrix::Zero(out_dim, d_m * d_h);
        p.bias = Vector::Zero(out_dim);
        p.d_m = d_m;
        p.d_h = d_h;
        return p;
    }

    Eigen::Index out_dim() const { return bias.size(); }

    Scalar& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) { return weight(i, j + k * d_m); }
    Scalar operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const { return weight(i, j + k * d_m); }
};

/// Column-wise Kronecker product: column n of the result is vec(m_n h_n^T),
/// i.e. entry j + k*d_m equals m(j,n)*h(k,n).
template <typename DerivedM, typename DerivedH>
Eigen::Matrix<typename DerivedM::Scalar, Eigen::Dynamic, Eigen::Dynamic>
outer_columns(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedH>& h) {
    using Scalar = typename DerivedM::Scalar;
    const Eigen::Index d_m = m.rows();
    const Eigen::Index d_h = h.rows();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> z(d_m * d_h, m.cols());
    for (Eigen::Index n = 0; n < m.cols(); ++n) {
        for (Eigen::Index k = 0; k < d_h; ++k) {
            z.col(n).segment(k * d_m, d_m) = h(k, n) * m.col(n);
        }
    }
    return z;
}

template <typename Scalar>
void check_bilinear_shapes(const BilinearParams<Scalar>& params, Eigen::Index m_rows, Eigen::Index h_rows) {
    if (params.weight.rows() != params.bias.size() || params.weight.cols() != params.d_m * params.d_h) {
        throw ShapeError("bilinear parameters are internally inconsistent");
    }
    if (m_rows != params.d_m || h_rows != params.d_h) {
        throw ShapeError("bilinear operands have dims (" + std::to_string(m_rows) + ", " + std::to_string(h_rows) +
                         "), parameters expect (" + std::to_string(params.d_m) + ", " +
                         std::to_string(params.d_h) + ")");
    }
}

/// out[i] = sum_{j,k} m[j] M[i][j][k] h[k] + b[i]. Accepts single vectors or
/// column batches (one example per column).
template <typename DerivedM, typename DerivedH, typename Scalar = typename DerivedM::Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
bilinear_fuse(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedH>& h,
              const BilinearParams<Scalar>& params) {
    check_bilinear_shapes(params, m.rows(), h.rows());
    if (m.cols() != h.cols()) {
        throw ShapeError("bilinear operands have different batch sizes");
    }
    return (params.weight * outer_columns(m, h)).colwise() + params.bias;
}

template <typename Scalar>
struct BilinearGradient {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d_m;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d_h;
    BilinearParams<Scalar> d_params;
};

/// Reverse-mode gradients of bilinear_fuse for one example given the upstream
/// gradient g: dM[i][j][k] = g[i] m[j] h[k], db = g,
/// dm = G h and dh = G^T m with G[j][k] = sum_i g[i] M[i][j][k].
template <typename DerivedM, typename DerivedH, typename DerivedG, typename Scalar = typename DerivedM::Scalar>
BilinearGradient<Scalar> bilinear_backward(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedH>& h,
                                           const BilinearParams<Scalar>& params,
                                           const Eigen::MatrixBase<DerivedG>& g) {
    check_bilinear_shapes(params, m.rows(), h.rows());
    if (m.cols() != 1 || h.cols() != 1 || g.cols() != 1) {
        throw ShapeError("bilinear_backward takes single-example operands");
    }
    if (g.rows() != params.out_dim()) {
        throw ShapeError("upstream gradient has length " + std::to_string(g.rows()) + ", expected " +
                         std::to_string(params.out_dim()));
    }
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Matrix mixed = params.weight.transpose() * g;  // vec(G), d_m*d_h x 1
    const Eigen::Map<const Matrix> G(mixed.data(), params.d_m, params.d_h);

    BilinearGradient<Scalar> grad;
    grad.d_m = G * h;
    grad.d_h = G.transpose() * m;
    grad.d_params.d_m = params.d_m;
    grad.d_params.d_h = params.d_h;
    grad.d_params.weight = g * outer_columns(m, h).transpose();
    grad.d_params.bias = g;
    return grad;
}

/// M uniform in +-sqrt(6/(d_m+d_h))/sqrt(out_dim), b = 0.
template <typename Scalar, typename Rng>
BilinearParams<Scalar> init_bilinear(Eigen::Index out_dim, Eigen::Index d_m, Eigen::Index d_h, Rng& rng) {
    auto p = BilinearParams<Scalar>::zeros(out_dim, d_m, d_h);
    const double limit = std::sqrt(6.0 / static_cast<double>(d_m + d_h)) / std::sqrt(static_cast<double>(out_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Fill in logical (i, j, k) order so the draw sequence does not depend on storage layout.
    for (Eigen::Index i = 0; i < out_dim; ++i)
        for (Eigen::Index j = 0; j < d_m; ++j)
            for (Eigen::Index k = 0; k < d_h; ++k)
                p(i, j, k) = static_cast<Scalar>(dist(rng));
    return p;
}

/// [s_t ; s_v ; s_t + s_v]. Accepts single vectors or column batches.
template <typename DerivedT, typename DerivedV>
Eigen::Matrix<typename DerivedT::Scalar, Eigen::Dynamic, Eigen::Dynamic>
sentiment_feature(const Eigen::MatrixBase<DerivedT>& s_t, const Eigen::MatrixBase<DerivedV>& s_v) {
    if (s_t.rows() != s_v.rows() || s_t.cols() != s_v.cols()) {
        throw ConfigError("sentiment logits have mismatched dims (" + std::to_string(s_t.rows()) + " vs " +
                          std::to_string(s_v.rows()) + ")");
    }
    const Eigen::Index k = s_t.rows();
    Eigen::Matrix<typename DerivedT::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(3 * k, s_t.cols());
    out.topRows(k) = s_t;
    out.middleRows(k, k) = s_v;
    out.bottomRows(k) = s_t + s_v;
    return out;
}

/// Fused feature vector for one record. `bilinear` must be supplied exactly
/// when the mode uses it. Throws DataError naming the record id and channel
/// when a required channel is missing.
Eigen::VectorXd assemble(const EmbeddingRecord& record, const FusionConfig& config,
                         const BilinearParams<double>* bilinear = nullptr);

} // namespace memefuse
