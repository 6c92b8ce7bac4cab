#include "memefuse/fusion.hpp"

#include "memefuse/dataset.hpp"

namespace memefuse {

std::string_view to_string(FusionMode mode) {
    switch (mode) {
    case FusionMode::mm_only: return "mm_only";
    case FusionMode::cap_concat: return "cap_concat";
    case FusionMode::cap_bilinear: return "cap_bilinear";
    case FusionMode::senti: return "senti";
    case FusionMode::combined: return "combined";
    }
    return "?";
}

std::optional<FusionMode> parse_fusion_mode(std::string_view text) {
    for (auto mode : {FusionMode::mm_only, FusionMode::cap_concat, FusionMode::cap_bilinear, FusionMode::senti,
                      FusionMode::combined}) {
        if (text == to_string(mode)) {
            return mode;
        }
    }
    return std::nullopt;
}

void validate(const FusionConfig& config) {
    if (config.d_m < 1 || config.d_h < 1 || config.bilinear_dim < 1 || config.k < 1) {
        throw ConfigError("fusion dims must be positive");
    }
}

Eigen::Index feature_dim(const FusionConfig& config) {
    Eigen::Index dim = config.d_m;
    if (uses_caption(config.mode)) dim += config.d_h;
    if (uses_bilinear(config.mode)) dim += config.bilinear_dim;
    if (uses_sentiment(config.mode)) dim += 3 * config.k;
    return dim;
}

namespace {

const Eigen::VectorXd& require(const EmbeddingRecord& record, std::string_view channel, Eigen::Index dim) {
    const Eigen::VectorXd* v = record.channel(channel);
    if (v == nullptr) {
        throw DataError("record " + record.id + ": missing channel " + std::string(channel));
    }
    if (v->size() != dim) {
        throw ShapeError("record " + record.id + ": channel " + std::string(channel) + " has dim " +
                         std::to_string(v->size()) + ", expected " + std::to_string(dim));
    }
    return *v;
}

} // namespace

Eigen::VectorXd assemble(const EmbeddingRecord& record, const FusionConfig& config,
                         const BilinearParams<double>* bilinear) {
    if (uses_bilinear(config.mode) != (bilinear != nullptr)) {
        throw ConfigError(std::string("bilinear parameters must be supplied exactly when mode uses them (mode ") +
                          std::string(to_string(config.mode)) + ")");
    }
    Eigen::VectorXd out(feature_dim(config));
    Eigen::Index at = 0;
    const auto& m = require(record, "mm", config.d_m);
    out.segment(at, config.d_m) = m;
    at += config.d_m;
    if (uses_caption(config.mode)) {
        const auto& h = require(record, "cap", config.d_h);
        out.segment(at, config.d_h) = h;
        at += config.d_h;
        if (uses_bilinear(config.mode)) {
            if (bilinear->out_dim() != config.bilinear_dim) {
                throw ShapeError("bilinear output dim does not match fusion config");
            }
            out.segment(at, config.bilinear_dim) = bilinear_fuse(m, h, *bilinear);
            at += config.bilinear_dim;
        }
    }
    if (uses_sentiment(config.mode)) {
        const auto& s_t = require(record, "senti_t", config.k);
        const auto& s_v = require(record, "senti_v", config.k);
        out.segment(at, 3 * config.k) = sentiment_feature(s_t, s_v);
    }
    return out;
}

} // namespace memefuse
