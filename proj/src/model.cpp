#include "memefuse/model.hpp"

#include "memefuse/loss.hpp"
#include "memefuse/parallel.hpp"

#include <random>

namespace memefuse {

namespace {

constexpr Eigen::Index kPredictChunk = 64;

} // namespace

void validate(const Model& model) {
    validate(model.fusion);
    validate(model.mlp);
    if (model.mlp.input_dim() != feature_dim(model.fusion)) {
        throw ShapeError("MLP input width " + std::to_string(model.mlp.input_dim()) +
                         " does not match feature dim " + std::to_string(feature_dim(model.fusion)));
    }
    if (uses_bilinear(model.fusion.mode) != model.bilinear.has_value()) {
        throw ConfigError("bilinear parameters present/absent inconsistently with fusion mode");
    }
    if (model.bilinear) {
        const auto& b = *model.bilinear;
        if (b.d_m != model.fusion.d_m || b.d_h != model.fusion.d_h || b.out_dim() != model.fusion.bilinear_dim ||
            b.weight.rows() != b.out_dim() || b.weight.cols() != b.d_m * b.d_h) {
            throw ShapeError("bilinear parameter shape does not match fusion config");
        }
    }
}

Model init_model(const FusionConfig& fusion, const std::vector<Eigen::Index>& hidden, std::uint64_t seed) {
    validate(fusion);
    for (auto w : hidden) {
        if (w < 1) throw ConfigError("hidden widths must be positive");
    }
    std::mt19937_64 rng(seed);
    Model model;
    model.fusion = fusion;
    if (uses_bilinear(fusion.mode)) {
        model.bilinear = init_bilinear<double>(fusion.bilinear_dim, fusion.d_m, fusion.d_h, rng);
    }
    model.mlp = init_mlp<double>(feature_dim(fusion), hidden, rng);
    return model;
}

Model zeros_like(const Model& model) {
    Model out;
    out.fusion = model.fusion;
    if (model.bilinear) {
        out.bilinear = BilinearParams<double>::zeros(model.bilinear->out_dim(), model.bilinear->d_m,
                                                     model.bilinear->d_h);
    }
    out.mlp = zeros_like(model.mlp);
    return out;
}

FeatureBatch FeatureBatch::select(std::span<const Eigen::Index> columns) const {
    std::vector<Eigen::Index> idx(columns.begin(), columns.end());
    FeatureBatch out;
    out.mm = mm(Eigen::all, idx);
    if (cap.size() > 0) out.cap = cap(Eigen::all, idx);
    if (senti.size() > 0) out.senti = senti(Eigen::all, idx);
    if (!labels.empty()) {
        for (auto c : idx) out.labels.push_back(labels[static_cast<std::size_t>(c)]);
    }
    return out;
}

FeatureBatch make_batch(std::span<const EmbeddingRecord* const> records, const FusionConfig& fusion) {
    const auto n = static_cast<Eigen::Index>(records.size());
    FeatureBatch batch;
    batch.mm.resize(fusion.d_m, n);
    if (uses_caption(fusion.mode)) batch.cap.resize(fusion.d_h, n);
    if (uses_sentiment(fusion.mode)) batch.senti.resize(3 * fusion.k, n);

    auto fetch = [](const EmbeddingRecord& r, std::string_view channel, Eigen::Index dim) -> const Eigen::VectorXd& {
        const Eigen::VectorXd* v = r.channel(channel);
        if (v == nullptr) {
            throw DataError("record " + r.id + ": missing channel " + std::string(channel));
        }
        if (v->size() != dim) {
            throw ShapeError("record " + r.id + ": channel " + std::string(channel) + " has dim " +
                             std::to_string(v->size()) + ", expected " + std::to_string(dim));
        }
        return *v;
    };

    bool all_labeled = true;
    for (Eigen::Index c = 0; c < n; ++c) {
        const EmbeddingRecord& r = *records[static_cast<std::size_t>(c)];
        batch.mm.col(c) = fetch(r, "mm", fusion.d_m);
        if (uses_caption(fusion.mode)) batch.cap.col(c) = fetch(r, "cap", fusion.d_h);
        if (uses_sentiment(fusion.mode)) {
            batch.senti.col(c) = sentiment_feature(fetch(r, "senti_t", fusion.k), fetch(r, "senti_v", fusion.k));
        }
        all_labeled = all_labeled && r.label.has_value();
    }
    if (all_labeled) {
        for (const auto* r : records) batch.labels.push_back(*r->label);
    }
    return batch;
}

Eigen::MatrixXd assemble_batch(const Model& model, const FeatureBatch& batch, ForwardCache* cache) {
    const FusionConfig& f = model.fusion;
    const Eigen::Index n = batch.size();
    Eigen::MatrixXd x(feature_dim(f), n);
    Eigen::Index at = 0;
    x.middleRows(at, f.d_m) = batch.mm;
    at += f.d_m;
    if (uses_caption(f.mode)) {
        x.middleRows(at, f.d_h) = batch.cap;
        at += f.d_h;
    }
    if (uses_bilinear(f.mode)) {
        const auto& p = *model.bilinear;
        Eigen::MatrixXd outer = outer_columns(batch.mm, batch.cap);
        x.middleRows(at, f.bilinear_dim) = (p.weight * outer).colwise() + p.bias;
        at += f.bilinear_dim;
        if (cache) cache->outer = std::move(outer);
    }
    if (uses_sentiment(f.mode)) {
        x.middleRows(at, 3 * f.k) = batch.senti;
    }
    return x;
}

Eigen::MatrixXd model_forward(const Model& model, const FeatureBatch& batch, ForwardCache* cache) {
    const Eigen::MatrixXd x = assemble_batch(model, batch, cache);
    return mlp_forward(x, model.mlp, cache ? &cache->mlp : nullptr);
}

double loss_and_gradient(const Model& model, const FeatureBatch& batch, Model& grad) {
    if (batch.labels.size() != static_cast<std::size_t>(batch.size())) {
        throw DataError("cannot compute a loss on unlabeled records");
    }
    ForwardCache cache;
    const Eigen::MatrixXd logits = model_forward(model, batch, &cache);
    Eigen::MatrixXd d_logits;
    const double loss = softmax_ce_batch(logits, batch.labels, &d_logits);

    MlpGradient<double> mlp_grad = mlp_backward(cache.mlp, model.mlp, d_logits);
    grad.fusion = model.fusion;
    grad.mlp = std::move(mlp_grad.params);
    if (uses_bilinear(model.fusion.mode)) {
        const FusionConfig& f = model.fusion;
        const Eigen::Index offset = f.d_m + f.d_h;
        const auto d_fused = mlp_grad.d_input.middleRows(offset, f.bilinear_dim);
        BilinearParams<double> g;
        g.d_m = f.d_m;
        g.d_h = f.d_h;
        g.weight = d_fused * cache.outer.transpose();
        g.bias = d_fused.rowwise().sum();
        grad.bilinear = std::move(g);
    } else {
        grad.bilinear.reset();
    }
    return loss;
}

std::vector<double> predict_proba(const Model& model, const FeatureBatch& batch) {
    const Eigen::Index n = batch.size();
    std::vector<double> out(static_cast<std::size_t>(n));
    const auto chunks = static_cast<std::size_t>((n + kPredictChunk - 1) / kPredictChunk);
    parallel_chunks(chunks, [&](std::size_t chunk) {
        const Eigen::Index begin = static_cast<Eigen::Index>(chunk) * kPredictChunk;
        const Eigen::Index len = std::min(kPredictChunk, n - begin);
        FeatureBatch part;
        part.mm = batch.mm.middleCols(begin, len);
        if (batch.cap.size() > 0) part.cap = batch.cap.middleCols(begin, len);
        if (batch.senti.size() > 0) part.senti = batch.senti.middleCols(begin, len);
        const Eigen::MatrixXd probs = softmax(model_forward(model, part));
        for (Eigen::Index c = 0; c < len; ++c) {
            out[static_cast<std::size_t>(begin + c)] = probs(1, c);
        }
    });
    return out;
}

void for_each_tensor(Model& params, const Model& other,
                     const std::function<void(std::span<double>, std::span<const double>)>& fn) {
    auto visit = [&](auto& p, const auto& o) {
        if (p.size() != o.size()) {
            throw ShapeError("parameter structures differ");
        }
        fn(std::span<double>(p.data(), static_cast<std::size_t>(p.size())),
           std::span<const double>(o.data(), static_cast<std::size_t>(o.size())));
    };
    if (params.bilinear.has_value() != other.bilinear.has_value() ||
        params.mlp.layers.size() != other.mlp.layers.size()) {
        throw ShapeError("parameter structures differ");
    }
    if (params.bilinear) {
        visit(params.bilinear->weight, other.bilinear->weight);
        visit(params.bilinear->bias, other.bilinear->bias);
    }
    for (std::size_t l = 0; l < params.mlp.layers.size(); ++l) {
        visit(params.mlp.layers[l].weight, other.mlp.layers[l].weight);
        visit(params.mlp.layers[l].bias, other.mlp.layers[l].bias);
    }
}

std::size_t parameter_count(const Model& model) {
    std::size_t n = 0;
    if (model.bilinear) n += static_cast<std::size_t>(model.bilinear->weight.size() + model.bilinear->bias.size());
    for (const auto& l : model.mlp.layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

} // namespace memefuse
