#include "memefuse/train.hpp"

#include "memefuse/error.hpp"
#include "memefuse/loss.hpp"
#include "memefuse/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace memefuse {

std::string_view to_string(OptimizerKind kind) {
    return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

std::optional<OptimizerKind> parse_optimizer(std::string_view text) {
    if (text == "sgd") return OptimizerKind::sgd;
    if (text == "adam") return OptimizerKind::adam;
    return std::nullopt;
}

void Optimizer::step(Model& params, const Model& grad) {
    ++steps_;
    const double lr = settings_.learning_rate;
    if (settings_.kind == OptimizerKind::sgd) {
        for_each_tensor(params, grad, [lr](std::span<double> p, std::span<const double> g) {
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
        });
        return;
    }

    const double b1 = settings_.beta1;
    const double b2 = settings_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    std::size_t tensor = 0;
    for_each_tensor(params, grad, [&](std::span<double> p, std::span<const double> g) {
        if (tensor == first_.size()) {
            first_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size())));
            second_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size())));
        }
        Eigen::VectorXd& m = first_[tensor];
        Eigen::VectorXd& v = second_[tensor];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const auto e = static_cast<Eigen::Index>(i);
            m[e] = b1 * m[e] + (1.0 - b1) * g[i];
            v[e] = b2 * v[e] + (1.0 - b2) * g[i] * g[i];
            p[i] -= lr * (m[e] / correction1) / (std::sqrt(v[e] / correction2) + settings_.epsilon);
        }
        ++tensor;
    });
}

void validate(const TrainConfig& config) {
    const auto& o = config.optimizer;
    if (!(o.learning_rate >= 0.0) || !std::isfinite(o.learning_rate)) {
        throw ConfigError("train.learning_rate must be a finite non-negative number");
    }
    if (!(o.beta1 >= 0.0 && o.beta1 < 1.0) || !(o.beta2 >= 0.0 && o.beta2 < 1.0)) {
        throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
    }
    if (!(o.epsilon > 0.0)) throw ConfigError("train.epsilon must be positive");
    if (config.batch_size < 1) throw ConfigError("train.batch_size must be positive");
    if (config.max_epochs < 1) throw ConfigError("train.max_epochs must be positive");
    if (config.patience < 1) {
        throw ConfigError("train.patience must be at least 1");
    }
    for (auto w : config.hidden) {
        if (w < 1) throw ConfigError("train.hidden widths must be positive");
    }
    if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
        throw ConfigError("metrics.threshold must lie in [0, 1]");
    }
}

FusionConfig fusion_for_dataset(const Dataset& dataset, FusionMode mode, Eigen::Index bilinear_dim) {
    FusionConfig f;
    f.mode = mode;
    f.bilinear_dim = bilinear_dim;
    auto dim_of = [&](const char* channel, Eigen::Index fallback) -> Eigen::Index {
        auto it = dataset.channel_dims.find(channel);
        return it == dataset.channel_dims.end() ? fallback : static_cast<Eigen::Index>(it->second);
    };
    f.d_m = dim_of("mm", f.d_m);
    f.d_h = dim_of("cap", f.d_h);
    f.k = dim_of("senti_t", f.k);
    if (uses_caption(mode) && !dataset.has_channel("cap")) {
        throw DataError("dataset has no cap channel, required by mode " + std::string(to_string(mode)));
    }
    if (uses_sentiment(mode)) {
        for (const char* channel : {"senti_t", "senti_v"}) {
            if (!dataset.has_channel(channel)) {
                throw DataError("dataset has no " + std::string(channel) + " channel, required by mode " +
                                std::string(to_string(mode)));
            }
        }
        if (dataset.channel_dims.at("senti_t") != dataset.channel_dims.at("senti_v")) {
            throw ConfigError("senti_t and senti_v channels have different dims");
        }
    }
    return f;
}

namespace {

struct SplitScore {
    double loss = 0.0;
    double accuracy = 0.0;
    double auc = 0.0;
};

SplitScore score(const Model& model, const FeatureBatch& batch, double threshold, bool with_auc) {
    const std::vector<double> p = predict_proba(model, batch);
    SplitScore s;
    if (!std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); })) {
        s.loss = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    s.loss = bce_loss(p, batch.labels).mean;
    s.accuracy = accuracy(threshold_labels(p, threshold), batch.labels);
    if (with_auc) s.auc = auc_roc(p, batch.labels);
    return s;
}

} // namespace

TrainResult train(const Dataset& dataset, const FusionConfig& fusion, const TrainConfig& config) {
    validate(config);
    validate(fusion);
    const auto train_records = dataset.split(Split::train);
    const auto val_records = dataset.split(Split::val);
    if (train_records.empty()) throw ConfigError("train split is empty");
    if (val_records.empty()) throw ConfigError("val split is empty");

    const FeatureBatch train_batch = make_batch(train_records, fusion);
    const FeatureBatch val_batch = make_batch(val_records, fusion);
    if (train_batch.labels.size() != train_records.size() || val_batch.labels.size() != val_records.size()) {
        throw DataError("train and val splits must be fully labeled");
    }

    TrainResult result;
    result.initial = init_model(fusion, config.hidden, config.seed);
    Model model = result.initial;
    Optimizer optimizer(config.optimizer);
    Model grad = zeros_like(model);

    std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ull);
    std::vector<Eigen::Index> order(train_records.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    double best_auc = -std::numeric_limits<double>::infinity();
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        int batch_index = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
            ++batch_index;
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            const FeatureBatch batch =
                train_batch.select(std::span<const Eigen::Index>(order.data() + begin, end - begin));
            const double loss = loss_and_gradient(model, batch, grad);
            if (!std::isfinite(loss)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(batch_index),
                                    epoch, batch_index);
            }
            epoch_loss += loss;
            optimizer.step(model, grad);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = epoch_loss / static_cast<double>(order.size());
        const SplitScore on_train = score(model, train_batch, config.threshold, false);
        if (!std::isfinite(on_train.loss)) {
            throw TrainingError("non-finite predictions at epoch " + std::to_string(epoch), epoch, batch_index);
        }
        entry.train_accuracy = on_train.accuracy;
        const SplitScore val = score(model, val_batch, config.threshold, true);
        entry.val_loss = val.loss;
        entry.val_accuracy = val.accuracy;
        entry.val_auc = val.auc;
        if (!std::isfinite(val.loss)) {
            throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch), epoch, batch_index);
        }

        if (val.auc > best_auc || (val.auc == best_auc && val.loss < best_loss)) {
            best_auc = val.auc;
            best_loss = val.loss;
            result.model = model;
            result.best_epoch = epoch;
            entry.best = true;
            since_best = 0;
        } else {
            ++since_best;
        }
        result.log.push_back(entry);
        if (since_best >= config.patience) {
            break;
        }
    }
    result.best_val_auc = best_auc;
    return result;
}

std::string epoch_log_json(const EpochLog& entry) {
    nlohmann::ordered_json line;
    line["epoch"] = entry.epoch;
    line["train_loss"] = entry.train_loss;
    line["train_accuracy"] = entry.train_accuracy;
    line["val_loss"] = entry.val_loss;
    line["val_accuracy"] = entry.val_accuracy;
    line["val_auc"] = entry.val_auc;
    line["best"] = entry.best;
    return line.dump();
}

} // namespace memefuse
