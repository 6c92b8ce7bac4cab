// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "memefuse/channel_file.hpp"
#include "memefuse/checkpoint.hpp"
#include "memefuse/cli.hpp"
#include "memefuse/fusion.hpp"
#include "memefuse/loss.hpp"
#include "memefuse/metrics.hpp"

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

using namespace memefuse;
using namespace memefuse::testing;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradientTolerance = 1e-6;
constexpr int kGradientInstances = 100;
constexpr double kGradientBudgetSeconds = 10.0;
constexpr double kOracleTolerance = 1e-12;
constexpr double kLossIdentityTolerance = 1e-12;
constexpr double kSpotTolerance = 1e-9;
constexpr double kBilinearMargin = 0.05;
constexpr double kConcatMargin = 0.02;
constexpr double kDirectionalBudgetSeconds = 300.0;

// Directional experiment. Channel dims are reduced from 768 so the bilinear
// tensor (out x d_m x d_h) fits in memory and trains in minutes.
constexpr std::uint64_t kSynthSeed = 7;
constexpr std::uint64_t kTrainSeed = 1;
constexpr int kDirectionalDim = 64;
constexpr int kDirectionalBilinearDim = 32;

struct Verdict {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

Outcome cli_ok(const std::vector<std::string>& args) {
    Outcome r = cli(args);
    if (r.code != 0) throw std::runtime_error(args.front() + " exited " + std::to_string(r.code) + ": " + r.err);
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

fs::path gen_synth(const fs::path& root, const std::string& name, std::size_t n, int d_m, int d_h) {
    nlohmann::json j;
    j["synth"] = {{"n", n}, {"seed", kSynthSeed}, {"d_m", d_m}, {"d_h", d_h}, {"noise_sigma", 0.1}};
    j["output"] = {{"dir", (root / name).string()}};
    spit(root / (name + ".json"), j.dump(2));
    cli_ok({"gen-synth", (root / (name + ".json")).string()});
    return root / name;
}

fs::path write_train_config(const fs::path& root, const fs::path& data, const std::string& mode,
                            const std::string& tag, std::vector<int> hidden, int max_epochs) {
    nlohmann::json j;
    j["dataset"] = {{"dir", data.string()}};
    j["fusion"] = {{"mode", mode}, {"bilinear_dim", kDirectionalBilinearDim}};
    j["train"] = {{"max_epochs", max_epochs}, {"seed", kTrainSeed}, {"hidden", hidden}};
    j["output"] = {{"dir", (root / ("run-" + tag)).string()}};
    const fs::path path = root / ("train-" + tag + ".json");
    spit(path, j.dump(2));
    return path;
}

Verdict gradient_suite() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> dim(1, 4);
    double worst = 0.0;
    int instances = 0;

    for (int i = 0; i < kGradientInstances; ++i, ++instances) {
        const int out = dim(rng), dm = dim(rng), dh = dim(rng);
        auto p = random_bilinear(out, dm, dh, rng);
        Eigen::VectorXd m = random_matrix(dm, 1, rng), h = random_matrix(dh, 1, rng);
        const Eigen::VectorXd up = random_matrix(out, 1, rng);
        const auto g = bilinear_backward(m, h, p, up);
        auto objective = [&] { return up.dot(naive_bilinear(m, h, p)); };
        worst = std::max({worst, relative_error(flat(g.d_m), central_differences(flat_mut(m), objective)),
                          relative_error(flat(g.d_h), central_differences(flat_mut(h), objective)),
                          relative_error(flat(g.d_params.weight), central_differences(flat_mut(p.weight), objective)),
                          relative_error(flat(g.d_params.bias), central_differences(flat_mut(p.bias), objective))});
    }

    const std::array modes = {FusionMode::mm_only, FusionMode::cap_concat, FusionMode::cap_bilinear, FusionMode::senti,
                              FusionMode::combined};
    for (int i = 0; i < kGradientInstances; ++i, ++instances) {
        const FusionConfig f{modes[static_cast<std::size_t>(i) % modes.size()], dim(rng) + 1, dim(rng), dim(rng), 3};
        std::vector<Eigen::Index> hidden = {dim(rng) + 1};
        if (i % 4 == 3) hidden.push_back(dim(rng) + 1);
        Model model = init_model(f, hidden, rng());
        for (auto& layer : model.mlp.layers) layer.bias = random_matrix(layer.bias.size(), 1, rng, 0.5);
        if (model.bilinear) model.bilinear->bias = random_matrix(model.bilinear->bias.size(), 1, rng, 0.3);
        const FeatureBatch batch = random_batch(f, 1 + i % 4, rng);
        worst = std::max(worst, worst_gradient_error(model, batch));
    }

    std::uniform_real_distribution<double> prob(0.02, 0.98);
    for (int i = 0; i < kGradientInstances; ++i, ++instances) {
        std::vector<double> p = {prob(rng)};
        const std::vector<int> y = {i % 2};
        const auto numeric = central_differences(p, [&] { return bce_loss(p, y).sum; }, 1e-6);
        worst = std::max(worst, std::abs(bce_gradient(p[0], y[0]) - numeric[0]) / std::abs(numeric[0]));
    }

    const double took = seconds_since(start);
    return {worst <= kGradientTolerance && took < kGradientBudgetSeconds,
            fmt("%d instances (bilinear, model/MLP, bce), max relative error %.3g <= %g, %.2f s < %.0f s", instances,
                worst, kGradientTolerance, took, kGradientBudgetSeconds)};
}

Verdict oracle_equivalence() {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> dim(1, 8);
    double bilinear_worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int out = dim(rng), dm = dim(rng), dh = dim(rng);
        const auto p = random_bilinear(out, dm, dh, rng);
        const Eigen::VectorXd m = random_matrix(dm, 1, rng), h = random_matrix(dh, 1, rng);
        const Eigen::VectorXd fast = bilinear_fuse(m, h, p);
        bilinear_worst = std::max(bilinear_worst, relative_error(flat(fast), flat(naive_bilinear(m, h, p))));
    }

    double auc_worst = 0.0, trapezoid_worst = 0.0;
    std::uniform_int_distribution<std::size_t> size(2, 500);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> bucket(0, 9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = size(rng);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        do {
            for (std::size_t i = 0; i < n; ++i) {
                scores[i] = trial % 2 == 0 ? bucket(rng) / 10.0 : u(rng);
                labels[i] = u(rng) < 0.4 ? 1 : 0;
            }
        } while (std::count(labels.begin(), labels.end(), 1) % static_cast<long>(n) == 0);
        const double oracle = brute_force_auc(scores, labels);
        auc_worst = std::max(auc_worst, std::abs(auc_roc(scores, labels) - oracle));
        trapezoid_worst = std::max(trapezoid_worst, std::abs(trapezoid_area(roc_curve(scores, labels)) - oracle));
    }
    return {bilinear_worst <= kOracleTolerance && auc_worst <= kOracleTolerance && trapezoid_worst <= kOracleTolerance,
            fmt("bilinear vs triple loop %.3g, sorted AUC vs pair count %.3g, trapezoid vs pair count %.3g (tol %g)",
                bilinear_worst, auc_worst, trapezoid_worst, kOracleTolerance)};
}

Verdict loss_identities() {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> z_dist(-30.0, 30.0);
    double worst = 0.0, worst_z = 0.0;
    int worst_y = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const double z = z_dist(rng);
        for (int y : {0, 1}) {
            const std::vector<double> p = {sigmoid(z)};
            const std::vector<int> ys = {y};
            const double err = std::abs(softmax_ce(Eigen::Vector2d(0.0, z), y) - bce_loss(p, ys).sum);
            if (err > worst) {
                worst = err;
                worst_z = z;
                worst_y = y;
            }
        }
    }

    const double symmetric = softmax_ce(Eigen::Vector2d(0.7, 0.7), 1);
    const std::vector<double> half = {0.5};
    const double singleton = bce_loss(half, std::vector<int>{1}).sum;
    const std::vector<double> pair = {0.8, 0.2};
    const double batch = bce_loss(pair, std::vector<int>{1, 0}).sum;
    const double spot_worst = std::max({std::abs(symmetric - std::log(2.0)), std::abs(singleton - std::log(2.0)),
                                        std::abs(batch - 2.0 * -std::log(0.8))});
    const bool spot_literal = std::abs(batch - 0.446287) < 5e-7;

    return {worst <= kLossIdentityTolerance && spot_worst <= kSpotTolerance && spot_literal,
            fmt("softmax_ce vs bce(sigmoid) over z in [-30,30]: max |diff| %.3g at z=%.3f y=%d (tol %g); "
                "spot values max |diff| %.3g (tol %g), two-example batch %.9f",
                worst, worst_z, worst_y, kLossIdentityTolerance, spot_worst, kSpotTolerance, batch)};
}

Verdict serialization(const fs::path& root, const fs::path& generated) {
    std::mt19937_64 rng(5);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    bool channel_ok = true;
    for (std::uint32_t dim : {1u, 3u, 768u}) {
        std::vector<std::vector<float>> rows(97, std::vector<float>(dim));
        for (auto& r : rows)
            for (auto& v : r) v = normal(rng);
        const auto bytes = write_channel(rows, dim);
        const ChannelData back = read_channel(bytes);
        for (std::size_t i = 0; i < rows.size(); ++i)
            channel_ok = channel_ok && std::memcmp(back.rows.row(static_cast<Eigen::Index>(i)).data(), rows[i].data(),
                                                   dim * sizeof(float)) == 0;
        channel_ok = channel_ok && write_channel(back.rows) == bytes;
    }

    bool checkpoint_ok = true;
    std::uint64_t seed = 1;
    for (auto mode : {FusionMode::mm_only, FusionMode::cap_concat, FusionMode::cap_bilinear, FusionMode::senti,
                      FusionMode::combined}) {
        const Model model = init_model(FusionConfig{mode, 9, 7, 5, 3}, {8, 4}, seed++);
        save_checkpoint(root / "roundtrip.mfm", model);
        checkpoint_ok = checkpoint_ok && encode_checkpoint(load_checkpoint(root / "roundtrip.mfm")) ==
                                             encode_checkpoint(model);
    }

    const fs::path small = gen_synth(root, "fixtures", 60, 16, 12);
    int accepted = 0;
    for (const fs::path& dir : {generated, small}) accepted += cli({"inspect", dir.string()}).code == 0;

    auto corrupt = [&](const std::string& name, const std::function<void(const fs::path&)>& damage) {
        const fs::path dir = root / ("corrupt-" + name);
        fs::copy(small, dir, fs::copy_options::recursive);
        damage(dir);
        return cli({"inspect", dir.string()}).code == 4;
    };
    auto edit_manifest = [](const fs::path& dir, const std::function<void(std::vector<std::string>&)>& f) {
        auto rows = lines(slurp(dir / "manifest.jsonl"));
        f(rows);
        std::string text;
        for (const auto& r : rows) text += r + '\n';
        spit(dir / "manifest.jsonl", text);
    };
    int rejected = 0;
    rejected += corrupt("magic", [&](const fs::path& d) {
        auto b = slurp(d / "mm.mfe");
        b[0] = 'Z';
        spit(d / "mm.mfe", b);
    });
    rejected += corrupt("truncated", [&](const fs::path& d) {
        auto b = slurp(d / "cap.mfe");
        spit(d / "cap.mfe", b.substr(0, b.size() - 1));
    });
    rejected += corrupt("nan", [&](const fs::path& d) {
        auto b = slurp(d / "mm.mfe");
        const float q = std::numeric_limits<float>::quiet_NaN();
        std::memcpy(b.data() + 20 + 16 * 4 * 2 + 4, &q, 4);
        spit(d / "mm.mfe", b);
    });
    rejected += corrupt("dangling", [&](const fs::path& d) {
        edit_manifest(d, [](auto& rows) {
            auto j = nlohmann::json::parse(rows[0]);
            j["channels"]["mm"] = 60;
            rows[0] = j.dump();
        });
    });
    rejected += corrupt("duplicate", [&](const fs::path& d) {
        edit_manifest(d, [](auto& rows) { rows.push_back(rows[2]); });
    });

    return {channel_ok && checkpoint_ok && accepted == 2 && rejected == 5,
            fmt("channel round trip %s, checkpoint round trip %s, inspect accepted %d/2 generated, "
                "rejected %d/5 corrupted with exit 4",
                channel_ok ? "bit-exact" : "MISMATCH", checkpoint_ok ? "bit-exact" : "MISMATCH", accepted, rejected)};
}

Verdict determinism(const fs::path& root) {
    const fs::path data = gen_synth(root, "determinism", 200, 24, 16);
    const fs::path config = write_train_config(root, data, "combined", "det", {32}, 6);
    cli_ok({"train", config.string()});
    const std::string ckpt = slurp(root / "run-det" / "model.mfm");
    const std::string log = slurp(root / "run-det" / "train_log.jsonl");
    fs::remove_all(root / "run-det");
    cli_ok({"train", config.string()});
    const bool same_ckpt = slurp(root / "run-det" / "model.mfm") == ckpt;
    const bool same_log = slurp(root / "run-det" / "train_log.jsonl") == log;
    return {same_ckpt && same_log && !ckpt.empty(),
            fmt("combined mode, seed %llu, trained twice: checkpoint %s (%zu bytes), log %s",
                static_cast<unsigned long long>(kTrainSeed), same_ckpt ? "identical" : "DIFFERS", ckpt.size(),
                same_log ? "identical" : "DIFFERS")};
}

struct ModeResult {
    double accuracy = 0.0;
    double auc = 0.0;
    double seconds = 0.0;
    nlohmann::json report;
};

ModeResult run_mode(const fs::path& root, const fs::path& data, const std::string& mode) {
    const auto start = Clock::now();
    const fs::path config = write_train_config(root, data, mode, mode, {768}, 30);
    cli_ok({"train", config.string()});
    const fs::path run = root / ("run-" + mode);
    const Outcome eval = cli_ok({"evaluate", "--checkpoint", (run / "model.mfm").string(), "--data", data.string(),
                                 "--split", "test"});
    ModeResult r;
    r.report = nlohmann::json::parse(eval.out);
    r.accuracy = r.report.at("accuracy").get<double>();
    r.auc = r.report.at("auc_roc").get<double>();
    r.seconds = seconds_since(start);
    std::cout << fmt("       %-13s test accuracy %.3f  AUCROC %.4f  (%.1f s)\n", mode.c_str(), r.accuracy, r.auc,
                     r.seconds);
    return r;
}

struct Directional {
    Verdict captioning;
    Verdict sentiment;
};

Directional directional(const fs::path& data, const fs::path& root) {
    const auto start = Clock::now();
    std::map<std::string, ModeResult> results;
    for (const char* mode : {"mm_only", "cap_concat", "cap_bilinear", "senti", "combined"})
        results[mode] = run_mode(root, data, mode);
    const double took = seconds_since(start);

    const double base = results["mm_only"].accuracy;
    const double bilinear_gain = results["cap_bilinear"].accuracy - base;
    const double concat_gain = results["cap_concat"].accuracy - base;
    const double senti_gain = results["senti"].accuracy - base;

    const auto& combined = results["combined"].report;
    bool well_formed = true;
    for (const char* key : {"n", "threshold", "accuracy", "auc_roc", "tn", "fp", "fn", "tp"})
        well_formed = well_formed && combined.contains(key);
    if (well_formed) {
        const auto n = combined["n"].get<std::uint64_t>();
        const auto total = combined["tn"].get<std::uint64_t>() + combined["fp"].get<std::uint64_t>() +
                           combined["fn"].get<std::uint64_t>() + combined["tp"].get<std::uint64_t>();
        const double acc = combined["accuracy"].get<double>(), auc = combined["auc_roc"].get<double>();
        well_formed = n == total && n > 0 && acc >= 0.0 && acc <= 1.0 && auc >= 0.0 && auc <= 1.0;
    }

    Directional d;
    d.captioning = {bilinear_gain >= kBilinearMargin && concat_gain >= kConcatMargin && took < kDirectionalBudgetSeconds,
                    fmt("cap_bilinear - mm_only = %+.1f pts (>= %.0f), cap_concat - mm_only = %+.1f pts (>= %.0f), "
                        "all five modes in %.1f s (< %.0f s)",
                        100 * bilinear_gain, 100 * kBilinearMargin, 100 * concat_gain, 100 * kConcatMargin, took,
                        kDirectionalBudgetSeconds)};
    d.sentiment = {senti_gain > 0.0 && well_formed,
                   fmt("senti - mm_only = %+.1f pts (> 0), combined report %s (accuracy %.3f)", 100 * senti_gain,
                       well_formed ? "well-formed" : "MALFORMED", results["combined"].accuracy)};
    return d;
}

void report(const std::string& name, const std::function<Verdict()>& check, int& failures) {
    Verdict v;
    try {
        v = check();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << name << ": " << v.detail << std::endl;
    failures += v.pass ? 0 : 1;
}

} // namespace

int main() {
    TempDir root("acceptance");
    int failures = 0;

    report("gradient suite", gradient_suite, failures);
    report("oracle equivalence", oracle_equivalence, failures);
    report("loss identities", loss_identities, failures);

    fs::path generated;
    try {
        generated = gen_synth(root.path(), "directional", 1000, kDirectionalDim, kDirectionalDim);
    } catch (const std::exception& e) {
        std::cout << "note: synthetic dataset generation failed: " << e.what() << std::endl;
    }
    report("serialization", [&] { return serialization(root.path(), generated); }, failures);
    report("determinism", [&] { return determinism(root.path()); }, failures);

    std::optional<Directional> d;
    auto run_directional = [&]() -> Directional& {
        if (!d) d = directional(generated, root.path());
        return *d;
    };
    report("directional, captioning", [&] { return run_directional().captioning; }, failures);
    report("directional, sentiment and combined", [&] { return run_directional().sentiment; }, failures);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
