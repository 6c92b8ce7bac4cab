#include "memefuse/cli.hpp"

#include "memefuse/checkpoint.hpp"
#include "memefuse/config.hpp"
#include "memefuse/error.hpp"
#include "memefuse/metrics.hpp"
#include "memefuse/synth.hpp"
#include "memefuse/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace memefuse {

namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

Split require_split(const std::string& text) {
    auto split = parse_split(text);
    if (!split) throw ConfigError("--split must be train, val or test");
    return *split;
}

struct Scored {
    std::vector<const EmbeddingRecord*> records;
    std::vector<double> p_hats;
};

Scored score_split(const Model& model, const Dataset& dataset, Split split) {
    Scored s;
    s.records = dataset.split(split);
    if (!s.records.empty()) s.p_hats = predict_proba(model, make_batch(s.records, model.fusion));
    return s;
}

int cmd_gen_synth(const std::string& config_path, std::optional<std::uint64_t> seed,
                  const std::string& out_dir, std::ostream& out) {
    SynthRunConfig rc = parse_synth_config(config_path);
    if (seed) rc.synth.seed = *seed;
    if (!out_dir.empty()) rc.output_dir = out_dir;
    const SynthDataset data = generate(rc.synth);
    write_synth(rc.output_dir, data);

    TagMap tags(data.tags.begin(), data.tags.end());
    out << "wrote " << data.entries.size() << " records to " << rc.output_dir.string() << '\n'
        << format_composition(describe(data.to_dataset(), tags));
    return 0;
}

int cmd_inspect(const std::string& dir, std::ostream& out) {
    const DatasetPaths paths = dataset_paths_for_dir(dir);
    const Dataset dataset = load_dataset(paths);
    out << "dataset " << dir << ": " << dataset.records.size() << " records\n";
    for (const auto& [name, dim] : dataset.channel_dims) {
        out << "  channel " << name << ": dim " << dim << '\n';
    }
    TagMap tags;
    if (!paths.tags.empty()) tags = read_tags(paths.tags);
    out << format_composition(describe(dataset, tags));
    out << "ok\n";
    return 0;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir,
              std::ostream& out) {
    RunConfig rc = parse_run_config(config_path);
    if (seed) rc.train.seed = *seed;
    if (!out_dir.empty()) rc.output_dir = out_dir;

    const Dataset dataset = load_dataset(rc.dataset);
    const FusionConfig fusion = fusion_for_dataset(dataset, rc.mode, rc.bilinear_dim);
    auto check_dim = [](const std::optional<Eigen::Index>& wanted, Eigen::Index actual, const char* key) {
        if (wanted && *wanted != actual) {
            throw DataError(std::string("fusion.") + key + " = " + std::to_string(*wanted) +
                            " but the dataset's channel has dim " + std::to_string(actual));
        }
    };
    check_dim(rc.d_m, fusion.d_m, "d_m");
    if (uses_caption(fusion.mode)) check_dim(rc.d_h, fusion.d_h, "d_h");
    if (uses_sentiment(fusion.mode)) check_dim(rc.k, fusion.k, "k");

    const auto start = std::chrono::steady_clock::now();
    const TrainResult result = train(dataset, fusion, rc.train);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    fs::create_directories(rc.output_dir);
    save_checkpoint(rc.output_dir / "model.mfm", result.model);
    std::string log;
    for (const auto& entry : result.log) log += epoch_log_json(entry) + '\n';
    nlohmann::ordered_json summary;
    summary["best_epoch"] = result.best_epoch;
    summary["best_val_auc"] = result.best_val_auc;
    summary["mode"] = std::string(to_string(fusion.mode));
    summary["seed"] = rc.train.seed;
    log += summary.dump() + '\n';
    write_text(rc.output_dir / "train_log.jsonl", log);

    out << "mode " << to_string(fusion.mode) << ", " << result.log.size() << " epochs, best epoch "
        << result.best_epoch << " (val AUCROC " << result.best_val_auc << ")\n";
    char took[64];
    std::snprintf(took, sizeof took, "%.2f", seconds);
    out << "trained in " << took << " s; checkpoint " << (rc.output_dir / "model.mfm").string() << '\n';
    return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data, const std::string& split_name,
                 double threshold, std::string report_path, const std::string& roc_path, std::ostream& out) {
    const Split split = require_split(split_name);
    const Model model = load_checkpoint(checkpoint);
    const Dataset dataset = load_dataset(dataset_paths_for_dir(data));
    const Scored scored = score_split(model, dataset, split);
    std::vector<int> labels;
    for (const auto* r : scored.records) {
        if (!r->label) throw DataError("record " + r->id + " in split " + split_name + " has no label");
        labels.push_back(*r->label);
    }
    const EvalReport report = evaluate(scored.p_hats, labels, threshold);
    const std::string text = report_json(report) + '\n';
    out << text;
    if (report_path.empty()) {
        report_path = (fs::path(checkpoint).parent_path() / ("report_" + split_name + ".json")).string();
    }
    write_text(report_path, text);
    if (!roc_path.empty()) write_text(roc_path, roc_csv(report.roc_points));
    return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& data, const std::string& split_name,
                double threshold, const std::string& out_path, std::ostream& out) {
    const Split split = require_split(split_name);
    const Model model = load_checkpoint(checkpoint);
    const Dataset dataset = load_dataset(dataset_paths_for_dir(data));
    const Scored scored = score_split(model, dataset, split);
    std::string rows;
    char line[64];
    for (std::size_t i = 0; i < scored.records.size(); ++i) {
        const double p = scored.p_hats[i];
        std::snprintf(line, sizeof line, ",%.9f,%d\n", p, p >= threshold ? 1 : 0);
        rows += scored.records[i]->id + line;
    }
    if (out_path.empty()) {
        out << rows;
    } else {
        write_text(out_path, rows);
    }
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"memefuse: late-fusion multimodal meme classifier", "memefuse"};
    app.require_subcommand(1);

    std::string config_path, data_dir, checkpoint, split = "val", out_dir, out_file, roc_file;
    std::optional<std::uint64_t> seed;
    double threshold = 0.5;

    auto* gen = app.add_subcommand("gen-synth", "generate a seeded synthetic dataset");
    gen->add_option("config", config_path, "generator config (JSON)")->required();
    gen->add_option("--seed", seed, "override synth.seed");
    gen->add_option("--out", out_dir, "override output.dir");

    auto* inspect = app.add_subcommand("inspect", "validate a dataset directory and print its composition");
    inspect->add_option("dir", data_dir, "dataset directory")->required();

    auto* trn = app.add_subcommand("train", "train a classifier from an experiment config");
    trn->add_option("config", config_path, "experiment config (JSON)")->required();
    trn->add_option("--seed", seed, "override train.seed");
    trn->add_option("--out", out_dir, "override output.dir");

    auto* eval = app.add_subcommand("evaluate", "score a labeled split and report metrics");
    eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    eval->add_option("--data", data_dir, "dataset directory")->required();
    eval->add_option("--split", split, "train, val or test");
    eval->add_option("--threshold", threshold, "decision threshold on P(hateful)");
    eval->add_option("--out", out_file, "report path (default: next to the checkpoint)");
    eval->add_option("--roc", roc_file, "write ROC points as CSV");

    auto* pred = app.add_subcommand("predict", "print id,p_hat,label_hat rows for a split");
    pred->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    pred->add_option("--data", data_dir, "dataset directory")->required();
    pred->add_option("--split", split, "train, val or test");
    pred->add_option("--threshold", threshold, "decision threshold on P(hateful)");
    pred->add_option("--out", out_file, "write rows to a file instead of stdout");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*gen) return cmd_gen_synth(config_path, seed, out_dir, out);
        if (*inspect) return cmd_inspect(data_dir, out);
        if (*trn) return cmd_train(config_path, seed, out_dir, out);
        if (*eval) return cmd_evaluate(checkpoint, data_dir, split, threshold, out_file, roc_file, out);
        if (*pred) return cmd_predict(checkpoint, data_dir, split, threshold, out_file, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace memefuse
