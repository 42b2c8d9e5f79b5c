#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "pamic/dataset_io.hpp"
#include "pamic/error.hpp"
#include "pamic/evaluation.hpp"
#include "pamic/kernels.hpp"
#include "pamic/training.hpp"

namespace pamic::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 7;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raw command-line values; `given` tells whether the flag was present.
struct Flags {
    std::string dataset, checkpoint, out, range = "full", config, sweep;
    std::uint64_t seed = 0;
    std::size_t epochs = 0, batch_size = 0, repetitions = 1000;
    double lr = 0.0;
    int threads = 0;
    bool timing = false;
    bool reference = false;
};

/// Flags > --config JSON > PAMICNET_SEED (seed only) > built-in defaults.
struct RunConfig {
    std::string subcommand;
    std::string dataset, checkpoint, out, range, sweep;
    std::optional<std::uint64_t> seed;
    TrainConfig train;
    std::size_t repetitions = 1000;
    bool timing = false;
    bool reference = false;
};

std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("PAMICNET_SEED");
    if (v == nullptr || *v == '\0') return std::nullopt;
    std::uint64_t s = 0;
    const char* end = v + std::char_traits<char>::length(v);
    const auto res = std::from_chars(v, end, s);
    if (res.ec != std::errc() || res.ptr != end) {
        throw UsageError(std::string("PAMICNET_SEED is not an unsigned integer: ") + v);
    }
    return s;
}

json read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    try {
        json j = json::parse(in);
        if (!j.is_object()) throw SchemaError("config " + path + " must hold a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ParseError("config " + path + ": " + e.what());
    }
}

template <class T>
void take(const json& cfg, const char* key, T& dst) {
    if (!cfg.contains(key)) return;
    try {
        dst = cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config field '") + key + "': " + e.what());
    }
}

FrequencyGrid grid_for(const std::string& range) {
    if (range == "full") return FrequencyGrid::standard_full();
    if (range == "restricted") return FrequencyGrid::standard_restricted();
    throw UsageError("--range must be 'full' or 'restricted', got '" + range + "'");
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string(what) + " is required");
    if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " not found: " + path);
}

void require_writable_parent(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string(what) + " is required");
    const fs::path parent = fs::absolute(path).parent_path();
    if (!fs::is_directory(parent)) {
        throw IoError(std::string(what) + ": directory does not exist: " + parent.string());
    }
}

std::uint64_t seed_or(const RunConfig& rc, std::uint64_t fallback) {
    return rc.seed.value_or(fallback);
}

int run_generate(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    const std::string path = rc.out.empty() ? (rc.dataset.empty() ? "dataset.csv" : rc.dataset) : rc.out;
    require_writable_parent(path, "--out");
    const FrequencyGrid grid = grid_for(rc.range);
    err << "generating " << rc.range << "-range dataset (" << 2 * grid.count() << " features)\n";
    Dataset d = build_dataset(default_grid_specs(), grid);
    d.seed = seed_or(rc, kDefaultSeed);
    d.norm = compute_norm_stats(d);
    save_dataset(d, path);
    out << "wrote " << d.size() << " records x " << d.feature_count << " features to " << path
        << " (+ " << sidecar_path(path).string() << ")\n";
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        const auto c = static_cast<MicClass>(k);
        out << "  class " << k << " (" << mic_class_name(c) << "): " << d.count_of(c) << '\n';
    }
    return kOk;
}

/// Normalizes a raw dataset with its recorded stats and splits it.
SplitSet prepare_splits(Dataset d, const std::string& path, std::uint64_t split_seed) {
    if (d.normalized) throw SchemaError(path + ": expected raw features");
    const NormStats stats = d.norm ? *d.norm : compute_norm_stats(d);
    normalize_in_place(d, stats);
    return shuffle_split(d, split_seed);
}

int run_train(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    require_file(rc.dataset, "--dataset");
    require_writable_parent(rc.checkpoint, "--checkpoint");
    const std::string history_path = rc.out.empty() ? rc.checkpoint + ".history.csv" : rc.out;
    require_writable_parent(history_path, "--out");
    rc.train.validate();

    Dataset data = load_dataset(rc.dataset);
    const std::uint64_t seed = seed_or(rc, data.seed);
    TrainConfig cfg = rc.train;
    cfg.seed = seed;
    const SplitSet splits = prepare_splits(std::move(data), rc.dataset, seed);
    err << "train " << splits.train.size() << ", dev " << splits.dev.size() << ", test "
        << splits.test.size() << " records; " << cfg.epochs << " epochs\n";

    TrainOptions opts;
    opts.serial_reference = rc.reference;
    opts.on_epoch = [&](const EpochMetrics& e) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "epoch %3zu  train loss %.6f acc %.5f  dev loss %.6f acc %.5f  (%.1fs)\n",
                      e.epoch, e.train_loss, e.train_accuracy, e.dev_loss, e.dev_accuracy,
                      e.seconds);
        err << buf << std::flush;
    };
    const TrainResult r = train(splits, cfg, opts);
    save_checkpoint(r.model, r.history, rc.checkpoint);
    save_history_csv(r.history, history_path, rc.timing);

    const FinalMetrics& f = r.history.final_metrics;
    char buf[160];
    std::snprintf(buf, sizeof buf, "accuracy (train, dev, test): %.4f%%, %.4f%%, %.4f%%\n",
                  100.0 * f.train_accuracy, 100.0 * f.dev_accuracy, 100.0 * f.test_accuracy);
    out << buf << "checkpoint: " << rc.checkpoint << "\nhistory: " << history_path << '\n';
    return kOk;
}

int run_eval(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    require_file(rc.checkpoint, "--checkpoint");
    if (!rc.dataset.empty()) require_file(rc.dataset, "--dataset");
    if (!rc.out.empty()) require_writable_parent(rc.out, "--out");
    const Checkpoint cp = load_checkpoint(rc.checkpoint);
    json report;

    if (!rc.dataset.empty()) {
        err << "re-splitting " << rc.dataset << " with seed " << cp.split_seed << '\n';
        const SplitSet s = prepare_splits(load_dataset(rc.dataset), rc.dataset, cp.split_seed);
        if (s.train.feature_count != cp.model.dims[0]) {
            throw DimensionError("dataset has " + std::to_string(s.train.feature_count) +
                                 " features, checkpoint expects " + std::to_string(cp.model.dims[0]));
        }
        AccuracyReport t1;
        AccuracyRow row;
        char range[64];
        std::snprintf(range, sizeof range, "%g-%g Hz", s.train.grid.f_min(), s.train.grid.f_max());
        row.range = range;
        row.feature_count = s.train.feature_count;
        row.record_count = s.train.size() + s.dev.size() + s.test.size();
        row.train_size = s.train.size();
        row.dev_size = s.dev.size();
        row.test_size = s.test.size();
        const LossAccuracy a = evaluate_epoch(cp.model, s.train);
        const LossAccuracy b = evaluate_epoch(cp.model, s.dev);
        const LossAccuracy c = evaluate_epoch(cp.model, s.test);
        row.metrics = {a.loss, a.accuracy, b.loss, b.accuracy, c.loss, c.accuracy};
        row.epochs = cp.config.epochs;
        t1.rows.push_back(row);
        const ConfusionMatrix cm = confusion(cp.model, s.test);
        out << "Model performance\n" << to_text(t1) << "\nTest-split confusion matrix\n"
            << to_text(cm) << '\n';
        report["accuracy"] = to_json(t1);
        report["test_confusion"] = to_json(cm);
    }

    const OffGridReport t2 =
        run_offgrid_tests(cp.model, default_grid_specs(), seed_or(rc, kDefaultSeed), 5, rc.repetitions);
    out << "Independent off-grid tests\n" << to_text(t2);
    report["offgrid"] = to_json(t2);
    if (!rc.out.empty()) {
        std::ofstream js(rc.out);
        js << report.dump(2) << '\n';
        if (!js) throw IoError("failed writing " + rc.out);
    }
    return kOk;
}

int run_classify(const RunConfig& rc, std::ostream& out, std::ostream&) {
    require_file(rc.checkpoint, "--checkpoint");
    require_file(rc.sweep, "sweep file");
    const Checkpoint cp = load_checkpoint(rc.checkpoint);
    if (!cp.model.grid || !cp.model.norm) {
        throw SchemaError("checkpoint has no grid or normalization stats");
    }
    const auto raw = features_from_sweep(load_sweep_csv(rc.sweep), *cp.model.grid);
    const Prediction p = classify_raw(cp.model, raw);
    char buf[160];
    std::snprintf(buf, sizeof buf, "label %d (%s)\nprobabilities %.9f %.9f %.9f\n",
                  label_of(p.label), std::string(mic_class_name(p.label)).c_str(),
                  p.probabilities[0], p.probabilities[1], p.probabilities[2]);
    out << buf;
    return kOk;
}

int run_bench(const RunConfig& rc, std::ostream& out, std::ostream&) {
    require_file(rc.checkpoint, "--checkpoint");
    const Checkpoint cp = load_checkpoint(rc.checkpoint);
    const OffGridReport t2 =
        run_offgrid_tests(cp.model, default_grid_specs(), seed_or(rc, kDefaultSeed), 1, rc.repetitions);
    out << "predict only:        " << to_text(t2.predict_only) << '\n'
        << "normalize + predict: " << to_text(t2.end_to_end) << '\n';
    return kOk;
}

int run_curves(const RunConfig& rc, std::ostream& out, std::ostream&) {
    const std::string path = rc.out.empty() ? "curves.csv" : rc.out;
    require_writable_parent(path, "--out");
    const std::size_t rows =
        emit_curves(default_grid_specs(), grid_for(rc.range), path, seed_or(rc, kDefaultSeed));
    out << "wrote " << rows << " curve points to " << path << '\n';
    return kOk;
}

RunConfig resolve(const std::string& sub, const Flags& f, const CLI::App& app) {
    auto given = [&](const char* name) { return app.get_option(name)->count() > 0; };
    RunConfig rc;
    rc.subcommand = sub;
    rc.range = "full";

    if (given("--config")) {
        const json cfg = read_config(f.config);
        std::uint64_t seed = 0;
        if (cfg.contains("seed")) {
            take(cfg, "seed", seed);
            rc.seed = seed;
        }
        take(cfg, "epochs", rc.train.epochs);
        take(cfg, "lr", rc.train.learning_rate);
        take(cfg, "batch_size", rc.train.batch_size);
        take(cfg, "range", rc.range);
        take(cfg, "dataset", rc.dataset);
        take(cfg, "checkpoint", rc.checkpoint);
        take(cfg, "out", rc.out);
    }
    if (!rc.seed) rc.seed = env_seed();

    if (given("--seed")) rc.seed = f.seed;
    if (given("--epochs")) rc.train.epochs = f.epochs;
    if (given("--lr")) rc.train.learning_rate = f.lr;
    if (given("--batch-size")) rc.train.batch_size = f.batch_size;
    if (given("--range")) rc.range = f.range;
    if (given("--dataset")) rc.dataset = f.dataset;
    if (given("--checkpoint")) rc.checkpoint = f.checkpoint;
    if (given("--out")) rc.out = f.out;
    rc.sweep = f.sweep;
    rc.repetitions = f.repetitions;
    rc.timing = f.timing;
    rc.reference = f.reference;
    if (f.threads > 0) kernels::set_threads(f.threads);
    return rc;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Microphone-type classification from simulated frequency responses", "pamicnet"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"generate", "synthesize the parameter-grid dataset (CSV + JSON sidecar)"},
        {"train", "train the 25-12-3 perceptron; writes checkpoint and history"},
        {"eval", "split accuracy (with --dataset) and off-grid tests"},
        {"classify", "classify one frequency_hz,amplitude,phase_rad sweep CSV"},
        {"bench", "single-record prediction latency"},
        {"curves", "write amplitude/phase curves for plotting"},
    };

    Flags flags;
    std::vector<CLI::App*> apps;
    for (const auto& s : subs) {
        CLI::App* sc = app.add_subcommand(s.name, s.help);
        sc->add_option("--dataset", flags.dataset, "dataset CSV path");
        sc->add_option("--checkpoint", flags.checkpoint, "checkpoint JSON path");
        sc->add_option("--out", flags.out, "output path");
        sc->add_option("--seed", flags.seed, "seed (default: PAMICNET_SEED, then 7)");
        sc->add_option("--range", flags.range, "frequency range: full | restricted")
            ->check(CLI::IsMember({"full", "restricted"}));
        sc->add_option("--epochs", flags.epochs, "training epochs (default 100)");
        sc->add_option("--lr", flags.lr, "learning rate (default 1e-4)");
        sc->add_option("--batch-size", flags.batch_size, "mini-batch size (default 128)");
        sc->add_option("--config", flags.config, "JSON config file");
        sc->add_option("--threads", flags.threads, "OpenMP threads for the kernels");
        if (std::string(s.name) == "train") {
            sc->add_flag("--timing", flags.timing, "record wall time in the history CSV");
            sc->add_flag("--reference", flags.reference, "use the serial reference kernels");
        }
        if (std::string(s.name) == "classify") {
            sc->add_option("sweep", flags.sweep, "sweep CSV")->required();
        }
        if (std::string(s.name) == "bench" || std::string(s.name) == "eval") {
            sc->add_option("--repetitions", flags.repetitions, "timed predictions")
                ->check(CLI::PositiveNumber);
        }
        apps.push_back(sc);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        for (CLI::App* sc : apps) {
            if (!sc->parsed()) continue;
            const RunConfig rc = resolve(sc->get_name(), flags, *sc);
            const std::string& n = rc.subcommand;
            if (n == "generate") return run_generate(rc, out, err);
            if (n == "train") return run_train(rc, out, err);
            if (n == "eval") return run_eval(rc, out, err);
            if (n == "classify") return run_classify(rc, out, err);
            if (n == "bench") return run_bench(rc, out, err);
            if (n == "curves") return run_curves(rc, out, err);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    err << app.help();
    return kUsage;
}

}  // namespace pamic::cli
