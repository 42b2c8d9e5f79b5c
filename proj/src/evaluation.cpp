#include "pamic/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pamic/dataset_io.hpp"
#include "pamic/error.hpp"
#include "pamic/rng.hpp"

namespace pamic {

using nlohmann::json;

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts) for (auto c : row) t += c;
    return t;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t t = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) t += counts[k][k];
    return t;
}

double ConfusionMatrix::accuracy() const {
    return static_cast<double>(trace()) / static_cast<double>(total());
}

ConfusionMatrix confusion(const MlpModel& m, const Dataset& d) {
    if (d.empty()) throw InvalidParameter("cannot evaluate on an empty dataset");
    return {kernels::omp::evaluate(m, as_matrix(d), d.labels).confusion};
}

double accuracy(const MlpModel& m, const Dataset& d) {
    if (d.empty()) throw InvalidParameter("cannot evaluate on an empty dataset");
    const auto t = kernels::omp::evaluate(m, as_matrix(d), d.labels);
    return static_cast<double>(t.correct) / static_cast<double>(t.count);
}

LatencyReport summarize_latency(std::vector<double> samples_ms) {
    if (samples_ms.empty()) throw InvalidParameter("no latency samples");
    std::sort(samples_ms.begin(), samples_ms.end());
    const std::size_t n = samples_ms.size();
    auto rank = [&](double q) {
        const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
        return samples_ms[std::clamp<std::size_t>(r, 1, n) - 1];
    };
    return {n, rank(0.5), rank(0.95), samples_ms.back()};
}

Prediction classify_raw(const MlpModel& m, std::span<const double> raw_features) {
    if (!m.norm) throw InvalidParameter("model carries no normalization stats");
    if (raw_features.size() != m.norm->max_abs.size()) {
        throw DimensionError("record has " + std::to_string(raw_features.size()) +
                             " features, model expects " + std::to_string(m.dims[0]));
    }
    std::vector<double> x(raw_features.begin(), raw_features.end());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] /= m.norm->max_abs[i];
    return predict(m, x);
}

LatencyReport measure_latency(const MlpModel& m, std::span<const double> features,
                              std::size_t repetitions, bool raw) {
    using clock = std::chrono::steady_clock;
    auto once = [&] { return raw ? classify_raw(m, features) : predict(m, features); };
    volatile int sink = 0;
    for (int i = 0; i < 50; ++i) sink = sink + label_of(once().label);
    std::vector<double> samples;
    samples.reserve(repetitions);
    for (std::size_t i = 0; i < repetitions; ++i) {
        const auto t0 = clock::now();
        const Prediction p = once();
        const auto t1 = clock::now();
        sink = sink + label_of(p.label);
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return summarize_latency(std::move(samples));
}

namespace {

std::string range_label(const FrequencyGrid& g) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g-%g Hz", g.f_min(), g.f_max());
    return buf;
}

}  // namespace

AccuracyRow train_range(const FrequencyGrid& grid, const AccuracyRunOptions& options, MlpModel& model_out,
                      TrainHistory& history_out) {
    AccuracyRow row;
    row.range = range_label(grid);
    SplitSet splits;
    {
        Dataset d = build_dataset(default_grid_specs(), grid);
        d.seed = options.split_seed;
        row.record_count = d.size();
        for (std::size_t k = 0; k < kNumClasses; ++k) row.class_counts[k] = d.count_of(static_cast<MicClass>(k));
        row.feature_count = d.feature_count;
        normalize_in_place(d, compute_norm_stats(d));
        splits = shuffle_split(d, options.split_seed);
    }
    row.train_size = splits.train.size();
    row.dev_size = splits.dev.size();
    row.test_size = splits.test.size();

    TrainOptions topts;
    if (options.on_epoch) {
        topts.on_epoch = [&](const EpochMetrics& e) { options.on_epoch(row.range, e); };
    }
    TrainResult r = train(splits, options.config, topts);
    row.metrics = r.history.final_metrics;
    row.epochs = r.history.epochs.size();
    model_out = std::move(r.model);
    history_out = std::move(r.history);
    return row;
}

AccuracyRun run_accuracy(const AccuracyRunOptions& options) {
    AccuracyRun run;
    std::vector<FrequencyGrid> grids;
    if (options.full_range) grids.push_back(FrequencyGrid::standard_full());
    if (options.restricted_range) grids.push_back(FrequencyGrid::standard_restricted());
    for (const auto& g : grids) {
        MlpModel m;
        TrainHistory h;
        run.report.rows.push_back(train_range(g, options, m, h));
        run.models.push_back(std::move(m));
        run.histories.push_back(std::move(h));
    }
    return run;
}

OffGridReport run_offgrid_tests(const MlpModel& m, const std::vector<ClassGridSpec>& specs,
                        std::uint64_t seed, std::size_t per_class,
                        std::size_t latency_repetitions) {
    if (!m.grid || !m.norm) throw InvalidParameter("model carries no grid or normalization stats");
    const auto params = draw_offgrid_params(specs, seed, per_class);
    const Dataset raw = make_offgrid_tests(specs, *m.grid, seed, per_class);

    OffGridReport rep;
    for (std::size_t r = 0; r < raw.size(); ++r) {
        OffGridResult res{params[r].mic_class, params[r].params, classify_raw(m, raw.row(r))};
        rep.correct += res.prediction.label == res.truth ? 1 : 0;
        rep.results.push_back(res);
    }
    rep.accuracy = rep.results.empty()
                       ? 0.0
                       : static_cast<double>(rep.correct) / static_cast<double>(rep.results.size());

    if (latency_repetitions > 0 && !raw.empty()) {
        const auto first = raw.row(0);
        std::vector<double> x(first.begin(), first.end());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] /= m.norm->max_abs[i];
        rep.predict_only = measure_latency(m, x, latency_repetitions, false);
        rep.end_to_end = measure_latency(m, first, latency_repetitions, true);
    }
    return rep;
}

std::vector<LabeledParams> curve_params(const ClassGridSpec& spec, std::uint64_t seed,
                                        std::size_t curves) {
    spec.validate();
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(label_of(spec.mic_class))));
    const auto f3s = spec.f3_values();
    const auto f4s = spec.f4_values();
    const std::size_t nxi = spec.xi_values.size();
    std::vector<LabeledParams> out;
    for (std::size_t k = 0; k < curves; ++k) {
        const std::size_t up =
            curves == 1 ? 0
                        : static_cast<std::size_t>(std::lround(static_cast<double>(k * (nxi - 1)) /
                                                               static_cast<double>(curves - 1)));
        MicParams p;
        p.f2 = spec.f2_values[rng.index(spec.f2_values.size())];
        p.f3 = f3s[rng.index(f3s.size())];
        p.f4 = f4s[rng.index(f4s.size())];
        p.xi3 = spec.xi_values[up];
        p.xi4 = spec.xi_values[nxi - 1 - up];
        out.push_back({spec.mic_class, p});
    }
    return out;
}

std::size_t emit_curves(const std::vector<ClassGridSpec>& specs, const FrequencyGrid& grid,
                        const std::filesystem::path& path, std::uint64_t seed,
                        std::size_t curves_per_class) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "class,curve_id,frequency_hz,amplitude,phase_rad\n";
    std::size_t rows = 0;
    for (const auto& spec : specs) {
        const auto tuples = curve_params(spec, seed, curves_per_class);
        for (std::size_t c = 0; c < tuples.size(); ++c) {
            const Sweep s = amplitude_phase_sweep(tuples[c].params, grid);
            for (std::size_t i = 0; i < grid.count(); ++i) {
                out << label_of(spec.mic_class) << ',' << c << ',' << format_double(grid[i]) << ','
                    << format_double(s.amplitude[i]) << ',' << format_double(s.phase[i]) << '\n';
                ++rows;
            }
        }
    }
    if (!out) throw IoError("failed writing " + path.string());
    return rows;
}

std::string to_text(const LatencyReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu runs: median %.4f ms, p95 %.4f ms, max %.4f ms",
                  r.repetitions, r.median_ms, r.p95_ms, r.max_ms);
    return buf;
}

std::string to_text(const AccuracyReport& r) {
    std::ostringstream os;
    os << "Frequency range   Features  Accuracy (train, dev, test)      Epochs\n";
    char buf[160];
    for (const auto& row : r.rows) {
        std::snprintf(buf, sizeof buf, "%-16s  %8zu  %7.3f%%, %7.3f%%, %7.3f%%  %6zu\n",
                      row.range.c_str(), row.feature_count, 100.0 * row.metrics.train_accuracy,
                      100.0 * row.metrics.dev_accuracy, 100.0 * row.metrics.test_accuracy,
                      row.epochs);
        os << buf;
    }
    return os.str();
}

std::string to_text(const OffGridReport& r) {
    std::ostringstream os;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto cls = static_cast<MicClass>(c);
        os << "Microphone type " << mic_class_name(cls) << ":";
        for (const auto& res : r.results) {
            if (res.truth == cls) {
                os << ' ' << label_of(res.prediction.label)
                   << (res.prediction.label == res.truth ? "(ok)" : "(WRONG)");
            }
        }
        os << '\n';
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "Classification accuracy: %zu/%zu (%.1f%%)\n", r.correct,
                  r.results.size(), 100.0 * r.accuracy);
    os << buf;
    os << "Prediction latency (predict only): " << to_text(r.predict_only) << '\n';
    os << "Prediction latency (normalize + predict): " << to_text(r.end_to_end) << '\n';
    return os.str();
}

std::string to_text(const ConfusionMatrix& c) {
    std::ostringstream os;
    os << "true\\pred      ECM30B     ECM60      WM66\n";
    char buf[96];
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        std::snprintf(buf, sizeof buf, "%-10s %10llu %9llu %9llu\n",
                      std::string(mic_class_name(static_cast<MicClass>(i))).c_str(),
                      static_cast<unsigned long long>(c.counts[i][0]),
                      static_cast<unsigned long long>(c.counts[i][1]),
                      static_cast<unsigned long long>(c.counts[i][2]));
        os << buf;
    }
    return os.str();
}

json to_json(const LatencyReport& r) {
    return {{"repetitions", r.repetitions}, {"median_ms", r.median_ms}, {"p95_ms", r.p95_ms},
            {"max_ms", r.max_ms}};
}

json to_json(const ConfusionMatrix& c) {
    return {{"counts", c.counts}, {"total", c.total()}, {"accuracy", c.accuracy()}};
}

json to_json(const AccuracyReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"range", row.range},
                        {"features", row.feature_count},
                        {"records", row.record_count},
                        {"class_counts", row.class_counts},
                        {"split_sizes", {row.train_size, row.dev_size, row.test_size}},
                        {"accuracy", {row.metrics.train_accuracy, row.metrics.dev_accuracy,
                                      row.metrics.test_accuracy}},
                        {"loss", {row.metrics.train_loss, row.metrics.dev_loss, row.metrics.test_loss}},
                        {"epochs", row.epochs}});
    }
    return {{"rows", rows}};
}

json to_json(const OffGridReport& r) {
    json tests = json::array();
    for (const auto& res : r.results) {
        tests.push_back({{"true_class", label_of(res.truth)},
                         {"predicted", label_of(res.prediction.label)},
                         {"probabilities", res.prediction.probabilities},
                         {"params",
                          {{"f2", res.params.f2}, {"f3", res.params.f3}, {"f4", res.params.f4},
                           {"xi3", res.params.xi3}, {"xi4", res.params.xi4}}}});
    }
    return {{"tests", tests},
            {"correct", r.correct},
            {"total", r.results.size()},
            {"accuracy", r.accuracy},
            {"latency_predict_only", to_json(r.predict_only)},
            {"latency_end_to_end", to_json(r.end_to_end)}};
}

SweepSamples load_sweep_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "frequency_hz,amplitude,phase_rad") {
        throw SchemaError(path.string() + ": expected header frequency_hz,amplitude,phase_rad");
    }
    SweepSamples s;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        double v[3];
        for (int k = 0; k < 3; ++k) {
            const auto res = std::from_chars(p, end, v[k]);
            const bool last = k == 2;
            if (res.ec != std::errc() || (last ? res.ptr != end : (res.ptr == end || *res.ptr != ','))) {
                throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                                 ": expected three numbers");
            }
            p = res.ptr + 1;
        }
        s.frequency_hz.push_back(v[0]);
        s.amplitude.push_back(v[1]);
        s.phase_rad.push_back(v[2]);
    }
    return s;
}

void save_sweep_csv(const FrequencyGrid& grid, const Sweep& sweep,
                    const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "frequency_hz,amplitude,phase_rad\n";
    for (std::size_t i = 0; i < grid.count(); ++i) {
        out << format_double(grid[i]) << ',' << format_double(sweep.amplitude[i]) << ','
            << format_double(sweep.phase[i]) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<double> features_from_sweep(const SweepSamples& s, const FrequencyGrid& grid) {
    const std::size_t n = grid.count();
    if (s.frequency_hz.size() != n) {
        throw SchemaError("sweep has " + std::to_string(s.frequency_hz.size()) +
                          " samples, model grid has " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(s.frequency_hz[i] - grid[i]) > 1e-6 * std::abs(grid[i])) {
            throw SchemaError("sweep frequency " + format_double(s.frequency_hz[i]) +
                              " does not match grid point " + format_double(grid[i]));
        }
    }
    std::vector<double> x(2 * n);
    std::copy(s.amplitude.begin(), s.amplitude.end(), x.begin());
    std::copy(s.phase_rad.begin(), s.phase_rad.end(), x.begin() + static_cast<std::ptrdiff_t>(n));
    return x;
}

}  // namespace pamic
