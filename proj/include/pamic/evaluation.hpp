#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pamic/dataset.hpp"
#include "pamic/kernels.hpp"
#include "pamic/mlp.hpp"
#include "pamic/training.hpp"

namespace pamic {

/// rows = true class, columns = predicted class
struct ConfusionMatrix {
    kernels::ConfusionCounts counts{};

    std::uint64_t total() const;
    std::uint64_t trace() const;
    double accuracy() const;
};

/// Fraction of records whose argmax prediction equals the label. `d` must be
/// normalized with the model's stats. Throws on an empty dataset.
double accuracy(const MlpModel& m, const Dataset& d);
ConfusionMatrix confusion(const MlpModel& m, const Dataset& d);

struct LatencyReport {
    std::size_t repetitions = 0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double max_ms = 0.0;
};

/// Summarizes per-call durations (ms) with nearest-rank percentiles.
LatencyReport summarize_latency(std::vector<double> samples_ms);

/// Wall-clock latency of single-record predict() after a warm-up. With
/// `raw` true the timed region also normalizes the raw features.
LatencyReport measure_latency(const MlpModel& m, std::span<const double> features,
                              std::size_t repetitions = 1000, bool raw = false);

/// Normalizes raw features with the model's attached stats, then predicts.
Prediction classify_raw(const MlpModel& m, std::span<const double> raw_features);

struct AccuracyRow {
    std::string range;  // "20-20000 Hz"
    std::size_t feature_count = 0;
    std::size_t record_count = 0;
    std::array<std::size_t, kNumClasses> class_counts{};
    std::size_t train_size = 0, dev_size = 0, test_size = 0;
    FinalMetrics metrics;
    std::size_t epochs = 0;
};

struct AccuracyReport {
    std::vector<AccuracyRow> rows;
};

struct AccuracyRun {
    AccuracyReport report;
    /// Trained models in row order.
    std::vector<MlpModel> models;
    std::vector<TrainHistory> histories;
};

struct AccuracyRunOptions {
    TrainConfig config;
    std::uint64_t split_seed = 7;
    bool full_range = true;
    bool restricted_range = true;
    std::function<void(const std::string& range, const EpochMetrics&)> on_epoch;
};

/// Generates, normalizes, splits and trains each requested frequency range.
AccuracyRun run_accuracy(const AccuracyRunOptions& options);

/// One row of an accuracy run on an arbitrary grid.
AccuracyRow train_range(const FrequencyGrid& grid, const AccuracyRunOptions& options, MlpModel& model_out,
                      TrainHistory& history_out);

struct OffGridResult {
    MicClass truth;
    MicParams params;
    Prediction prediction;
};

struct OffGridReport {
    std::vector<OffGridResult> results;
    std::size_t correct = 0;
    double accuracy = 0.0;
    LatencyReport predict_only;
    LatencyReport end_to_end;
};

/// Draws `per_class` off-grid tuples per class on the model's grid,
/// classifies them and times single-record prediction.
OffGridReport run_offgrid_tests(const MlpModel& m, const std::vector<ClassGridSpec>& specs,
                        std::uint64_t seed, std::size_t per_class = 5,
                        std::size_t latency_repetitions = 1000);

/// Curve tuples for one class: ξ3 steps from the smallest grid value to the
/// largest across the curves while ξ4 steps down; f2, f3 and f4 grid indices
/// come from the seeded generator.
std::vector<LabeledParams> curve_params(const ClassGridSpec& spec, std::uint64_t seed,
                                        std::size_t curves = 10);

/// Writes class,curve_id,frequency_hz,amplitude,phase_rad rows. Returns the
/// number of data rows.
std::size_t emit_curves(const std::vector<ClassGridSpec>& specs, const FrequencyGrid& grid,
                        const std::filesystem::path& path, std::uint64_t seed,
                        std::size_t curves_per_class = 10);

std::string to_text(const AccuracyReport& r);
std::string to_text(const OffGridReport& r);
std::string to_text(const ConfusionMatrix& c);
std::string to_text(const LatencyReport& r);
nlohmann::json to_json(const AccuracyReport& r);
nlohmann::json to_json(const OffGridReport& r);
nlohmann::json to_json(const ConfusionMatrix& c);
nlohmann::json to_json(const LatencyReport& r);

/// Raw sweep as read by `pamicnet classify`.
struct SweepSamples {
    std::vector<double> frequency_hz;
    std::vector<double> amplitude;
    std::vector<double> phase_rad;
};

/// Reads a frequency_hz,amplitude,phase_rad CSV (header required).
SweepSamples load_sweep_csv(const std::filesystem::path& path);
void save_sweep_csv(const FrequencyGrid& grid, const Sweep& sweep,
                    const std::filesystem::path& path);

/// Raw feature vector from a sweep, after checking its frequencies against
/// `grid` within 1e-6 relative. Throws SchemaError on a mismatch.
std::vector<double> features_from_sweep(const SweepSamples& s, const FrequencyGrid& grid);

}  // namespace pamic
