#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "pamic/dataset.hpp"
#include "pamic/mlp.hpp"

namespace pamic {

struct EpochMetrics {
    std::size_t epoch = 0;  // 1-based
    /// Running mean over the epoch's mini-batches, measured before each update.
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double dev_loss = 0.0;
    double dev_accuracy = 0.0;
    double seconds = 0.0;
};

/// Metrics of the final model on each split.
struct FinalMetrics {
    double train_loss = 0.0, train_accuracy = 0.0;
    double dev_loss = 0.0, dev_accuracy = 0.0;
    double test_loss = 0.0, test_accuracy = 0.0;

    friend bool operator==(const FinalMetrics&, const FinalMetrics&) = default;
};

struct TrainHistory {
    std::vector<EpochMetrics> epochs;
    FinalMetrics final_metrics;
    TrainConfig config;
    std::uint64_t seed = 0;

    double final_test_accuracy() const { return final_metrics.test_accuracy; }
};

struct TrainOptions {
    /// Use the serial reference gradient instead of the OpenMP kernel.
    bool serial_reference = false;
    /// Called after every epoch (progress reporting).
    std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
    MlpModel model;
    TrainHistory history;
};

std::size_t batches_per_epoch(std::size_t records, std::size_t batch_size);

/// Presentation order of the training records in `epoch` (1-based), derived
/// from (seed, epoch) alone.
std::vector<std::size_t> epoch_order(std::size_t records, std::uint64_t seed, std::size_t epoch);

/// Xavier init, then cfg.epochs passes of shuffled mini-batches (the final
/// partial batch included), one Adam step per batch. Throws DimensionError or
/// InvalidParameter before any update when the splits do not fit the config,
/// and NumericalError if a parameter goes non-finite.
TrainResult train(const SplitSet& splits, const TrainConfig& cfg, const TrainOptions& options = {});

struct LossAccuracy {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Mean loss and argmax accuracy over a normalized dataset.
LossAccuracy evaluate_epoch(const MlpModel& m, const Dataset& d);

inline constexpr int kCheckpointSchemaVersion = 1;

struct Checkpoint {
    MlpModel model;
    TrainConfig config;
    FinalMetrics final_metrics;
    /// Split seed the model was trained under.
    std::uint64_t split_seed = 0;
};

void save_checkpoint(const MlpModel& m, const TrainHistory& history,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// epoch,train_loss,train_acc,dev_loss,dev_acc,seconds. With
/// `include_timing` false the seconds column is written as 0 so reruns
/// produce identical bytes.
void save_history_csv(const TrainHistory& h, const std::filesystem::path& path,
                      bool include_timing);

}  // namespace pamic
