#pragma once

// Data-parallel hot loops, each in two forms:
//
//   serial::  plain in-order loops; the reference the tests compare against.
//   omp::     OpenMP versions. Reductions run over fixed-size chunks whose
//             partials are combined in chunk order, so results are
//             bit-identical for any thread count (they may differ from the
//             serial form in the last few ulps of a sum).
//
// Record synthesis has no reduction; both forms produce identical bits.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pamic/dataset.hpp"
#include "pamic/mlp.hpp"

namespace pamic::kernels {

/// Samples per gradient-reduction chunk.
inline constexpr std::size_t kGradientChunk = 16;
/// Samples per evaluation-reduction chunk.
inline constexpr std::size_t kEvalChunk = 512;

using ConfusionCounts = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

struct BatchStats {
    double loss_sum = 0.0;
    std::size_t correct = 0;
};

struct EvalTotals {
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t count = 0;
    /// rows = true class, columns = predicted class
    ConfusionCounts confusion{};
};

/// Scratch buffers reused across gradient calls by the training loop.
struct GradientWorkspace {
    std::vector<ParamSet> partials;
    std::vector<BatchStats> partial_stats;
};

namespace serial {

/// out must hold tuples.size() * 2 * grid.count() values.
void synthesize(std::span<const LabeledParams> tuples, const FrequencyGrid& grid,
                std::span<double> out);

/// Mean gradient over the batch into `grad` (resized as needed). Returns the
/// summed loss and correct-prediction count measured before the update.
BatchStats batch_gradient(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels,
                          ParamSet& grad);

EvalTotals evaluate(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels);

}  // namespace serial

namespace omp {

void synthesize(std::span<const LabeledParams> tuples, const FrequencyGrid& grid,
                std::span<double> out);

BatchStats batch_gradient(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels,
                          ParamSet& grad, GradientWorkspace& ws);

EvalTotals evaluate(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels);

}  // namespace omp

/// Thread count used by the omp kernels (omp_get_max_threads()).
int max_threads();
/// Sets the omp kernels' thread count; values < 1 are clamped to 1.
void set_threads(int n);

}  // namespace pamic::kernels
