#pragma once

// Fully connected tanh network with a softmax/cross-entropy head, trained by
// backpropagation and Adam. Written from scratch, double precision.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pamic/dataset.hpp"
#include "pamic/response.hpp"

namespace pamic {

/// Layer sizes: input, hidden 1, hidden 2, output.
using Dims = std::array<std::size_t, 4>;

inline constexpr std::size_t kHidden1 = 25;
inline constexpr std::size_t kHidden2 = 12;

constexpr Dims default_dims(std::size_t input_features) {
    return {input_features, kHidden1, kHidden2, kNumClasses};
}

inline constexpr std::size_t kNumLayers = 3;

/// Weights are fan_out x fan_in, row-major.
struct LayerParams {
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    std::vector<double> weights;
    std::vector<double> biases;

    double w(std::size_t out, std::size_t in) const { return weights[out * fan_in + in]; }

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Parameters (or gradients, or Adam moments) of all three layers.
struct ParamSet {
    std::array<LayerParams, kNumLayers> layers;

    static ParamSet zeros(const Dims& dims);

    std::size_t size() const;
    void set_zero();
    bool all_finite() const;
    /// Largest |x| over all entries.
    double max_abs() const;

    /// Visits every scalar as (layer, is_bias, index, value&).
    template <class F>
    void for_each(F&& f) {
        for (std::size_t l = 0; l < kNumLayers; ++l) {
            for (std::size_t i = 0; i < layers[l].weights.size(); ++i) f(l, false, i, layers[l].weights[i]);
            for (std::size_t i = 0; i < layers[l].biases.size(); ++i) f(l, true, i, layers[l].biases[i]);
        }
    }

    friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

struct MlpModel {
    Dims dims{};
    ParamSet params;
    /// Attached so a checkpoint can classify raw sweeps on its own.
    std::optional<NormStats> norm;
    std::optional<FrequencyGrid> grid;

    std::size_t input_size() const { return dims[0]; }
    std::size_t parameter_count() const { return params.size(); }

    /// Throws DimensionError on inconsistent shapes, NumericalError on
    /// non-finite parameters.
    void validate() const;

    friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Validates a layer-size tuple: all positive, last entry 3.
void validate_dims(const Dims& dims);

/// Glorot-uniform weights in [-L, L], L = sqrt(6 / (fan_in + fan_out));
/// zero biases. Deterministic under `seed`.
MlpModel xavier_init(const Dims& dims, std::uint64_t seed);

/// Row-major read-only matrix view; one sample per row.
struct MatrixView {
    std::span<const double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    MatrixView() = default;
    MatrixView(std::span<const double> d, std::size_t r, std::size_t c);

    std::span<const double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

MatrixView as_matrix(const Dataset& d);

/// Activations kept for backpropagation. Each buffer is batch-major.
struct ForwardCache {
    std::size_t batch = 0;
    Dims dims{};
    std::vector<double> input;   // batch x dims[0]
    std::vector<double> hidden1; // batch x dims[1], tanh outputs
    std::vector<double> hidden2; // batch x dims[2], tanh outputs
    std::vector<double> logits;  // batch x dims[3]

    std::span<const double> logits_row(std::size_t s) const {
        return std::span<const double>(logits).subspan(s * dims[3], dims[3]);
    }
};

/// a1 = tanh(W1 x + b1), a2 = tanh(W2 a1 + b2), logits = W3 a2 + b3.
ForwardCache forward(const MlpModel& m, MatrixView x);
void forward_into(const MlpModel& m, MatrixView x, ForwardCache& cache);

/// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> logits);
std::array<double, kNumClasses> softmax3(std::span<const double> logits);

/// log(sum(exp(z))) as z_max + log1p(sum of the other exp(z_k - z_max)).
double log_sum_exp(std::span<const double> logits);

using OneHotLabel = std::array<double, kNumClasses>;
OneHotLabel one_hot(MicClass c);

/// -sum y_k log softmax(z)_k in fused form. Throws InvalidParameter when y is
/// not one-hot.
double cross_entropy_with_logits(std::span<const double> logits, const OneHotLabel& y);
/// Integer-label form: (z_max - z[label]) + log1p(...), which keeps the tiny
/// loss of a confident correct prediction.
double cross_entropy_with_logits(std::span<const double> logits, std::size_t label);

/// Mean-over-batch gradients of the cross-entropy loss.
ParamSet backward(const MlpModel& m, const ForwardCache& cache, std::span<const std::uint8_t> labels);

/// Mean cross-entropy over a batch.
double mean_loss(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels);

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 128;
    std::size_t epochs = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 7;

    /// Throws InvalidParameter on out-of-range hyperparameters.
    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct AdamState {
    ParamSet m;  // first moment
    ParamSet v;  // second moment
    std::uint64_t t = 0;

    static AdamState zeros_for(const MlpModel& model);
};

/// One bias-corrected Adam update of every parameter.
void adam_step(MlpModel& m, const ParamSet& grads, AdamState& state, const TrainConfig& cfg);

struct Prediction {
    MicClass label;
    std::array<double, kNumClasses> probabilities;
};

/// Argmax of softmax(logits); ties go to the lowest label. Features must
/// already be normalized.
Prediction predict(const MlpModel& m, std::span<const double> features);

/// Argmax with lowest-index tie-break.
std::size_t argmax(std::span<const double> values);

/// Central differences of mean_loss against backward(); returns
/// max |a - n| / max(|a|, |n|, 1e-12) over all parameters.
double gradient_check(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels,
                      double step);

}  // namespace pamic
