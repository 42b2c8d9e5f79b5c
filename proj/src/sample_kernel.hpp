#pragma once

// Per-sample forward/backward shared by the public API and both kernel forms.
// Every path that evaluates the network goes through these two functions, so
// batched, single-record and parallel results agree bit for bit per sample.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pamic/mlp.hpp"

namespace pamic::detail {

/// Weights stored fan_in x fan_out so the forward inner loop runs over
/// contiguous outputs and vectorizes without reassociating sums.
struct TransposedWeights {
    std::array<std::vector<double>, kNumLayers> wt;

    explicit TransposedWeights(const ParamSet& p) {
        for (std::size_t l = 0; l < kNumLayers; ++l) {
            const LayerParams& layer = p.layers[l];
            auto& t = wt[l];
            t.resize(layer.weights.size());
            for (std::size_t o = 0; o < layer.fan_out; ++o) {
                for (std::size_t i = 0; i < layer.fan_in; ++i) {
                    t[i * layer.fan_out + o] = layer.weights[o * layer.fan_in + i];
                }
            }
        }
    }
};

struct SampleBuffers {
    std::vector<double> a1, a2, z, d3, d2, d1;

    explicit SampleBuffers(const Dims& dims)
        : a1(dims[1]), a2(dims[2]), z(dims[3]), d3(dims[3]), d2(dims[2]), d1(dims[1]) {}
};

inline void dense_forward(const std::vector<double>& wt, const std::vector<double>& bias,
                          const double* in, std::size_t fan_in, double* out, std::size_t fan_out) {
    for (std::size_t o = 0; o < fan_out; ++o) out[o] = bias[o];
    for (std::size_t i = 0; i < fan_in; ++i) {
        const double xi = in[i];
        const double* row = wt.data() + i * fan_out;
        for (std::size_t o = 0; o < fan_out; ++o) out[o] += row[o] * xi;
    }
}

/// Fills b.a1, b.a2, b.z.
inline void sample_forward(const MlpModel& m, const TransposedWeights& t, const double* x,
                           SampleBuffers& b) {
    const Dims& d = m.dims;
    const auto& L = m.params.layers;
    dense_forward(t.wt[0], L[0].biases, x, d[0], b.a1.data(), d[1]);
    for (double& v : b.a1) v = std::tanh(v);
    dense_forward(t.wt[1], L[1].biases, b.a1.data(), d[1], b.a2.data(), d[2]);
    for (double& v : b.a2) v = std::tanh(v);
    dense_forward(t.wt[2], L[2].biases, b.a2.data(), d[2], b.z.data(), d[3]);
}

/// acc[o][i] += delta[o] * in[i]; bias[o] += delta[o].
inline void outer_accumulate(LayerParams& acc, const double* delta, const double* in) {
    for (std::size_t o = 0; o < acc.fan_out; ++o) {
        const double d = delta[o];
        double* row = acc.weights.data() + o * acc.fan_in;
        for (std::size_t i = 0; i < acc.fan_in; ++i) row[i] += d * in[i];
        acc.biases[o] += d;
    }
}

/// back[i] = (sum_o W[o][i] delta[o]) * (1 - act[i]^2)
inline void tanh_backprop(const LayerParams& layer, const double* delta, const double* act,
                          double* back) {
    for (std::size_t i = 0; i < layer.fan_in; ++i) back[i] = 0.0;
    for (std::size_t o = 0; o < layer.fan_out; ++o) {
        const double d = delta[o];
        const double* row = layer.weights.data() + o * layer.fan_in;
        for (std::size_t i = 0; i < layer.fan_in; ++i) back[i] += row[i] * d;
    }
    for (std::size_t i = 0; i < layer.fan_in; ++i) back[i] *= 1.0 - act[i] * act[i];
}

/// Adds this sample's loss gradient into `acc`. Requires b.a1/a2/z from
/// sample_forward on the same input.
inline void sample_backward(const MlpModel& m, const double* x, std::uint8_t label,
                            SampleBuffers& b, ParamSet& acc) {
    const auto& L = m.params.layers;
    const std::size_t k = m.dims[3];
    // softmax(z) - onehot(label)
    double zmax = b.z[0];
    for (std::size_t j = 1; j < k; ++j) zmax = std::max(zmax, b.z[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        b.d3[j] = std::exp(b.z[j] - zmax);
        sum += b.d3[j];
    }
    for (std::size_t j = 0; j < k; ++j) b.d3[j] /= sum;
    b.d3[label] -= 1.0;

    outer_accumulate(acc.layers[2], b.d3.data(), b.a2.data());
    tanh_backprop(L[2], b.d3.data(), b.a2.data(), b.d2.data());
    outer_accumulate(acc.layers[1], b.d2.data(), b.a1.data());
    tanh_backprop(L[1], b.d2.data(), b.a1.data(), b.d1.data());
    outer_accumulate(acc.layers[0], b.d1.data(), x);
}

inline void add_into(ParamSet& dst, const ParamSet& src) {
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        auto& dw = dst.layers[l].weights;
        const auto& sw = src.layers[l].weights;
        for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += sw[i];
        auto& db = dst.layers[l].biases;
        const auto& sb = src.layers[l].biases;
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += sb[i];
    }
}

inline void divide_by(ParamSet& p, double n) {
    for (auto& layer : p.layers) {
        for (double& w : layer.weights) w /= n;
        for (double& v : layer.biases) v /= n;
    }
}

/// Makes `p` zero with the shapes of `dims`, reusing storage.
inline void reset_like(ParamSet& p, const Dims& dims) {
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        auto& layer = p.layers[l];
        layer.fan_in = dims[l];
        layer.fan_out = dims[l + 1];
        layer.weights.assign(dims[l] * dims[l + 1], 0.0);
        layer.biases.assign(dims[l + 1], 0.0);
    }
}

}  // namespace pamic::detail
