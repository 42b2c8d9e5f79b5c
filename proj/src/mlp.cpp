#include "pamic/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pamic/error.hpp"
#include "pamic/rng.hpp"
#include "sample_kernel.hpp"

namespace pamic {

ParamSet ParamSet::zeros(const Dims& dims) {
    ParamSet p;
    detail::reset_like(p, dims);
    return p;
}

std::size_t ParamSet::size() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
}

void ParamSet::set_zero() {
    for (auto& l : layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.biases.begin(), l.biases.end(), 0.0);
    }
}

bool ParamSet::all_finite() const {
    for (const auto& l : layers) {
        for (double w : l.weights) if (!std::isfinite(w)) return false;
        for (double b : l.biases) if (!std::isfinite(b)) return false;
    }
    return true;
}

double ParamSet::max_abs() const {
    double m = 0.0;
    for (const auto& l : layers) {
        for (double w : l.weights) m = std::max(m, std::abs(w));
        for (double b : l.biases) m = std::max(m, std::abs(b));
    }
    return m;
}

void validate_dims(const Dims& dims) {
    for (std::size_t d : dims) {
        if (d == 0) throw DimensionError("layer sizes must be positive");
    }
    if (dims[3] != kNumClasses) {
        throw DimensionError("output layer must have 3 units, got " + std::to_string(dims[3]));
    }
}

void MlpModel::validate() const {
    validate_dims(dims);
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        const LayerParams& layer = params.layers[l];
        if (layer.fan_in != dims[l] || layer.fan_out != dims[l + 1] ||
            layer.weights.size() != dims[l] * dims[l + 1] || layer.biases.size() != dims[l + 1]) {
            throw DimensionError("layer " + std::to_string(l + 1) + " shape disagrees with dims");
        }
    }
    if (norm && norm->max_abs.size() != dims[0]) {
        throw DimensionError("normalization stats length disagrees with input size");
    }
    if (grid && 2 * grid->count() != dims[0]) {
        throw DimensionError("frequency grid disagrees with input size");
    }
    if (!params.all_finite()) throw NumericalError("model has non-finite parameters");
}

MlpModel xavier_init(const Dims& dims, std::uint64_t seed) {
    validate_dims(dims);
    MlpModel m;
    m.dims = dims;
    m.params = ParamSet::zeros(dims);
    Rng rng(seed);
    for (auto& layer : m.params.layers) {
        const double limit =
            std::sqrt(6.0 / static_cast<double>(layer.fan_in + layer.fan_out));
        for (double& w : layer.weights) w = rng.uniform(-limit, limit);
    }
    return m;
}

MatrixView::MatrixView(std::span<const double> d, std::size_t r, std::size_t c)
    : data(d), rows(r), cols(c) {
    if (d.size() != r * c) {
        throw DimensionError("matrix view of " + std::to_string(r) + "x" + std::to_string(c) +
                             " over " + std::to_string(d.size()) + " values");
    }
}

MatrixView as_matrix(const Dataset& d) {
    return MatrixView(d.features, d.size(), d.feature_count);
}

void forward_into(const MlpModel& m, MatrixView x, ForwardCache& cache) {
    if (x.cols != m.dims[0]) {
        throw DimensionError("input has " + std::to_string(x.cols) + " features, model expects " +
                             std::to_string(m.dims[0]));
    }
    const Dims& d = m.dims;
    const std::size_t b = x.rows;
    cache.batch = b;
    cache.dims = d;
    cache.input.assign(x.data.begin(), x.data.end());
    cache.hidden1.resize(b * d[1]);
    cache.hidden2.resize(b * d[2]);
    cache.logits.resize(b * d[3]);

    const detail::TransposedWeights t(m.params);
    detail::SampleBuffers buf(d);
    for (std::size_t s = 0; s < b; ++s) {
        detail::sample_forward(m, t, x.row(s).data(), buf);
        std::copy(buf.a1.begin(), buf.a1.end(), cache.hidden1.begin() + s * d[1]);
        std::copy(buf.a2.begin(), buf.a2.end(), cache.hidden2.begin() + s * d[2]);
        std::copy(buf.z.begin(), buf.z.end(), cache.logits.begin() + s * d[3]);
    }
}

ForwardCache forward(const MlpModel& m, MatrixView x) {
    ForwardCache c;
    forward_into(m, x, c);
    return c;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - zmax);
        sum += p[k];
    }
    for (double& v : p) v /= sum;
    return p;
}

std::array<double, kNumClasses> softmax3(std::span<const double> logits) {
    if (logits.size() != kNumClasses) throw DimensionError("softmax3 needs 3 logits");
    const auto p = softmax(logits);
    return {p[0], p[1], p[2]};
}

namespace {

/// Sum of exp(z_k - z_top) over k != top.
double tail_mass(std::span<const double> logits, std::size_t top) {
    double rest = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        if (k != top) rest += std::exp(logits[k] - logits[top]);
    }
    return rest;
}

}  // namespace

double log_sum_exp(std::span<const double> logits) {
    if (logits.empty()) throw DimensionError("log_sum_exp of an empty vector");
    const std::size_t top = argmax(logits);
    return logits[top] + std::log1p(tail_mass(logits, top));
}

OneHotLabel one_hot(MicClass c) {
    OneHotLabel y{};
    y[static_cast<std::size_t>(label_of(c))] = 1.0;
    return y;
}

double cross_entropy_with_logits(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size()) throw DimensionError("label outside logit range");
    // (z_top - z_label) + log1p(...) rather than lse - z_label, so a confident
    // correct prediction keeps its tiny loss instead of rounding to 0.
    const std::size_t top = argmax(logits);
    return (logits[top] - logits[label]) + std::log1p(tail_mass(logits, top));
}

double cross_entropy_with_logits(std::span<const double> logits, const OneHotLabel& y) {
    if (logits.size() != kNumClasses) throw DimensionError("cross entropy needs 3 logits");
    std::size_t hot = kNumClasses;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        if (y[k] == 1.0 && hot == kNumClasses) {
            hot = k;
        } else if (y[k] != 0.0) {
            throw InvalidParameter("label is not one-hot");
        }
    }
    if (hot == kNumClasses) throw InvalidParameter("label is not one-hot");
    return cross_entropy_with_logits(logits, hot);
}

ParamSet backward(const MlpModel& m, const ForwardCache& cache,
                  std::span<const std::uint8_t> labels) {
    const Dims& d = m.dims;
    if (cache.dims != d || cache.input.size() != cache.batch * d[0]) {
        throw DimensionError("forward cache does not match the model");
    }
    if (labels.size() != cache.batch) {
        throw DimensionError("label count disagrees with batch size");
    }
    if (cache.batch == 0) throw DimensionError("empty batch");

    ParamSet grad = ParamSet::zeros(d);
    detail::SampleBuffers buf(d);
    for (std::size_t s = 0; s < cache.batch; ++s) {
        if (labels[s] >= d[3]) throw DimensionError("label outside output range");
        std::copy_n(cache.hidden1.begin() + s * d[1], d[1], buf.a1.begin());
        std::copy_n(cache.hidden2.begin() + s * d[2], d[2], buf.a2.begin());
        std::copy_n(cache.logits.begin() + s * d[3], d[3], buf.z.begin());
        detail::sample_backward(m, cache.input.data() + s * d[0], labels[s], buf, grad);
    }
    detail::divide_by(grad, static_cast<double>(cache.batch));
    return grad;
}

double mean_loss(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels) {
    if (labels.size() != x.rows) throw DimensionError("label count disagrees with batch size");
    if (x.rows == 0) throw DimensionError("empty batch");
    const ForwardCache c = forward(m, x);
    double sum = 0.0;
    for (std::size_t s = 0; s < c.batch; ++s) {
        sum += cross_entropy_with_logits(c.logits_row(s), labels[s]);
    }
    return sum / static_cast<double>(c.batch);
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidParameter("learning rate must be positive");
    }
    if (batch_size < 1) throw InvalidParameter("batch size must be at least 1");
    if (epochs < 1) throw InvalidParameter("epochs must be at least 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw InvalidParameter("Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw InvalidParameter("Adam epsilon must be positive");
}

AdamState AdamState::zeros_for(const MlpModel& model) {
    AdamState s;
    s.m = ParamSet::zeros(model.dims);
    s.v = ParamSet::zeros(model.dims);
    return s;
}

void adam_step(MlpModel& m, const ParamSet& grads, AdamState& state, const TrainConfig& cfg) {
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        const auto& p = m.params.layers[l];
        if (grads.layers[l].weights.size() != p.weights.size() ||
            grads.layers[l].biases.size() != p.biases.size() ||
            state.m.layers[l].weights.size() != p.weights.size() ||
            state.v.layers[l].weights.size() != p.weights.size() ||
            state.m.layers[l].biases.size() != p.biases.size() ||
            state.v.layers[l].biases.size() != p.biases.size()) {
            throw DimensionError("Adam state or gradient shape disagrees with the model");
        }
    }
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    const double b1 = cfg.beta1, b2 = cfg.beta2;

    auto update = [&](std::vector<double>& theta, const std::vector<double>& g,
                      std::vector<double>& mom1, std::vector<double>& mom2) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            mom1[i] = b1 * mom1[i] + (1.0 - b1) * g[i];
            mom2[i] = b2 * mom2[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = mom1[i] / bc1;
            const double vhat = mom2[i] / bc2;
            theta[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    };
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        auto& p = m.params.layers[l];
        update(p.weights, grads.layers[l].weights, state.m.layers[l].weights,
               state.v.layers[l].weights);
        update(p.biases, grads.layers[l].biases, state.m.layers[l].biases,
               state.v.layers[l].biases);
    }
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[best]) best = k;
    }
    return best;
}

Prediction predict(const MlpModel& m, std::span<const double> features) {
    if (features.size() != m.dims[0]) {
        throw DimensionError("record has " + std::to_string(features.size()) +
                             " features, model expects " + std::to_string(m.dims[0]));
    }
    const detail::TransposedWeights t(m.params);
    detail::SampleBuffers buf(m.dims);
    detail::sample_forward(m, t, features.data(), buf);
    const auto p = softmax3(buf.z);
    return {static_cast<MicClass>(argmax(buf.z)), p};
}

double gradient_check(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels,
                      double step) {
    if (!(step > 0.0)) throw InvalidParameter("finite-difference step must be positive");
    const ParamSet analytic = backward(m, forward(m, x), labels);

    MlpModel probe = m;
    double worst = 0.0;
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        for (int is_bias = 0; is_bias < 2; ++is_bias) {
            auto& values = is_bias ? probe.params.layers[l].biases : probe.params.layers[l].weights;
            const auto& grads =
                is_bias ? analytic.layers[l].biases : analytic.layers[l].weights;
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double saved = values[i];
                values[i] = saved + step;
                const double up = mean_loss(probe, x, labels);
                values[i] = saved - step;
                const double down = mean_loss(probe, x, labels);
                values[i] = saved;
                const double numeric = (up - down) / (2.0 * step);
                const double a = grads[i];
                const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
                worst = std::max(worst, std::abs(a - numeric) / denom);
            }
        }
    }
    return worst;
}

}  // namespace pamic
