// Serial reference vs OpenMP kernels on the production problem sizes.
//
//   ./bench_kernels --benchmark_filter=gradient
//
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pamic/dataset.hpp"
#include "pamic/kernels.hpp"
#include "pamic/mlp.hpp"

namespace {

using namespace pamic;

const std::vector<LabeledParams>& tuples() {
    static const std::vector<LabeledParams> t = [] {
        std::vector<LabeledParams> all;
        for (const auto& spec : default_grid_specs()) {
            const auto cls = enumerate_params(spec);
            for (std::size_t i = 0; i < cls.size(); i += 49) all.push_back(cls[i]);
        }
        return all;
    }();
    return t;
}

/// Normalized records on the full-range grid plus a freshly initialized model.
struct Fixture {
    FrequencyGrid grid = FrequencyGrid::standard_full();
    std::vector<double> features;
    std::vector<std::uint8_t> labels;
    MlpModel model;
    std::size_t width = 0;

    Fixture() {
        width = 2 * grid.count();
        features.resize(tuples().size() * width);
        kernels::serial::synthesize(tuples(), grid, features);
        std::vector<double> scale(width, 0.0);
        for (std::size_t r = 0; r < tuples().size(); ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                scale[c] = std::max(scale[c], std::abs(features[r * width + c]));
            }
            labels.push_back(static_cast<std::uint8_t>(label_of(tuples()[r].mic_class)));
        }
        for (std::size_t r = 0; r < tuples().size(); ++r) {
            for (std::size_t c = 0; c < width; ++c) features[r * width + c] /= scale[c];
        }
        model = xavier_init(default_dims(width), 7);
    }

    MatrixView rows(std::size_t n) const {
        return MatrixView(std::span<const double>(features.data(), n * width), n, width);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_SynthesizeSerial(benchmark::State& state) {
    const auto& f = fixture();
    std::vector<double> out(f.features.size());
    for (auto _ : state) {
        kernels::serial::synthesize(tuples(), f.grid, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tuples().size()));
}

void BM_SynthesizeOmp(benchmark::State& state) {
    const auto& f = fixture();
    std::vector<double> out(f.features.size());
    for (auto _ : state) {
        kernels::omp::synthesize(tuples(), f.grid, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tuples().size()));
}

void BM_GradientSerial(benchmark::State& state) {
    const auto& f = fixture();
    const auto n = static_cast<std::size_t>(state.range(0));
    ParamSet grad = ParamSet::zeros(f.model.dims);
    for (auto _ : state) {
        auto st = kernels::serial::batch_gradient(f.model, f.rows(n),
                                                  std::span(f.labels.data(), n), grad);
        benchmark::DoNotOptimize(st);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GradientOmp(benchmark::State& state) {
    const auto& f = fixture();
    const auto n = static_cast<std::size_t>(state.range(0));
    ParamSet grad = ParamSet::zeros(f.model.dims);
    kernels::GradientWorkspace ws;
    for (auto _ : state) {
        auto st = kernels::omp::batch_gradient(f.model, f.rows(n),
                                               std::span(f.labels.data(), n), grad, ws);
        benchmark::DoNotOptimize(st);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EvaluateSerial(benchmark::State& state) {
    const auto& f = fixture();
    const std::size_t n = tuples().size();
    for (auto _ : state) {
        auto t = kernels::serial::evaluate(f.model, f.rows(n), f.labels);
        benchmark::DoNotOptimize(t);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_EvaluateOmp(benchmark::State& state) {
    const auto& f = fixture();
    const std::size_t n = tuples().size();
    for (auto _ : state) {
        auto t = kernels::omp::evaluate(f.model, f.rows(n), f.labels);
        benchmark::DoNotOptimize(t);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_PredictSingle(benchmark::State& state) {
    const auto& f = fixture();
    const auto x = f.rows(1).row(0);
    for (auto _ : state) {
        auto p = predict(f.model, x);
        benchmark::DoNotOptimize(p);
    }
}

}  // namespace

BENCHMARK(BM_SynthesizeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SynthesizeOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientSerial)->Arg(128)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GradientOmp)->Arg(128)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictSingle)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
