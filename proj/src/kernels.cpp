#include "pamic/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <string>

#include "pamic/error.hpp"
#include "sample_kernel.hpp"

namespace pamic::kernels {

namespace {

void check_synthesis_shape(std::span<const LabeledParams> tuples, const FrequencyGrid& grid,
                           std::span<double> out) {
    if (out.size() != tuples.size() * 2 * grid.count()) {
        throw DimensionError("synthesis buffer has " + std::to_string(out.size()) +
                             " slots, need " + std::to_string(tuples.size() * 2 * grid.count()));
    }
    for (const auto& t : tuples) t.params.validate();
}

void check_batch(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels) {
    if (x.cols != m.dims[0]) {
        throw DimensionError("input has " + std::to_string(x.cols) + " features, model expects " +
                             std::to_string(m.dims[0]));
    }
    if (labels.size() != x.rows) throw DimensionError("label count disagrees with batch size");
    for (std::uint8_t y : labels) {
        if (y >= m.dims[3]) throw DimensionError("label outside output range");
    }
}

/// Forward + loss + argmax for samples [begin, end), in order.
void evaluate_range(const MlpModel& m, const detail::TransposedWeights& t, MatrixView x,
                    std::span<const std::uint8_t> labels, std::size_t begin, std::size_t end,
                    detail::SampleBuffers& buf, EvalTotals& acc) {
    for (std::size_t s = begin; s < end; ++s) {
        detail::sample_forward(m, t, x.row(s).data(), buf);
        acc.loss_sum += cross_entropy_with_logits(buf.z, labels[s]);
        const std::size_t pred = argmax(buf.z);
        acc.correct += pred == labels[s] ? 1 : 0;
        acc.confusion[labels[s]][pred] += 1;
        acc.count += 1;
    }
}

void merge(EvalTotals& into, const EvalTotals& part) {
    into.loss_sum += part.loss_sum;
    into.correct += part.correct;
    into.count += part.count;
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        for (std::size_t j = 0; j < kNumClasses; ++j) into.confusion[i][j] += part.confusion[i][j];
    }
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) { omp_set_num_threads(std::max(1, n)); }

namespace serial {

void synthesize(std::span<const LabeledParams> tuples, const FrequencyGrid& grid,
                std::span<double> out) {
    check_synthesis_shape(tuples, grid, out);
    const std::size_t width = 2 * grid.count();
    for (std::size_t r = 0; r < tuples.size(); ++r) {
        sweep_into(tuples[r].params, grid, out.subspan(r * width, width));
    }
}

BatchStats batch_gradient(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels,
                          ParamSet& grad) {
    check_batch(m, x, labels);
    if (x.rows == 0) throw DimensionError("empty batch");
    const ForwardCache cache = forward(m, x);
    BatchStats stats;
    for (std::size_t s = 0; s < x.rows; ++s) {
        const auto z = cache.logits_row(s);
        stats.loss_sum += cross_entropy_with_logits(z, labels[s]);
        stats.correct += argmax(z) == labels[s] ? 1 : 0;
    }
    grad = backward(m, cache, labels);
    return stats;
}

EvalTotals evaluate(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels) {
    check_batch(m, x, labels);
    const detail::TransposedWeights t(m.params);
    detail::SampleBuffers buf(m.dims);
    EvalTotals totals;
    evaluate_range(m, t, x, labels, 0, x.rows, buf, totals);
    return totals;
}

}  // namespace serial

namespace omp {

void synthesize(std::span<const LabeledParams> tuples, const FrequencyGrid& grid,
                std::span<double> out) {
    check_synthesis_shape(tuples, grid, out);
    const std::size_t width = 2 * grid.count();
    const auto n = static_cast<std::ptrdiff_t>(tuples.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        const auto ru = static_cast<std::size_t>(r);
        sweep_into(tuples[ru].params, grid, out.subspan(ru * width, width));
    }
}

BatchStats batch_gradient(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels,
                          ParamSet& grad, GradientWorkspace& ws) {
    check_batch(m, x, labels);
    if (x.rows == 0) throw DimensionError("empty batch");
    const std::size_t chunks = (x.rows + kGradientChunk - 1) / kGradientChunk;
    if (ws.partials.size() < chunks) ws.partials.resize(chunks);
    ws.partial_stats.assign(chunks, BatchStats{});
    const detail::TransposedWeights t(m.params);

#pragma omp parallel
    {
        detail::SampleBuffers buf(m.dims);
#pragma omp for schedule(static)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
            const auto cu = static_cast<std::size_t>(c);
            ParamSet& part = ws.partials[cu];
            detail::reset_like(part, m.dims);
            BatchStats& st = ws.partial_stats[cu];
            const std::size_t end = std::min(x.rows, (cu + 1) * kGradientChunk);
            for (std::size_t s = cu * kGradientChunk; s < end; ++s) {
                const double* xs = x.row(s).data();
                detail::sample_forward(m, t, xs, buf);
                st.loss_sum += cross_entropy_with_logits(buf.z, labels[s]);
                st.correct += argmax(buf.z) == labels[s] ? 1 : 0;
                detail::sample_backward(m, xs, labels[s], buf, part);
            }
        }
    }

    detail::reset_like(grad, m.dims);
    BatchStats stats;
    for (std::size_t c = 0; c < chunks; ++c) {
        detail::add_into(grad, ws.partials[c]);
        stats.loss_sum += ws.partial_stats[c].loss_sum;
        stats.correct += ws.partial_stats[c].correct;
    }
    detail::divide_by(grad, static_cast<double>(x.rows));
    return stats;
}

EvalTotals evaluate(const MlpModel& m, MatrixView x, std::span<const std::uint8_t> labels) {
    check_batch(m, x, labels);
    const std::size_t chunks = (x.rows + kEvalChunk - 1) / kEvalChunk;
    std::vector<EvalTotals> parts(chunks);
    const detail::TransposedWeights t(m.params);
#pragma omp parallel
    {
        detail::SampleBuffers buf(m.dims);
#pragma omp for schedule(static)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
            const auto cu = static_cast<std::size_t>(c);
            evaluate_range(m, t, x, labels, cu * kEvalChunk,
                           std::min(x.rows, (cu + 1) * kEvalChunk), buf, parts[cu]);
        }
    }
    EvalTotals totals;
    for (const auto& p : parts) merge(totals, p);
    return totals;
}

}  // namespace omp

}  // namespace pamic::kernels
