#include "pamic/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "pamic/error.hpp"
#include "pamic/kernels.hpp"
#include "pamic/rng.hpp"

namespace pamic {

std::vector<double> linspace(double low, double high, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {low};
    std::vector<double> v(count);
    const double step = (high - low) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) v[i] = low + step * static_cast<double>(i);
    v.back() = high;
    return v;
}

std::vector<double> ClassGridSpec::f3_values() const { return linspace(f3_low, f3_high, f3_count); }

std::vector<double> ClassGridSpec::f4_values() const { return linspace(f4_low, f4_high, f4_count); }

std::size_t ClassGridSpec::tuple_count() const {
    return f2_values.size() * f3_count * f4_count * xi_values.size() * xi_values.size();
}

void ClassGridSpec::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (f2_values.empty() || xi_values.empty() || f3_count == 0 || f4_count == 0) {
        throw InvalidParameter("class grid has an empty axis");
    }
    for (double f : f2_values) {
        if (!positive(f)) throw InvalidParameter("f2 grid values must be positive");
    }
    if (!positive(f3_low) || !positive(f4_low) || !(f3_high >= f3_low) || !(f4_high >= f4_low) ||
        !std::isfinite(f3_high) || !std::isfinite(f4_high)) {
        throw InvalidParameter("resonance ranges must be positive with low <= high");
    }
    for (double xi : xi_values) {
        if (!(xi > 0.0 && xi <= 1.0)) throw InvalidParameter("damping grid values must lie in (0, 1]");
    }
}

std::vector<double> default_xi_values() {
    constexpr std::size_t n = 15;
    constexpr double lo = 0.015, hi = 0.99;
    const double ratio = std::pow(hi / lo, 1.0 / static_cast<double>(n - 1));
    std::vector<double> xi(n);
    for (std::size_t k = 0; k < n; ++k) xi[k] = lo * std::pow(ratio, static_cast<double>(k));
    xi.front() = lo;
    xi.back() = hi;
    return xi;
}

std::vector<ClassGridSpec> default_grid_specs() {
    const auto xi = default_xi_values();
    ClassGridSpec ecm30b{MicClass::ECM30B, {23.75, 25.0, 26.25}, 8930.0, 9866.0, 13965.0, 15432.0,
                         10, 10, xi};
    ClassGridSpec ecm60{MicClass::ECM60, {14.25, 15.0, 15.75}, 7980.0, 8817.0, 7980.0, 8817.0,
                        10, 10, xi};
    ClassGridSpec wm66{MicClass::WM66, {61.75, 65.0, 68.25}, 13015.0, 14383.0, 13015.0, 14383.0,
                       10, 10, xi};
    return {ecm30b, ecm60, wm66};
}

std::vector<LabeledParams> enumerate_params(const ClassGridSpec& spec) {
    spec.validate();
    const auto f3s = spec.f3_values();
    const auto f4s = spec.f4_values();
    std::vector<LabeledParams> out;
    out.reserve(spec.tuple_count());
    for (double f2 : spec.f2_values) {
        for (double f3 : f3s) {
            for (double f4 : f4s) {
                for (double xi3 : spec.xi_values) {
                    for (double xi4 : spec.xi_values) {
                        out.push_back({spec.mic_class, MicParams{f2, f3, f4, xi3, xi4}});
                    }
                }
            }
        }
    }
    return out;
}

void Dataset::push_back(std::span<const double> row_features, MicClass label) {
    if (empty() && feature_count == 0) feature_count = row_features.size();
    if (row_features.size() != feature_count) {
        throw DimensionError("record has " + std::to_string(row_features.size()) +
                             " features, dataset has " + std::to_string(feature_count));
    }
    features.insert(features.end(), row_features.begin(), row_features.end());
    labels.push_back(static_cast<std::uint8_t>(label_of(label)));
}

std::size_t Dataset::count_of(MicClass c) const {
    const auto y = static_cast<std::uint8_t>(label_of(c));
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), y));
}

std::string Dataset::provenance() const {
    std::string canon;
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g,", v);
        canon += buf;
    };
    canon += "grid:";
    put(grid.f_min());
    put(grid.f_max());
    canon += std::to_string(grid.count()) + ";";
    for (const auto& s : specs) {
        canon += "class:" + std::to_string(label_of(s.mic_class)) + ";f2:";
        for (double f : s.f2_values) put(f);
        canon += "f3:";
        put(s.f3_low);
        put(s.f3_high);
        canon += std::to_string(s.f3_count) + ";f4:";
        put(s.f4_low);
        put(s.f4_high);
        canon += std::to_string(s.f4_count) + ";xi:";
        for (double x : s.xi_values) put(x);
    }
    canon += "seed:" + std::to_string(seed);

    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Dataset Dataset::subset(std::span<const std::size_t> order) const {
    Dataset out;
    out.feature_count = feature_count;
    out.grid = grid;
    out.norm = norm;
    out.normalized = normalized;
    out.specs = specs;
    out.seed = seed;
    out.features.resize(order.size() * feature_count);
    out.labels.resize(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto src = row(order[k]);
        std::copy(src.begin(), src.end(), out.features.begin() + static_cast<std::ptrdiff_t>(k * feature_count));
        out.labels[k] = labels[order[k]];
    }
    return out;
}

namespace {

Dataset synthesize(const std::vector<LabeledParams>& tuples, const FrequencyGrid& grid) {
    Dataset d;
    d.grid = grid;
    d.feature_count = 2 * grid.count();
    d.features.resize(tuples.size() * d.feature_count);
    d.labels.resize(tuples.size());
    kernels::omp::synthesize(tuples, grid, d.features);
    for (std::size_t r = 0; r < tuples.size(); ++r) {
        d.labels[r] = static_cast<std::uint8_t>(label_of(tuples[r].mic_class));
    }
    return d;
}

}  // namespace

Dataset build_dataset(const std::vector<ClassGridSpec>& specs, const FrequencyGrid& grid) {
    if (specs.empty()) throw InvalidParameter("no class grids given");
    if (grid.count() < 2) throw InvalidParameter("frequency grid is empty");
    std::vector<LabeledParams> tuples;
    for (const auto& s : specs) {
        auto part = enumerate_params(s);
        tuples.insert(tuples.end(), part.begin(), part.end());
    }
    Dataset d = synthesize(tuples, grid);
    d.specs = specs;
    return d;
}

NormStats compute_norm_stats(const Dataset& d) {
    if (d.empty()) throw InvalidParameter("cannot compute normalization stats of an empty dataset");
    NormStats s;
    s.max_abs.assign(d.feature_count, 0.0);
    for (std::size_t r = 0; r < d.size(); ++r) {
        const auto row = d.row(r);
        for (std::size_t i = 0; i < d.feature_count; ++i) {
            s.max_abs[i] = std::max(s.max_abs[i], std::abs(row[i]));
        }
    }
    for (std::size_t i = 0; i < s.max_abs.size(); ++i) {
        if (!(s.max_abs[i] > 0.0) || !std::isfinite(s.max_abs[i])) {
            throw InvalidParameter("feature column " + std::to_string(i) +
                                   " has a zero or non-finite maximum");
        }
    }
    return s;
}

void normalize_in_place(Dataset& d, const NormStats& s) {
    if (s.max_abs.size() != d.feature_count) {
        throw DimensionError("normalization stats have " + std::to_string(s.max_abs.size()) +
                             " entries, dataset has " + std::to_string(d.feature_count) +
                             " features");
    }
    for (double m : s.max_abs) {
        if (!(m > 0.0) || !std::isfinite(m)) {
            throw InvalidParameter("normalization maxima must be positive and finite");
        }
    }
    for (std::size_t r = 0; r < d.size(); ++r) {
        auto row = d.row(r);
        for (std::size_t i = 0; i < d.feature_count; ++i) row[i] /= s.max_abs[i];
    }
    d.norm = s;
    d.normalized = true;
}

Dataset normalize(const Dataset& d, const NormStats& s) {
    Dataset out = d;
    normalize_in_place(out, s);
    return out;
}

SplitSizes split_sizes(std::size_t n, const SplitFractions& f) {
    if (f.train < 0.0 || f.dev < 0.0 || f.test < 0.0 ||
        std::abs(f.train + f.dev + f.test - 1.0) > 1e-9) {
        throw InvalidParameter("split fractions must be non-negative and sum to 1");
    }
    const double nd = static_cast<double>(n);
    // the small offset keeps e.g. 0.9 * 202500 from flooring to 182249
    const auto train = static_cast<std::size_t>(std::floor(f.train * nd + 1e-9));
    const auto dev = std::min(n - train, static_cast<std::size_t>(std::floor(f.dev * nd + 1e-9)));
    return {train, dev, n - train - dev};
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.index(i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

SplitSet shuffle_split(const Dataset& d, std::uint64_t seed, const SplitFractions& fractions) {
    if (d.empty()) throw InvalidParameter("cannot split an empty dataset");
    const SplitSizes sz = split_sizes(d.size(), fractions);
    const auto order = shuffled_order(d.size(), seed);
    const std::span<const std::size_t> all(order);
    SplitSet s;
    s.seed = seed;
    s.train = d.subset(all.subspan(0, sz.train));
    s.dev = d.subset(all.subspan(sz.train, sz.dev));
    s.test = d.subset(all.subspan(sz.train + sz.dev, sz.test));
    return s;
}

namespace {

double draw_off_grid(Rng& rng, double lo, double hi, const std::vector<double>& grid_values,
                     bool strictly_inside) {
    if (!(hi > lo)) {
        throw InvalidParameter("off-grid draw needs a range of positive width");
    }
    for (;;) {
        const double v = rng.uniform(lo, hi);
        if (strictly_inside && (v <= lo || v >= hi)) continue;
        if (std::find(grid_values.begin(), grid_values.end(), v) != grid_values.end()) continue;
        return v;
    }
}

}  // namespace

std::vector<LabeledParams> draw_offgrid_params(const std::vector<ClassGridSpec>& specs,
                                               std::uint64_t seed, std::size_t per_class) {
    Rng rng(seed);
    std::vector<LabeledParams> out;
    for (const auto& s : specs) {
        s.validate();
        const auto [f2_lo, f2_hi] = std::minmax_element(s.f2_values.begin(), s.f2_values.end());
        const auto [xi_lo, xi_hi] = std::minmax_element(s.xi_values.begin(), s.xi_values.end());
        const auto f3s = s.f3_values();
        const auto f4s = s.f4_values();
        for (std::size_t k = 0; k < per_class; ++k) {
            MicParams p;
            p.f2 = draw_off_grid(rng, *f2_lo, *f2_hi, s.f2_values, false);
            p.f3 = draw_off_grid(rng, s.f3_low, s.f3_high, f3s, true);
            p.f4 = draw_off_grid(rng, s.f4_low, s.f4_high, f4s, true);
            p.xi3 = draw_off_grid(rng, *xi_lo, *xi_hi, s.xi_values, false);
            p.xi4 = draw_off_grid(rng, *xi_lo, *xi_hi, s.xi_values, false);
            out.push_back({s.mic_class, p});
        }
    }
    return out;
}

Dataset make_offgrid_tests(const std::vector<ClassGridSpec>& specs, const FrequencyGrid& grid,
                           std::uint64_t seed, std::size_t per_class) {
    const auto tuples = draw_offgrid_params(specs, seed, per_class);
    Dataset d = synthesize(tuples, grid);
    d.specs = specs;
    d.seed = seed;
    return d;
}

}  // namespace pamic
