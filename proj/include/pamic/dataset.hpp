#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pamic/response.hpp"

namespace pamic {

/// Parameter grid for one microphone class. The resonance axes are linspaces
/// with both endpoints included; ξ3 and ξ4 share one value list.
struct ClassGridSpec {
    MicClass mic_class = MicClass::ECM30B;
    std::vector<double> f2_values;
    double f3_low = 0.0, f3_high = 0.0;
    double f4_low = 0.0, f4_high = 0.0;
    std::size_t f3_count = 10;
    std::size_t f4_count = 10;
    std::vector<double> xi_values;

    std::vector<double> f3_values() const;
    std::vector<double> f4_values() const;
    std::size_t tuple_count() const;

    void validate() const;

    friend bool operator==(const ClassGridSpec&, const ClassGridSpec&) = default;
};

/// 15 geometrically spaced dampings from 0.015 to 0.99.
std::vector<double> default_xi_values();

/// ECM30B, ECM60 and WM66 grids (67,500 tuples each).
std::vector<ClassGridSpec> default_grid_specs();

/// Inclusive linspace; {low} when count == 1.
std::vector<double> linspace(double low, double high, std::size_t count);

struct LabeledParams {
    MicClass mic_class;
    MicParams params;
};

/// Cartesian product in lexicographic order: f2 outermost, then f3, f4, ξ3, ξ4.
std::vector<LabeledParams> enumerate_params(const ClassGridSpec& spec);

struct NormStats {
    std::vector<double> max_abs;

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Non-owning view of one row.
struct RecordView {
    std::span<const double> features;
    MicClass label;
};

/// Row-major feature matrix plus labels. Features of row r are
/// [amp(p0) .. amp(pN-1), phase(p0) .. phase(pN-1)].
struct Dataset {
    std::size_t feature_count = 0;
    std::vector<double> features;
    std::vector<std::uint8_t> labels;
    FrequencyGrid grid;
    std::optional<NormStats> norm;
    /// True when `features` already hold normalized values.
    bool normalized = false;
    std::vector<ClassGridSpec> specs;
    std::uint64_t seed = 0;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }

    std::span<const double> row(std::size_t r) const {
        return {features.data() + r * feature_count, feature_count};
    }
    std::span<double> row(std::size_t r) {
        return {features.data() + r * feature_count, feature_count};
    }
    RecordView record(std::size_t r) const { return {row(r), static_cast<MicClass>(labels[r])}; }

    /// Appends a row; throws DimensionError on a feature-length mismatch.
    void push_back(std::span<const double> row_features, MicClass label);

    std::size_t count_of(MicClass c) const;

    /// FNV-1a digest of the generation config (grid, specs, seed), hex.
    std::string provenance() const;

    /// Copies the rows listed in `order` into a new dataset sharing metadata.
    Dataset subset(std::span<const std::size_t> order) const;
};

/// One record per parameter tuple across all specs, in spec order then
/// enumerate_params order. Synthesis runs on the OpenMP kernel.
Dataset build_dataset(const std::vector<ClassGridSpec>& specs, const FrequencyGrid& grid);

/// Throws on an empty dataset or a zero column maximum.
NormStats compute_norm_stats(const Dataset& d);

/// Divides each column by its max_abs. Throws DimensionError on a length
/// mismatch and InvalidParameter on a non-positive or non-finite entry.
Dataset normalize(const Dataset& d, const NormStats& s);
void normalize_in_place(Dataset& d, const NormStats& s);

struct SplitFractions {
    double train = 0.90;
    double dev = 0.05;
    double test = 0.05;
};

struct SplitSet {
    Dataset train;
    Dataset dev;
    Dataset test;
    std::uint64_t seed = 0;
};

/// Sizes of a split: floor for train and dev, remainder to test.
struct SplitSizes {
    std::size_t train, dev, test;
};
SplitSizes split_sizes(std::size_t n, const SplitFractions& fractions);

/// Seeded Fisher–Yates permutation followed by contiguous slicing.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);

SplitSet shuffle_split(const Dataset& d, std::uint64_t seed, const SplitFractions& fractions = {});

/// Per class, `per_class` parameter tuples drawn uniformly inside the class
/// ranges, rejecting any value that coincides with a grid value. Raw features.
Dataset make_offgrid_tests(const std::vector<ClassGridSpec>& specs, const FrequencyGrid& grid,
                           std::uint64_t seed, std::size_t per_class = 5);

/// Parameter tuples drawn by make_offgrid_tests, in the same order.
std::vector<LabeledParams> draw_offgrid_params(const std::vector<ClassGridSpec>& specs,
                                               std::uint64_t seed, std::size_t per_class = 5);

}  // namespace pamic
