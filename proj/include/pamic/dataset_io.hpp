#pragma once

// Dataset persistence: a CSV of records plus a JSON sidecar carrying the grid,
// the class grids, normalization stats and the seed.
//
// CSV: header f0001_amp,...,fNNNN_amp,f0001_phi,...,fNNNN_phi,label; one record
// per '\n'-terminated line; values printed with 17 significant digits.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "pamic/dataset.hpp"

namespace pamic {

inline constexpr int kDatasetSchemaVersion = 1;

/// `<csv path>.json`
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

std::string csv_header(std::size_t grid_count);

/// Writes the CSV body (header + records) to a stream.
void write_dataset_csv(const Dataset& d, std::ostream& out);

/// Writes `path` and its sidecar. Throws IoError when either cannot be written.
void save_dataset(const Dataset& d, const std::filesystem::path& path);

/// Throws IoError (missing/unreadable), ParseError (malformed or truncated)
/// or SchemaError (content contradicts the sidecar).
Dataset load_dataset(const std::filesystem::path& path);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

}  // namespace pamic
