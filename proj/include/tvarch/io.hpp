#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tvarch/model.hpp"

namespace tvarch {

/// Shortest-roundtrip-safe decimal form (17 significant digits, '.' separator).
[[nodiscard]] std::string format_number(double v);

/// Column selector for CSV ingestion: header name or 0-based index.
using ColumnSelector = std::variant<std::string, std::size_t>;

inline constexpr std::size_t kMinUsableObservations = 30;

/// Reads one numeric column. A first row whose selected cell is not numeric is treated as a
/// header. Applies `difference`-fold first differencing and returns the values as a sample of
/// order 0 (callers re-split with SeriesSample::with_order). Throws DataError for a missing file,
/// a non-numeric cell (naming its 1-based line), or fewer than `min_length` usable values.
[[nodiscard]] SeriesSample ingest_csv(const std::filesystem::path& path,
                                      const std::optional<ColumnSelector>& column = std::nullopt,
                                      std::size_t difference = 0,
                                      std::size_t min_length = kMinUsableObservations);

/// Single-column CSV with a header line.
void write_column_csv(const std::filesystem::path& path, const std::string& header,
                      std::span<const double> values);

void write_text(const std::filesystem::path& path, const std::string& text);
[[nodiscard]] std::string read_text(const std::filesystem::path& path);

}  // namespace tvarch
