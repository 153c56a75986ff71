#pragma once

#include "selfsim/series.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace selfsim {

enum class ValueFormat { price, ret };

/// Malformed CSV content. `line()` is the 1-based line number in the file.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

[[nodiscard]] ValueFormat parse_value_format(const std::string& name);

/// Reads a panel from CSV. The layout is detected from the header:
///   - `date,ticker,value`        long form
///   - `date,<t1>,<t2>,...`       wide form, empty cells are missing values
///   - a single column            one series, row numbers used as labels
/// Rows with a missing value are dropped per ticker and each series is sorted
/// by date. Prices are converted to log-returns.
[[nodiscard]] Panel load_csv(const std::filesystem::path& path, ValueFormat format);

/// Same as load_csv, reading from an in-memory buffer.
[[nodiscard]] Panel parse_csv(const std::string& text, ValueFormat format);

/// Single-column CSV: a header line with the series id, then one value per line.
void write_series_csv(const std::filesystem::path& path, const TimeSeries& x);

}  // namespace selfsim
