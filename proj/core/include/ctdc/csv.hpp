#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctdc {

// RFC 4180 style table. The first record is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  std::optional<std::size_t> column(std::string_view name) const;
  // Throws Error(schema) naming the missing column.
  std::size_t require_column(std::string_view name, std::string_view what) const;
};

// Accepts LF or CRLF line ends and a leading UTF-8 BOM; blank lines are
// skipped. Throws Error(schema) on a missing header, ragged rows or an
// unterminated quote.
CsvTable parse_csv(std::string_view text);

std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);
// Locale-independent; throws Error(data) mentioning `context` on failure.
double parse_double(std::string_view text, std::string_view context);
long long parse_integer(std::string_view text, std::string_view context);

}  // namespace ctdc
