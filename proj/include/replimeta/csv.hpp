#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace replimeta::csv {

struct Record {
  std::size_t line = 0;  // 1-based line number in the source
  std::vector<std::string> fields;
};

/// Reads comma-separated records. Quoted fields ("a,b" and "" escapes) are
/// supported; blank lines are skipped; a trailing CR ends the line and
/// surrounding whitespace is trimmed from unquoted fields.
std::vector<Record> read(std::istream& in);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_exact(double value);

}  // namespace replimeta::csv
