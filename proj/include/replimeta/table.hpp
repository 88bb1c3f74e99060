#pragma once

// Output tables and file helpers shared by the commands. A table is held as
// already-formatted strings so the CSV file and the markdown fragment of the
// report print exactly the same numbers.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace replimeta {

struct Table {
  /// File stem of the CSV ("individual_analyses" -> individual_analyses.csv).
  std::string name;
  std::string caption;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string csv() const;
  std::string markdown() const;
};

/// Fixed-point text without a negative zero.
std::string fixed(double value, int decimals);
/// Four decimals, "<0.0001" below that.
std::string p_text(double p);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view bytes);
/// FNV-1a of a file's bytes as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

}  // namespace replimeta
