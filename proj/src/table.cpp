#include "replimeta/table.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <fmt/format.h>

#include "replimeta/csv.hpp"

namespace replimeta {

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) {
    throw std::logic_error(
        fmt::format("table '{}': row has {} cells, header {}", name, row.size(), header.size()));
  }
  rows.push_back(std::move(row));
}

std::string Table::csv() const {
  std::ostringstream out;
  csv::write_row(out, header);
  for (const auto& row : rows) csv::write_row(out, row);
  return out.str();
}

std::string Table::markdown() const {
  auto cell = [](const std::string& s) {
    std::string out;
    for (const char c : s) {
      if (c == '|') out += "\\|";
      else out.push_back(c);
    }
    return out;
  };
  std::string out;
  if (!caption.empty()) out += fmt::format("**{}**\n\n", caption);
  out += "|";
  for (const auto& h : header) out += " " + cell(h) + " |";
  out += "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out += i == 0 ? ":---|" : "---:|";
  out += "\n";
  for (const auto& row : rows) {
    out += "|";
    for (const auto& c : row) out += " " + cell(c) + " |";
    out += "\n";
  }
  return out;
}

std::string fixed(double value, int decimals) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::string s = fmt::format("{:.{}f}", value, decimals);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string p_text(double p) {
  if (p < 0.0001) return "<0.0001";
  return fixed(p, 4);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error(fmt::format("cannot move '{}' into place: {}", path.string(),
                                         ec.message()));
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fmt::format("{:016x}", fnv1a64(bytes));
}

}  // namespace replimeta
