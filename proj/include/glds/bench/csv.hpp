#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace glds::bench {

// 17 significant digits round-trip any double exactly.
inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline std::string format_int(std::int64_t value) { return std::to_string(value); }

inline std::string format_bool(bool value) { return value ? "1" : "0"; }

// Row-oriented CSV accumulator with a fixed header; rows must match the header
// width. Output uses '\n' line endings unconditionally so reruns byte-match
// across platforms.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row) {
    if (row.size() != header_.size()) {
      throw std::logic_error("CsvTable: row width does not match header");
    }
    rows_.push_back(std::move(row));
  }

  std::size_t row_count() const { return rows_.size(); }

  std::string to_string() const {
    std::string out = join(header_);
    out.push_back('\n');
    for (const auto& row : rows_) {
      out += join(row);
      out.push_back('\n');
    }
    return out;
  }

  void write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    out << to_string();
    if (!out) throw std::runtime_error("failed writing output file '" + path + "'");
  }

 private:
  static std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line.push_back(',');
      line += cells[i];
    }
    return line;
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// FNV-1a over the raw config text, recorded in the metadata sidecar so output
// files are traceable to the exact config that produced them.
inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

inline std::string hex64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing output file '" + path + "'");
}

}  // namespace glds::bench
