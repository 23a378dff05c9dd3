#pragma once

// Matrix CSV files:
//
//   # rows=<r> cols=<c>
//   <r lines of c comma-separated decimals>
//
// Values use the shortest representation that parses back to the same
// double, so a write/read cycle is lossless. Every file is written to a
// temporary sibling and renamed into place.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "json.hpp"

#include "perfalign/errors.hpp"
#include "perfalign/format.hpp"
#include "perfalign/matrix.hpp"

namespace perfalign {

namespace fs = std::filesystem;

inline void atomic_write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string matrix_to_csv(const Matrix& m) {
  std::string out = "# rows=" + std::to_string(m.rows()) + " cols=" + std::to_string(m.cols()) + "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

namespace detail {

inline long parse_header_field(std::string_view header, std::string_view key, const std::string& src) {
  const auto pos = header.find(key);
  if (pos == std::string_view::npos) throw DataError(src + ": header lacks '" + std::string(key) + "'");
  const char* begin = header.data() + pos + key.size();
  long value = -1;
  auto [ptr, ec] = std::from_chars(begin, header.data() + header.size(), value);
  if (ec != std::errc{} || value < 0) throw DataError(src + ": bad '" + std::string(key) + "' value");
  return value;
}

inline double parse_double(std::string_view field, const std::string& src, long line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw DataError(src + ":" + std::to_string(line) + ": cannot parse '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) {
    throw DataError(src + ":" + std::to_string(line) + ": non-finite value");
  }
  return value;
}

}  // namespace detail

inline Matrix matrix_from_csv(const std::string& text, const std::string& source = "<matrix>") {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header) || header.rfind("#", 0) != 0) {
    throw DataError(source + ": missing '# rows=<r> cols=<c>' header");
  }
  const long rows = detail::parse_header_field(header, "rows=", source);
  const long cols = detail::parse_header_field(header, "cols=", source);
  Matrix m(rows, cols);
  std::string line;
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) {
      throw DataError(source + ": expected " + std::to_string(rows) + " data rows, got " + std::to_string(r));
    }
    std::string_view rest(line);
    if (!rest.empty() && rest.back() == '\r') rest.remove_suffix(1);
    long c = 0;
    if (cols > 0) {
      while (true) {
        const auto comma = rest.find(',');
        const std::string_view field = rest.substr(0, comma);
        if (c >= cols) throw DataError(source + ":" + std::to_string(r + 2) + ": too many columns");
        m(r, c++) = detail::parse_double(field, source, r + 2);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    } else if (!rest.empty()) {
      throw DataError(source + ":" + std::to_string(r + 2) + ": expected an empty row");
    }
    if (c != cols) {
      throw DataError(source + ":" + std::to_string(r + 2) + ": expected " + std::to_string(cols) +
                      " columns, got " + std::to_string(c));
    }
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line != "\r") throw DataError(source + ": trailing data after " + std::to_string(rows) + " rows");
  }
  return m;
}

inline void write_matrix_csv(const fs::path& path, const Matrix& m) { atomic_write_text(path, matrix_to_csv(m)); }

inline Matrix read_matrix_csv(const fs::path& path) { return matrix_from_csv(read_text(path), path.string()); }

// One integer label per line after a "label" header.
inline void write_labels_csv(const fs::path& path, const std::vector<int>& labels) {
  std::string out = "label\n";
  for (int l : labels) out += std::to_string(l) + "\n";
  atomic_write_text(path, out);
}

inline std::vector<int> read_labels_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<int> labels;
  if (!std::getline(in, line) || line.rfind("label", 0) != 0) throw DataError(path.string() + ": missing 'label' header");
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    int v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc{}) throw DataError(path.string() + ": bad label '" + line + "'");
    labels.push_back(v);
  }
  return labels;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { atomic_write_text(path, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace perfalign
