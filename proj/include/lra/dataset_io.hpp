#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lra/regress.hpp"

namespace lra::bench {

using regress::Dataset;

struct LoadOptions {
  /// Response column by (case-insensitive) name; default: first non-date column.
  std::optional<std::string> response;
  /// Columns to exclude from the features, by name.
  std::vector<std::string> drop;
  /// When true (default), a column whose name is the response name plus an
  /// underscore suffix (or vice versa) is treated as an alternate encoding of
  /// the response and dropped. The Istanbul-style files carry the index in
  /// two currencies; only the chosen one participates.
  bool drop_response_variants = true;
};

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  out.push_back(trim(cell));
  return out;
}

inline bool is_variant_of(const std::string& a, const std::string& b) {
  // "ise" and "ise_usd" are variants; "sp" and "spx" are not.
  if (a.size() == b.size()) return false;
  const std::string& shorter = a.size() < b.size() ? a : b;
  const std::string& longer = a.size() < b.size() ? b : a;
  return longer.compare(0, shorter.size(), shorter) == 0 && longer[shorter.size()] == '_';
}

}  // namespace detail

/// Reads a header-first CSV into a Dataset. The first data column is the
/// response unless overridden; a leading date-like column is skipped; parse
/// failures carry the 1-based file line number.
inline Dataset load_csv(const std::string& path, const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path, 0);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + path, 1);
  const auto header = detail::split_csv_line(line);
  if (header.empty()) throw ParseError("empty header row", 1);

  std::vector<std::string> names(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) names[j] = detail::lower(header[j]);

  std::vector<bool> use(header.size(), true);
  if (!names.empty() && names[0].find("date") != std::string::npos) use[0] = false;

  std::size_t response_col = header.size();
  if (opts.response) {
    const std::string want = detail::lower(*opts.response);
    for (std::size_t j = 0; j < names.size(); ++j)
      if (use[j] && names[j] == want) {
        response_col = j;
        break;
      }
    if (response_col == header.size()) throw ParseError("response column not found: " + *opts.response, 1);
  } else {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (use[j]) {
        response_col = j;
        break;
      }
    if (response_col == header.size()) throw ParseError("no usable columns", 1);
  }

  for (const std::string& d : opts.drop) {
    const std::string want = detail::lower(d);
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == want) use[j] = false;
  }
  if (opts.drop_response_variants)
    for (std::size_t j = 0; j < names.size(); ++j)
      if (j != response_col && detail::is_variant_of(names[j], names[response_col])) use[j] = false;

  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < names.size(); ++j)
    if (use[j] && j != response_col) feature_cols.push_back(j);
  if (feature_cols.empty()) throw ParseError("no feature columns remain after selection", 1);

  std::vector<Vec> rows;
  Vec responses;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("row has " + std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(header.size()),
                       line_no);
    auto parse_cell = [&](std::size_t j) {
      const std::string& cell = cells[j];
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw ParseError("non-numeric cell '" + cell + "' in column '" + header[j] + "'", line_no);
      return v;
    };
    Vec row(feature_cols.size());
    for (std::size_t k = 0; k < feature_cols.size(); ++k) row[k] = parse_cell(feature_cols[k]);
    responses.push_back(parse_cell(response_col));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows", line_no);

  Dataset data;
  data.x = matkit::Matrix(rows.size(), feature_cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < feature_cols.size(); ++j) data.x(i, j) = rows[i][j];
  data.y = std::move(responses);
  for (std::size_t c : feature_cols) data.feature_names.push_back(header[c]);
  return data;
}

/// Optional preprocessing used by the experiment harness. Standardization
/// centers and unit-scales each feature column; the intercept appends a ones
/// column at the end so existing feature indices keep their meaning.
inline Dataset preprocess(Dataset data, bool standardize, bool intercept) {
  const std::size_t n = data.n();
  if (standardize) {
    for (std::size_t j = 0; j < data.m(); ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += data.x(i, j);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) var += (data.x(i, j) - mean) * (data.x(i, j) - mean);
      const double sd = std::sqrt(var / static_cast<double>(n > 1 ? n - 1 : 1));
      if (sd <= 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) data.x(i, j) = (data.x(i, j) - mean) / sd;
    }
  }
  if (intercept) {
    matkit::Matrix xi(n, data.m() + 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < data.m(); ++j) xi(i, j) = data.x(i, j);
      xi(i, data.m()) = 1.0;
    }
    data.x = std::move(xi);
    data.feature_names.push_back("intercept");
  }
  return data;
}

}  // namespace lra::bench
