#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "idat/model.hpp"

namespace idat {

struct Dataset {
  std::string name;
  std::vector<std::vector<double>> features;
  std::vector<std::int32_t> labels;
  std::int32_t class_count = 0;

  std::size_t size() const { return features.size(); }
  std::size_t dimension() const { return features.empty() ? 0 : features.front().size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      cells.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return cells;
}

inline std::optional<double> parse_double(std::string_view cell) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    return std::nullopt;
  }
  if (!std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace detail

/// Numeric CSV loader. The label column (default: last) may hold strings
/// or numbers; either way labels are remapped to contiguous ids in first-
/// appearance order. Ragged rows and non-numeric feature cells are
/// rejected with the offending 1-based row number.
inline Dataset load_csv(const std::string& path, bool has_header = false,
                        std::int32_t label_column = -1) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_csv: cannot open " + path);
  }
  Dataset dataset;
  {
    const auto slash = path.find_last_of('/');
    dataset.name = slash == std::string::npos ? path : path.substr(slash + 1);
  }
  std::unordered_map<std::string, std::int32_t> label_ids;
  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && has_header) {
      continue;
    }
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto cells = detail::split_csv_line(line);
    if (width == 0) {
      width = cells.size();
      if (width < 2) {
        throw std::runtime_error("load_csv: row " + std::to_string(row) +
                                 " has fewer than two columns");
      }
      if (label_column >= 0 && static_cast<std::size_t>(label_column) >= width) {
        throw std::runtime_error("load_csv: label column out of range");
      }
    } else if (cells.size() != width) {
      throw std::runtime_error("load_csv: ragged row " + std::to_string(row));
    }
    const std::size_t label_at =
        label_column < 0 ? width - 1 : static_cast<std::size_t>(label_column);
    std::vector<double> sample;
    sample.reserve(width - 1);
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_at) {
        continue;
      }
      const auto value = detail::parse_double(cells[c]);
      if (!value) {
        throw std::runtime_error("load_csv: non-numeric feature in row " + std::to_string(row) +
                                 ", column " + std::to_string(c + 1));
      }
      sample.push_back(*value);
    }
    const auto [it, inserted] = label_ids.try_emplace(
        std::string(cells[label_at]), static_cast<std::int32_t>(label_ids.size()));
    dataset.features.push_back(std::move(sample));
    dataset.labels.push_back(it->second);
  }
  if (dataset.features.empty()) {
    throw std::runtime_error("load_csv: no data rows in " + path);
  }
  dataset.class_count = static_cast<std::int32_t>(label_ids.size());
  return dataset;
}

/// Feature-only CSV (prediction queries).
inline std::vector<std::vector<double>> load_features_csv(const std::string& path,
                                                          bool has_header = false) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_features_csv: cannot open " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && has_header) {
      continue;
    }
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto cells = detail::split_csv_line(line);
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw std::runtime_error("load_features_csv: ragged row " + std::to_string(row));
    }
    std::vector<double> sample;
    sample.reserve(width);
    for (std::size_t c = 0; c < width; ++c) {
      const auto value = detail::parse_double(cells[c]);
      if (!value) {
        throw std::runtime_error("load_features_csv: non-numeric cell in row " +
                                 std::to_string(row) + ", column " + std::to_string(c + 1));
      }
      sample.push_back(*value);
    }
    rows.push_back(std::move(sample));
  }
  if (rows.empty()) {
    throw std::runtime_error("load_features_csv: no data rows in " + path);
  }
  return rows;
}

/// Writes features plus the label id as the last column, with enough
/// digits to round-trip exactly.
inline void write_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_csv: cannot open " + path);
  }
  out.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    for (const double v : dataset.features[t]) {
      out << v << ',';
    }
    out << dataset.labels[t] << '\n';
  }
  if (!out) {
    throw std::runtime_error("write_csv: write failed for " + path);
  }
}

/// Optional min-max feature scaling to [0, 1]; constant dimensions map
/// to 0.
inline void minmax_normalize(Dataset& dataset) {
  if (dataset.features.empty()) {
    return;
  }
  const std::size_t dim = dataset.dimension();
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (const auto& sample : dataset.features) {
    for (std::size_t d = 0; d < dim; ++d) {
      lo[d] = std::min(lo[d], sample[d]);
      hi[d] = std::max(hi[d], sample[d]);
    }
  }
  for (auto& sample : dataset.features) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double range = hi[d] - lo[d];
      sample[d] = range > 0.0 ? (sample[d] - lo[d]) / range : 0.0;
    }
  }
}

}  // namespace idat
