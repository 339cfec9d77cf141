#ifndef ENSDIV_IO_HPP
#define ENSDIV_IO_HPP

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <limits>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ensdiv/error.hpp"
#include "ensdiv/point_set.hpp"

namespace ensdiv::io {

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& text, std::size_t row, std::size_t col) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
    throw Error(ErrorKind::input, "row " + std::to_string(row) + ", column " + std::to_string(col) +
                                      ": '" + t + "' is not a finite real number");
  return v;
}

template <class RowFn>
void for_each_row(const std::string& path, RowFn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::input, "cannot open '" + path + "'");
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    fn(row, split_fields(line));
  }
}

}  // namespace detail

/// Headerless CSV of reals, one point per row. Rows are numbered from 1 in errors.
inline PointSet read_points_csv(const std::string& path) {
  std::vector<double> coords;
  std::size_t dim = 0;
  detail::for_each_row(path, [&](std::size_t row, const std::vector<std::string>& fields) {
    if (dim == 0) dim = fields.size();
    if (fields.size() != dim)
      throw Error(ErrorKind::input, "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                        " columns, expected " + std::to_string(dim));
    for (std::size_t c = 0; c < fields.size(); ++c) coords.push_back(detail::parse_real(fields[c], row, c + 1));
  });
  if (coords.empty()) throw Error(ErrorKind::input, "'" + path + "' contains no points");
  return PointSet(dim, std::move(coords));
}

struct LabeledData {
  PointSet points;
  std::vector<std::string> labels;

  /// Distinct labels in order of first appearance.
  std::vector<std::string> classes() const {
    std::vector<std::string> out;
    for (const auto& l : labels)
      if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    return out;
  }

  PointSet select(const std::string& label) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) rows.push_back(i);
    if (rows.empty()) throw Error(ErrorKind::input, "unknown class label '" + label + "'");
    return points.subset(rows);
  }
};

/// Headerless CSV with numeric features and a string label in the last column.
inline LabeledData read_labeled_csv(const std::string& path) {
  std::vector<double> coords;
  std::vector<std::string> labels;
  std::size_t width = 0;
  detail::for_each_row(path, [&](std::size_t row, const std::vector<std::string>& fields) {
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw Error(ErrorKind::input, "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                        " columns, expected " + std::to_string(width));
    if (width < 2) throw Error(ErrorKind::input, "row " + std::to_string(row) + " needs features and a label");
    for (std::size_t c = 0; c + 1 < fields.size(); ++c) coords.push_back(detail::parse_real(fields[c], row, c + 1));
    labels.push_back(detail::trim(fields.back()));
  });
  if (labels.empty()) throw Error(ErrorKind::input, "'" + path + "' contains no rows");
  return {PointSet(width - 1, std::move(coords)), std::move(labels)};
}

inline void write_points_csv(std::ostream& out, const PointSet& points) {
  std::ostringstream line;
  line.precision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto p = points.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) line << (j ? "," : "") << p[j];
    line << '\n';
  }
  out << line.str();
}

/// Rescales every coordinate to [0, 1] using the pooled range of both sets.
/// Constant coordinates map to 0.5.
inline std::pair<PointSet, PointSet> minmax_scale_pair(const PointSet& a, const PointSet& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::shape, "point sets differ in dimension");
  const std::size_t d = a.dim();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
  for (const PointSet* s : {&a, &b})
    for (std::size_t i = 0; i < s->size(); ++i)
      for (std::size_t j = 0; j < d; ++j) {
        lo[j] = std::min(lo[j], s->point(i)[j]);
        hi[j] = std::max(hi[j], s->point(i)[j]);
      }
  auto scale = [&](const PointSet& s) {
    std::vector<double> c(s.coords().begin(), s.coords().end());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::size_t j = i % d;
      c[i] = hi[j] > lo[j] ? (c[i] - lo[j]) / (hi[j] - lo[j]) : 0.5;
    }
    return PointSet(d, std::move(c));
  };
  return {scale(a), scale(b)};
}

}  // namespace ensdiv::io

#endif  // ENSDIV_IO_HPP
