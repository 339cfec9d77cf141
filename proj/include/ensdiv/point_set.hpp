#ifndef ENSDIV_POINT_SET_HPP
#define ENSDIV_POINT_SET_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ensdiv/error.hpp"

namespace ensdiv {

/// An ordered set of m points in R^d, stored row-major.
class PointSet {
 public:
  PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0) throw Error(ErrorKind::invalid_dimension, "point dimension must be positive");
    if (coords_.empty()) throw Error(ErrorKind::shape, "point set must contain at least one point");
    if (coords_.size() % dim_ != 0)
      throw Error(ErrorKind::shape, "coordinate count " + std::to_string(coords_.size()) +
                                        " is not a multiple of dimension " + std::to_string(dim_));
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      if (!std::isfinite(coords_[i]))
        throw Error(ErrorKind::domain, "non-finite coordinate in point " + std::to_string(i / dim_));
    }
  }

  static PointSet from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw Error(ErrorKind::shape, "point set must contain at least one point");
    const std::size_t dim = rows.front().size();
    std::vector<double> coords;
    coords.reserve(rows.size() * dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != dim)
        throw Error(ErrorKind::shape, "row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                          " coordinates, expected " + std::to_string(dim));
      coords.insert(coords.end(), rows[i].begin(), rows[i].end());
    }
    return PointSet(dim, std::move(coords));
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return coords_.size() / dim_; }

  std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> coords() const noexcept { return coords_; }

  /// Points at `indices`, in that order. Repeats are allowed (bootstrap resamples).
  PointSet subset(std::span<const std::size_t> indices) const {
    std::vector<double> coords;
    coords.reserve(indices.size() * dim_);
    for (auto i : indices) {
      if (i >= size()) throw Error(ErrorKind::shape, "subset index out of range");
      auto p = point(i);
      coords.insert(coords.end(), p.begin(), p.end());
    }
    return PointSet(dim_, std::move(coords));
  }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

/// Concatenation of two sets of equal dimension, `a` first.
inline PointSet concat(const PointSet& a, const PointSet& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::shape, "cannot concatenate point sets of different dimension");
  std::vector<double> coords(a.coords().begin(), a.coords().end());
  coords.insert(coords.end(), b.coords().begin(), b.coords().end());
  return PointSet(a.dim(), std::move(coords));
}

}  // namespace ensdiv

#endif  // ENSDIV_POINT_SET_HPP
