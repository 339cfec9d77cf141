#ifndef ENSDIV_KNN_HPP
#define ENSDIV_KNN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ensdiv/error.hpp"
#include "ensdiv/parallel.hpp"
#include "ensdiv/point_set.hpp"

namespace ensdiv {

/// Distances below this are treated as coincident points when forming densities.
inline constexpr double kRhoFloor = 1e-12;

/// Lebesgue volume of the Euclidean unit ball in R^d.
inline double unit_ball_volume(int d) {
  if (d <= 0) throw Error(ErrorKind::invalid_dimension, "unit ball dimension must be positive, got " + std::to_string(d));
  const double half = 0.5 * d;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0));
}

// Every distance in this library goes through this function so that the
// exhaustive and tree paths produce identical bits.
inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    sum += diff * diff;
  }
  return sum;
}

struct KnnQueryResult {
  double rho;
  std::size_t k;
};

namespace detail {

inline void check_query(std::span<const double> query, const PointSet& reference, std::size_t k) {
  if (query.size() != reference.dim())
    throw Error(ErrorKind::shape, "query has dimension " + std::to_string(query.size()) + ", reference has " +
                                      std::to_string(reference.dim()));
  if (k == 0) throw Error(ErrorKind::insufficient_neighbors, "k must be at least 1");
  if (k > reference.size())
    throw Error(ErrorKind::insufficient_neighbors, "k=" + std::to_string(k) + " exceeds reference size " +
                                                       std::to_string(reference.size()));
}

}  // namespace detail

/// The k-th smallest Euclidean distance from `query` to the points of `reference`.
/// The query is not excluded if it is itself a member of `reference`.
inline KnnQueryResult knn_distance(std::span<const double> query, const PointSet& reference, std::size_t k) {
  detail::check_query(query, reference, k);
  std::vector<double> sq(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) sq[i] = squared_distance(query, reference.point(i));
  std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(k - 1), sq.end());
  return {std::sqrt(sq[k - 1]), k};
}

/// Static kd-tree over a private, reordered copy of a point set. Exact k-NN only.
class KdTree {
 public:
  explicit KdTree(const PointSet& points, std::size_t leaf_size = 12)
      : dim_(points.dim()), count_(points.size()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    std::vector<std::size_t> order(count_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    nodes_.reserve(2 * count_ / leaf_size_ + 2);
    build(points, order, 0, count_);
    coords_.reserve(count_ * dim_);
    for (auto i : order) {
      auto p = points.point(i);
      coords_.insert(coords_.end(), p.begin(), p.end());
    }
  }

  std::size_t size() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }

  /// The k smallest squared distances to `query`, ascending.
  void nearest_squared(std::span<const double> query, std::size_t k, std::vector<double>& out) const {
    out.clear();
    out.reserve(k);
    search(0, query, k, out);
    std::sort_heap(out.begin(), out.end());
  }

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    std::size_t left = 0;
    std::size_t right = 0;
    bool leaf = true;
  };

  std::size_t build(const PointSet& points, std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    lower_.resize(nodes_.size() * dim_);
    upper_.resize(nodes_.size() * dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
      double lo = points.point(order[begin])[j];
      double hi = lo;
      for (std::size_t i = begin + 1; i < end; ++i) {
        const double v = points.point(order[i])[j];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      lower_[id * dim_ + j] = lo;
      upper_[id * dim_ + j] = hi;
    }
    if (end - begin <= leaf_size_) return id;

    std::size_t split_dim = 0;
    double widest = -1.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double width = upper_[id * dim_ + j] - lower_[id * dim_ + j];
      if (width > widest) {
        widest = width;
        split_dim = j;
      }
    }
    if (widest <= 0.0) return id;  // all points coincide

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(mid),
                     order.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                       return points.point(a)[split_dim] < points.point(b)[split_dim];
                     });
    const std::size_t left = build(points, order, begin, mid);
    const std::size_t right = build(points, order, mid, end);
    nodes_[id].leaf = false;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  double box_squared_distance(std::size_t node, std::span<const double> query) const noexcept {
    double sum = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double lo = lower_[node * dim_ + j];
      const double hi = upper_[node * dim_ + j];
      double gap = 0.0;
      if (query[j] < lo)
        gap = lo - query[j];
      else if (query[j] > hi)
        gap = query[j] - hi;
      sum += gap * gap;
    }
    return sum;
  }

  // `heap` is a max-heap of the best squared distances found so far.
  void search(std::size_t node_id, std::span<const double> query, std::size_t k, std::vector<double>& heap) const {
    const Node& node = nodes_[node_id];
    if (node.leaf) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const double sq = squared_distance(query, {coords_.data() + i * dim_, dim_});
        if (heap.size() < k) {
          heap.push_back(sq);
          std::push_heap(heap.begin(), heap.end());
        } else if (sq < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = sq;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    double near_gap = box_squared_distance(node.left, query);
    double far_gap = box_squared_distance(node.right, query);
    std::size_t near = node.left;
    std::size_t far = node.right;
    if (far_gap < near_gap) {
      std::swap(near, far);
      std::swap(near_gap, far_gap);
    }
    if (heap.size() < k || near_gap <= heap.front()) search(near, query, k, heap);
    if (heap.size() < k || far_gap <= heap.front()) search(far, query, k, heap);
  }

  std::size_t dim_;
  std::size_t count_;
  std::size_t leaf_size_;
  std::vector<Node> nodes_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> coords_;
};

enum class SearchStrategy { automatic, exhaustive, kd_tree };

/// Reference set prepared for repeated k-NN queries.
class NeighborIndex {
 public:
  explicit NeighborIndex(const PointSet& reference, SearchStrategy strategy = SearchStrategy::automatic)
      : reference_(reference) {
    if (strategy == SearchStrategy::automatic)
      strategy = (reference.size() >= 256 && reference.dim() <= 8) ? SearchStrategy::kd_tree : SearchStrategy::exhaustive;
    if (strategy == SearchStrategy::kd_tree) tree_.emplace_back(reference);
  }

  const PointSet& reference() const noexcept { return reference_; }
  bool uses_tree() const noexcept { return !tree_.empty(); }

  /// Distances to the k nearest reference points, ascending; out has k entries.
  void sorted_distances(std::span<const double> query, std::size_t k, std::vector<double>& out) const {
    detail::check_query(query, reference_, k);
    if (uses_tree()) {
      tree_.front().nearest_squared(query, k, out);
    } else {
      out.resize(reference_.size());
      for (std::size_t i = 0; i < reference_.size(); ++i) out[i] = squared_distance(query, reference_.point(i));
      std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end());
      out.resize(k);
    }
    for (auto& v : out) v = std::sqrt(v);
  }

  KnnQueryResult kth_distance(std::span<const double> query, std::size_t k) const {
    std::vector<double> buf;
    sorted_distances(query, k, buf);
    return {buf.back(), k};
  }

 private:
  PointSet reference_;
  std::vector<KdTree> tree_;  // empty for exhaustive search
};

/// Row-major (queries.size() x k_max) table of ascending neighbor distances.
/// Entry (i, k-1) is the k-th nearest-neighbor distance of query i.
struct DistanceTable {
  std::size_t rows = 0;
  std::size_t k_max = 0;
  std::vector<double> values;

  double rho(std::size_t row, std::size_t k) const noexcept { return values[row * k_max + (k - 1)]; }
};

inline DistanceTable knn_distance_table(const PointSet& queries, const NeighborIndex& index, std::size_t k_max,
                                        std::size_t threads = 1) {
  DistanceTable table{queries.size(), k_max, std::vector<double>(queries.size() * k_max)};
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    std::vector<double> buf;
    index.sorted_distances(queries.point(i), k_max, buf);
    std::copy(buf.begin(), buf.end(), table.values.begin() + static_cast<std::ptrdiff_t>(i * k_max));
  });
  return table;
}

struct KnnDensity {
  double value;
  double rho;
  bool clamped;  ///< rho fell below kRhoFloor and was raised to it
};

/// k / (m * unit_ball_volume(d) * rho^d), with rho floored at kRhoFloor.
inline KnnDensity density_from_distance(std::size_t k, std::size_t m, std::size_t d, double rho) {
  const bool clamped = rho < kRhoFloor;
  const double r = clamped ? kRhoFloor : rho;
  const double volume = unit_ball_volume(static_cast<int>(d));
  const double value =
      static_cast<double>(k) / (static_cast<double>(m) * volume * std::pow(r, static_cast<double>(d)));
  return {value, r, clamped};
}

inline KnnDensity knn_density(std::span<const double> query, const PointSet& reference, std::size_t k) {
  const auto result = knn_distance(query, reference, k);
  return density_from_distance(k, reference.size(), reference.dim(), result.rho);
}

}  // namespace ensdiv

#endif  // ENSDIV_KNN_HPP
