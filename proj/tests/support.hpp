#ifndef ENSDIV_TESTS_SUPPORT_HPP
#define ENSDIV_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include "ensdiv/point_set.hpp"
#include "ensdiv/random.hpp"

namespace ensdiv::testing {

inline PointSet uniform_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> coords(n * d);
  for (auto& c : coords) c = rng.uniform();
  return PointSet(d, std::move(coords));
}

inline PointSet normal_points(std::size_t n, std::size_t d, double mean, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> coords(n * d);
  for (auto& c : coords) c = mean + sd * rng.normal();
  return PointSet(d, std::move(coords));
}

inline PointSet line(std::vector<double> xs) { return PointSet(1, std::move(xs)); }

// Sort every distance and take the k-th one.
inline double sorted_kth(std::span<const double> q, const PointSet& ref, std::size_t k) {
  std::vector<double> dist;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < ref.dim(); ++j) s += (q[j] - ref.point(i)[j]) * (q[j] - ref.point(i)[j]);
    dist.push_back(s);
  }
  std::sort(dist.begin(), dist.end());
  return std::sqrt(dist[k - 1]);
}

// Least-norm solution of [1; l^(i/d)] w = e1 through the normal equations
// A^T (A A^T)^-1 e1, carried out with 50 significant digits.
inline Eigen::VectorXd normal_equations_weights(const std::vector<double>& l_bar, std::size_t d) {
  using Real = boost::multiprecision::cpp_bin_float_50;
  using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  const auto L = static_cast<Eigen::Index>(l_bar.size());
  MatrixR a(static_cast<Eigen::Index>(d), L);
  for (Eigen::Index c = 0; c < L; ++c) {
    a(0, c) = 1;
    for (std::size_t i = 1; i < d; ++i)
      a(static_cast<Eigen::Index>(i), c) =
          boost::multiprecision::pow(Real(l_bar[static_cast<std::size_t>(c)]), Real(i) / Real(d));
  }
  VectorR e1 = VectorR::Zero(static_cast<Eigen::Index>(d));
  e1(0) = 1;
  const MatrixR gram = a * a.transpose();
  const VectorR w = a.transpose() * gram.ldlt().solve(e1);
  Eigen::VectorXd out(L);
  for (Eigen::Index c = 0; c < L; ++c) out(c) = static_cast<double>(w(c));
  return out;
}

// l values on [0.5, 5] at least `gap` apart.
inline std::vector<double> spaced_l_bar(Rng& rng, std::size_t count, double gap = 0.25) {
  std::vector<double> l;
  while (l.size() < count) {
    const double v = 0.5 + 4.5 * rng.uniform();
    if (std::all_of(l.begin(), l.end(), [&](double u) { return std::abs(u - v) >= gap; })) l.push_back(v);
  }
  return l;
}

struct GridOptimum {
  double epsilon = std::numeric_limits<double>::infinity();
  double w1 = 0.0;
};

// Two weights, w2 = 1 - w1: scan w1 over [-3, 4] inside the norm ball and keep
// the smallest max |gamma_i| T^(1/2 - i/(2d)).
inline GridOptimum grid_relaxed_epsilon(double l1, double l2, std::size_t d, double total, double eta,
                                        double step = 1e-5) {
  GridOptimum best;
  const auto n = static_cast<long>(std::llround(7.0 / step));
  for (long s = 0; s <= n; ++s) {
    const double w1 = -3.0 + static_cast<double>(s) * step, w2 = 1.0 - w1;
    if (w1 * w1 + w2 * w2 > eta) continue;
    double eps = 0.0;
    for (std::size_t i = 1; i < d; ++i) {
      const double e = double(i) / double(d);
      const double g = w1 * std::pow(l1, e) + w2 * std::pow(l2, e);
      eps = std::max(eps, std::abs(g) * std::pow(total, 0.5 - double(i) / (2.0 * double(d))));
    }
    if (eps < best.epsilon) best = {eps, w1};
  }
  return best;
}

}  // namespace ensdiv::testing

#endif  // ENSDIV_TESTS_SUPPORT_HPP
