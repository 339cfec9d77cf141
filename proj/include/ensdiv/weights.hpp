#ifndef ENSDIV_WEIGHTS_HPP
#define ENSDIV_WEIGHTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ensdiv/error.hpp"

namespace ensdiv {

/// Bias basis psi_i(l) = l^(i/d) for i = 1..d-1, one row per i, one column per l.
struct BasisMatrix {
  std::vector<double> l_bar;
  std::size_t d = 1;
  Eigen::MatrixXd entries;  // (d-1) x L

  std::size_t size() const noexcept { return l_bar.size(); }
  std::size_t rows() const noexcept { return d - 1; }

  /// All-ones row stacked on top of the basis: the d x L equality system.
  Eigen::MatrixXd constraint_matrix() const {
    Eigen::MatrixXd a(d, size());
    a.row(0).setOnes();
    if (d > 1) a.bottomRows(d - 1) = entries;
    return a;
  }
};

inline BasisMatrix basis_matrix(const std::vector<double>& l_bar, std::size_t d) {
  if (d == 0) throw Error(ErrorKind::invalid_dimension, "dimension must be positive");
  if (l_bar.empty()) throw Error(ErrorKind::configuration, "index set is empty");
  for (double l : l_bar)
    if (!(l > 0.0) || !std::isfinite(l))
      throw Error(ErrorKind::domain, "index values must be positive and finite, got " + std::to_string(l));
  BasisMatrix basis{l_bar, d, Eigen::MatrixXd(d - 1, l_bar.size())};
  for (std::size_t i = 1; i < d; ++i)
    for (std::size_t c = 0; c < l_bar.size(); ++c)
      basis.entries(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(c)) =
          std::pow(l_bar[c], static_cast<double>(i) / static_cast<double>(d));
  return basis;
}

/// T^(1/2 - i/(2d)) for i = 1..d-1: the factor each bias coefficient is weighed by.
inline Eigen::VectorXd bias_scales(std::size_t d, double total_samples) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(d - 1));
  for (std::size_t i = 1; i < d; ++i)
    s(static_cast<Eigen::Index>(i - 1)) =
        std::pow(total_samples, 0.5 - static_cast<double>(i) / (2.0 * static_cast<double>(d)));
  return s;
}

enum class WeightMode { exact, relaxed };

inline const char* to_string(WeightMode mode) { return mode == WeightMode::exact ? "exact" : "relaxed"; }

inline WeightMode parse_weight_mode(const std::string& s) {
  if (s == "exact") return WeightMode::exact;
  if (s == "relaxed") return WeightMode::relaxed;
  throw Error(ErrorKind::parameter, "unknown weight mode '" + s + "'");
}

struct WeightSolution {
  std::vector<double> w;
  std::optional<double> epsilon;          ///< max scaled |gamma|; relaxed mode only
  std::vector<double> gamma_residuals;    ///< |gamma_w(i)|, i = 1..d-1
  std::vector<double> scaled_residuals;   ///< |gamma_w(i)| * T^(1/2 - i/(2d)); relaxed mode only
  double norm_sq = 0.0;
  WeightMode mode = WeightMode::exact;

  double sum() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
  }
};

namespace detail {

inline WeightSolution describe(const BasisMatrix& basis, const Eigen::VectorXd& w, WeightMode mode,
                               const Eigen::VectorXd* scales) {
  WeightSolution out;
  out.mode = mode;
  out.w.assign(w.data(), w.data() + w.size());
  out.norm_sq = w.squaredNorm();
  if (basis.rows() > 0) {
    const Eigen::VectorXd gamma = basis.entries * w;
    for (Eigen::Index i = 0; i < gamma.size(); ++i) out.gamma_residuals.push_back(std::abs(gamma(i)));
    if (scales) {
      double eps = 0.0;
      for (Eigen::Index i = 0; i < gamma.size(); ++i) {
        out.scaled_residuals.push_back(std::abs(gamma(i) * (*scales)(i)));
        eps = std::max(eps, out.scaled_residuals.back());
      }
      out.epsilon = eps;
    }
  } else if (scales) {
    out.epsilon = 0.0;
  }
  return out;
}

/// Least-norm solution of the full equality system, or nullopt if it is rank deficient.
inline std::optional<Eigen::VectorXd> least_norm_exact(const BasisMatrix& basis) {
  const Eigen::MatrixXd a = basis.constraint_matrix();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(1e-13);
  if (static_cast<std::size_t>(cod.rank()) < basis.d) return std::nullopt;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.d));
  rhs(0) = 1.0;
  Eigen::VectorXd w = cod.solve(rhs);
  // Iterative refinement with the residual accumulated in long double.
  for (int step = 0; step < 3; ++step) {
    Eigen::VectorXd r(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      long double acc = rhs(i);
      for (Eigen::Index j = 0; j < a.cols(); ++j) acc -= static_cast<long double>(a(i, j)) * w(j);
      r(i) = static_cast<double>(acc);
    }
    w += cod.solve(r);
  }
  return w;
}

}  // namespace detail

/// Minimum-Euclidean-norm weights with sum(w) = 1 and gamma_w(i) = 0 for every i.
inline WeightSolution solve_exact_weights(const BasisMatrix& basis) {
  if (basis.size() < basis.d)
    throw Error(ErrorKind::degenerate_basis, "need more than d-1 = " + std::to_string(basis.d - 1) +
                                                 " index values, got " + std::to_string(basis.size()));
  const auto w = detail::least_norm_exact(basis);
  if (!w) throw Error(ErrorKind::degenerate_basis, "constraint system is rank deficient (duplicate index values?)");
  return detail::describe(basis, *w, WeightMode::exact, nullptr);
}

struct QpResult {
  bool feasible = false;
  Eigen::VectorXd x;
};

// Dual active-set method (Goldfarb-Idnani) specialised to the identity Hessian:
//   minimize 0.5 |x|^2  s.t.  eq * x = eq_rhs,  ineq * x >= ineq_rhs.
// Equality rows must be linearly independent. Infeasibility is detected when a
// violated constraint can be neither reached by a primal step nor made room for
// by dropping an active one.
inline QpResult min_norm_qp(const Eigen::MatrixXd& eq, const Eigen::VectorXd& eq_rhs, const Eigen::MatrixXd& ineq,
                            const Eigen::VectorXd& ineq_rhs, double tol = 1e-12) {
  const Eigen::Index n = eq.cols() > 0 ? eq.cols() : ineq.cols();
  const Eigen::Index n_eq = eq.rows();
  const Eigen::Index n_in = ineq.rows();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (n_eq > 0) x = eq.transpose() * (eq * eq.transpose()).ldlt().solve(eq_rhs);

  std::vector<Eigen::Index> active;  // inequality rows in the working set
  std::vector<double> mult;          // their multipliers, kept nonnegative
  std::vector<bool> in_active(static_cast<std::size_t>(n_in), false);

  auto normals = [&] {
    Eigen::MatrixXd basis(n, n_eq + static_cast<Eigen::Index>(active.size()));
    if (n_eq > 0) basis.leftCols(n_eq) = eq.transpose();
    for (std::size_t j = 0; j < active.size(); ++j) basis.col(n_eq + static_cast<Eigen::Index>(j)) = ineq.row(active[j]).transpose();
    return basis;
  };
  auto drop = [&](std::size_t j) {
    in_active[static_cast<std::size_t>(active[j])] = false;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(j));
    mult.erase(mult.begin() + static_cast<std::ptrdiff_t>(j));
  };

  const int max_iterations = 100 * static_cast<int>(n_in + n + 1);
  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    Eigen::Index p = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n_in; ++i) {
      if (in_active[static_cast<std::size_t>(i)]) continue;
      const double slack = ineq.row(i).dot(x) - ineq_rhs(i);
      const double threshold = -tol * std::max(1.0, std::abs(ineq_rhs(i)));
      if (slack < threshold && slack < worst) {
        worst = slack;
        p = i;
      }
    }
    if (p < 0) return {true, x};

    const Eigen::VectorXd np = ineq.row(p).transpose();
    double mult_p = 0.0;
    for (int inner = 0;; ++inner) {
      if (inner > max_iterations) throw Error(ErrorKind::numeric, "active-set QP failed to converge");
      const Eigen::MatrixXd basis = normals();
      Eigen::VectorXd r = Eigen::VectorXd::Zero(basis.cols());
      Eigen::VectorXd z = np;
      if (basis.cols() > 0) {
        r = (basis.transpose() * basis).ldlt().solve(basis.transpose() * np);
        z = np - basis * r;
      }
      double t1 = std::numeric_limits<double>::infinity();
      std::size_t block = 0;
      for (std::size_t j = 0; j < active.size(); ++j) {
        const double rj = r(n_eq + static_cast<Eigen::Index>(j));
        if (rj > 1e-14) {
          const double ratio = mult[j] / rj;
          if (ratio < t1) {
            t1 = ratio;
            block = j;
          }
        }
      }
      const double zz = z.dot(np);
      double t2 = std::numeric_limits<double>::infinity();
      if (zz > 1e-14 * np.squaredNorm()) t2 = -(np.dot(x) - ineq_rhs(p)) / zz;

      if (std::isinf(t1) && std::isinf(t2)) return {false, x};
      if (std::isinf(t2)) {
        for (std::size_t j = 0; j < active.size(); ++j) mult[j] -= t1 * r(n_eq + static_cast<Eigen::Index>(j));
        mult_p += t1;
        drop(block);
        continue;
      }
      const double t = std::min(t1, t2);
      x += t * z;
      for (std::size_t j = 0; j < active.size(); ++j) mult[j] -= t * r(n_eq + static_cast<Eigen::Index>(j));
      mult_p += t;
      if (t2 <= t1) {
        active.push_back(p);
        mult.push_back(mult_p);
        in_active[static_cast<std::size_t>(p)] = true;
        break;
      }
      drop(block);
    }
  }
  throw Error(ErrorKind::numeric, "active-set QP exceeded its iteration limit");
}

/// Relaxed weights:
///   minimize eps  s.t.  sum(w) = 1,  |gamma_w(i) T^(1/2 - i/(2d))| <= eps,  |w|^2 <= eta.
/// Bisection on eps; at each eps the smallest-norm feasible w is found with
/// min_norm_qp and eps is accepted when that norm fits the budget. The returned
/// epsilon is the largest scaled residual actually attained by w.
inline WeightSolution solve_relaxed_weights(const BasisMatrix& basis, double total_samples, double eta) {
  const auto count = static_cast<Eigen::Index>(basis.size());
  if (!(total_samples >= 2.0)) throw Error(ErrorKind::parameter, "T must be at least 2");
  const double floor = 1.0 / static_cast<double>(count);
  if (!(eta >= floor * (1.0 - 1e-12)))
    throw Error(ErrorKind::infeasible, "eta=" + std::to_string(eta) + " is below the 1/L feasibility floor " +
                                           std::to_string(floor) + " (L=" + std::to_string(count) + ")");
  const Eigen::VectorXd scales = bias_scales(basis.d, total_samples);
  Eigen::MatrixXd scaled = basis.entries;
  for (Eigen::Index i = 0; i < scaled.rows(); ++i) scaled.row(i) *= scales(i);

  if (count == 1 || basis.rows() == 0) {
    // Only the sum constraint is binding: the uniform vector is the min-norm point.
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(count, floor);
    return detail::describe(basis, uniform, WeightMode::relaxed, &scales);
  }

  if (const auto exact = detail::least_norm_exact(basis); exact && exact->squaredNorm() <= eta)
    return detail::describe(basis, *exact, WeightMode::relaxed, &scales);

  const Eigen::MatrixXd sum_row = Eigen::MatrixXd::Ones(1, count);
  const Eigen::VectorXd sum_rhs = Eigen::VectorXd::Ones(1);
  Eigen::MatrixXd two_sided(2 * scaled.rows(), count);
  two_sided << scaled, -scaled;

  auto solve_at = [&](double eps) -> std::optional<Eigen::VectorXd> {
    const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(two_sided.rows(), -eps);
    auto qp = min_norm_qp(sum_row, sum_rhs, two_sided, rhs);
    if (!qp.feasible || qp.x.squaredNorm() > eta) return std::nullopt;
    return qp.x;
  };

  Eigen::VectorXd best = Eigen::VectorXd::Constant(count, floor);
  double hi = (scaled * best).cwiseAbs().maxCoeff();
  double lo = 0.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (auto w = solve_at(mid)) {
      hi = mid;
      best = *w;
    } else {
      lo = mid;
    }
  }
  return detail::describe(basis, best, WeightMode::relaxed, &scales);
}

inline WeightSolution solve_weights(const BasisMatrix& basis, WeightMode mode, double total_samples, double eta) {
  return mode == WeightMode::exact ? solve_exact_weights(basis) : solve_relaxed_weights(basis, total_samples, eta);
}

}  // namespace ensdiv

#endif  // ENSDIV_WEIGHTS_HPP
