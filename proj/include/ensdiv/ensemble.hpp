#ifndef ENSDIV_ENSEMBLE_HPP
#define ENSDIV_ENSEMBLE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "ensdiv/error.hpp"
#include "ensdiv/functional.hpp"
#include "ensdiv/knn.hpp"
#include "ensdiv/plug_in.hpp"
#include "ensdiv/point_set.hpp"
#include "ensdiv/weights.hpp"

namespace ensdiv {

struct EnsembleConfig {
  std::vector<double> l_bar;  ///< empty: resolved by default_l_bar() against the sample sizes
  double split_fraction = 0.5;
  double eta = 1.0;
  std::uint64_t seed = 0;
  WeightMode mode = WeightMode::relaxed;
  std::size_t threads = 1;
};

/// max(d, 5) evenly spaced values on [lo, hi].
inline std::vector<double> default_l_bar(std::size_t d, double lo = 1.5, double hi = 3.0) {
  const std::size_t count = std::max<std::size_t>(d, 5);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

/// k(l) = max(1, round(l * sqrt(m2))).
inline std::size_t neighbor_count(double l, std::size_t m2) {
  const double raw = l * std::sqrt(static_cast<double>(m2));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(raw)));
}

/// The index set actually used. Explicit sets are validated as given. The
/// default set shrinks to [h/2, h] with h = min(m1, m2)/sqrt(m2) when its top
/// value would need more neighbors than either sample holds.
inline std::vector<double> resolve_l_bar(const EnsembleConfig& config, std::size_t d, std::size_t m1, std::size_t m2) {
  const std::size_t cap = std::min(m1, m2);
  std::vector<double> l_bar = config.l_bar;
  if (l_bar.empty()) {
    l_bar = default_l_bar(d);
    if (neighbor_count(l_bar.back(), m2) > cap) {
      const double hi = static_cast<double>(cap) / std::sqrt(static_cast<double>(m2));
      l_bar = default_l_bar(d, 0.5 * hi, hi);
    }
  }
  for (double l : l_bar) {
    if (!(l > 0.0) || !std::isfinite(l))
      throw Error(ErrorKind::configuration, "index value l=" + std::to_string(l) + " is not positive");
    const std::size_t k = neighbor_count(l, m2);
    if (k > cap) {
      std::ostringstream msg;
      msg << "l=" << l << " gives k=" << k << " outside [1, " << cap << "] (M1=" << m1 << ", M2=" << m2 << ")";
      throw Error(ErrorKind::configuration, msg.str());
    }
  }
  return l_bar;
}

/// Checks shared by every entry point that solves for weights.
inline void validate_weight_problem(std::size_t count, std::size_t d, double eta) {
  if (count + 1 <= d)
    throw Error(ErrorKind::infeasible, "L=" + std::to_string(count) + " index values is not more than d-1=" +
                                           std::to_string(d - 1) + "; the bias constraints cannot be met");
  if (!(eta > 0.0)) throw Error(ErrorKind::parameter, "eta must be positive");
  const double floor = 1.0 / static_cast<double>(count);
  if (eta < floor * (1.0 - 1e-12))
    throw Error(ErrorKind::infeasible, "eta=" + std::to_string(eta) + " is below the 1/L feasibility floor " +
                                           std::to_string(floor));
}

// Everything about an ensemble estimate that does not depend on g: the split,
// the scales, the weights and the clamped likelihood ratios at every
// evaluation point for every scale. Re-evaluating with another functional
// (e.g. a sweep over Chernoff alpha) reuses all of it.
struct EnsembleGeometry {
  std::size_t d = 0;
  std::size_t total = 0;  ///< T, size of the f2 sample
  SplitLayout layout;
  std::vector<double> l_bar;
  std::vector<std::size_t> k_values;
  WeightSolution weights;
  std::vector<std::vector<double>> ratios;  ///< ratios[l][i] at evaluation point i
  std::vector<RatioDiagnostics> diagnostics;
};

struct EnsembleEstimate {
  double value = 0.0;
  std::vector<double> per_l;
  std::vector<double> l_bar;
  std::vector<std::size_t> k_values;
  WeightSolution weights;
  std::size_t n_eval = 0;
  std::size_t m1 = 0;
  std::size_t m2 = 0;
  RatioDiagnostics diagnostics;

  friend bool operator==(const EnsembleEstimate& a, const EnsembleEstimate& b) {
    return a.value == b.value && a.per_l == b.per_l && a.l_bar == b.l_bar && a.k_values == b.k_values &&
           a.weights.w == b.weights.w && a.n_eval == b.n_eval && a.m1 == b.m1 && a.m2 == b.m2;
  }
};

/// sum_l w(l) * estimate(l), accumulated in index-set order.
inline double combine(std::span<const double> weights, std::span<const double> per_l) {
  if (weights.size() != per_l.size()) throw Error(ErrorKind::shape, "weight and estimate vectors differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) sum += weights[i] * per_l[i];
  return sum;
}

inline EnsembleGeometry prepare_ensemble(const PointSet& f1_sample, const PointSet& f2_sample, const EnsembleConfig& config,
                                         const SplitLayout& layout) {
  if (f1_sample.dim() != f2_sample.dim())
    throw Error(ErrorKind::shape, "f1 sample has dimension " + std::to_string(f1_sample.dim()) + ", f2 sample has " +
                                      std::to_string(f2_sample.dim()));
  layout.validate(f2_sample.size());
  if (layout.m1 != f1_sample.size()) throw Error(ErrorKind::configuration, "layout m1 does not match the f1 sample");

  EnsembleGeometry g;
  g.d = f2_sample.dim();
  g.total = f2_sample.size();
  g.layout = layout;
  g.l_bar = resolve_l_bar(config, g.d, layout.m1, layout.m2);
  validate_weight_problem(g.l_bar.size(), g.d, config.eta);
  for (double l : g.l_bar) g.k_values.push_back(neighbor_count(l, layout.m2));
  g.weights = solve_weights(basis_matrix(g.l_bar, g.d), config.mode, static_cast<double>(g.total), config.eta);

  const std::size_t k_max = *std::max_element(g.k_values.begin(), g.k_values.end());
  const PointSet eval = f2_sample.subset(layout.eval_indices);
  const NeighborIndex index1(f1_sample);
  const NeighborIndex index2(f2_sample.subset(layout.ref2_indices));
  const auto rho1 = knn_distance_table(eval, index1, k_max, config.threads);
  const auto rho2 = knn_distance_table(eval, index2, k_max, config.threads);

  g.ratios.assign(g.l_bar.size(), std::vector<double>(layout.n_eval));
  g.diagnostics.assign(g.l_bar.size(), {});
  for (std::size_t c = 0; c < g.l_bar.size(); ++c) {
    const std::size_t k = g.k_values[c];
    for (std::size_t i = 0; i < layout.n_eval; ++i) {
      const double r =
          likelihood_ratio(k, layout.m1, rho1.rho(i, k), k, layout.m2, rho2.rho(i, k), g.d, g.diagnostics[c]);
      if (!std::isfinite(r))
        throw Error(ErrorKind::numeric, "non-finite likelihood ratio at evaluation point " + std::to_string(i) +
                                            " for l=" + std::to_string(g.l_bar[c]));
      g.ratios[c][i] = r;
    }
  }
  return g;
}

inline EnsembleGeometry prepare_ensemble(const PointSet& f1_sample, const PointSet& f2_sample, const EnsembleConfig& config) {
  return prepare_ensemble(f1_sample, f2_sample, config,
                          make_split(f2_sample.size(), f1_sample.size(), config.split_fraction, config.seed));
}

inline EnsembleEstimate evaluate(const EnsembleGeometry& g, const Functional& f) {
  EnsembleEstimate out;
  out.l_bar = g.l_bar;
  out.k_values = g.k_values;
  out.weights = g.weights;
  out.n_eval = g.layout.n_eval;
  out.m1 = g.layout.m1;
  out.m2 = g.layout.m2;
  out.per_l.reserve(g.l_bar.size());
  for (std::size_t c = 0; c < g.l_bar.size(); ++c) {
    out.per_l.push_back(mean_of_g(f, g.ratios[c]));
    out.diagnostics += g.diagnostics[c];
  }
  out.value = combine(out.weights.w, out.per_l);
  return out;
}

/// Optimally weighted ensemble estimate of E_{f2}[g(f1/f2)].
inline EnsembleEstimate ensemble_estimate(const PointSet& f1_sample, const PointSet& f2_sample,
                                          const EnsembleConfig& config, const Functional& f) {
  return evaluate(prepare_ensemble(f1_sample, f2_sample, config), f);
}

}  // namespace ensdiv

#endif  // ENSDIV_ENSEMBLE_HPP
