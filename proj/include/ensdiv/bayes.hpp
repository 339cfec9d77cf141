#ifndef ENSDIV_BAYES_HPP
#define ENSDIV_BAYES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ensdiv/ensemble.hpp"
#include "ensdiv/error.hpp"
#include "ensdiv/functional.hpp"
#include "ensdiv/inference.hpp"
#include "ensdiv/point_set.hpp"

namespace ensdiv {

/// Estimated Chernoff coefficients above 1 + this are clamped to it; below 0, to 0.
inline constexpr double kCoefficientSlack = 1e-6;

/// 0.01, 0.02, ..., 0.99.
inline std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  return grid;
}

struct ChernoffSweep {
  std::vector<double> alphas;
  std::vector<double> coefficients;      ///< clamped to [0, 1 + kCoefficientSlack]
  std::vector<double> raw_coefficients;  ///< as estimated
  double alpha_star = 0.0;
  double c_star = 0.0;
};

/// c_alpha(f1 || f2) over a grid of alpha, all sharing one split and one set of
/// neighbor distances. alpha_star is the first grid point attaining the minimum.
inline ChernoffSweep chernoff_sweep(const PointSet& f1_sample, const PointSet& f2_sample, const EnsembleConfig& config,
                                    const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorKind::parameter, "alpha grid is empty");
  for (double a : grid)
    if (!(a > 0.0 && a < 1.0)) throw Error(ErrorKind::parameter, "alpha grid values must lie in (0, 1)");
  const auto geometry = prepare_ensemble(f1_sample, f2_sample, config);
  ChernoffSweep sweep;
  sweep.alphas = grid;
  for (double a : grid) {
    const double raw = evaluate(geometry, Functional::chernoff(a)).value;
    sweep.raw_coefficients.push_back(raw);
    sweep.coefficients.push_back(std::clamp(raw, 0.0, 1.0 + kCoefficientSlack));
  }
  const auto best = std::min_element(sweep.coefficients.begin(), sweep.coefficients.end());
  sweep.c_star = *best;
  sweep.alpha_star = grid[static_cast<std::size_t>(best - sweep.coefficients.begin())];
  return sweep;
}

/// w1^a * (1 - w1)^(1 - a) * c, floored at 0.
inline double chernoff_bound(double w1, double alpha, double coefficient) {
  if (!(w1 > 0.0 && w1 < 1.0)) throw Error(ErrorKind::parameter, "prior w1 must lie in (0, 1)");
  return std::max(0.0, std::pow(w1, alpha) * std::pow(1.0 - w1, 1.0 - alpha) * coefficient);
}

struct BayesBoundReport {
  std::string class_a;
  std::string class_b;
  double w1 = 0.5;
  double w2 = 0.5;
  double alpha_star = 0.0;
  double c_star = 0.0;
  double bound = 0.0;
  std::optional<BootstrapResult> bootstrap;
};

/// Upper bound on the Bayes error from a sweep: w1^a* w2^(1-a*) c*.
inline BayesBoundReport bayes_error_bound(const ChernoffSweep& sweep, double w1) {
  BayesBoundReport r;
  r.w1 = w1;
  r.w2 = 1.0 - w1;
  r.alpha_star = sweep.alpha_star;
  r.c_star = sweep.c_star;
  r.bound = chernoff_bound(w1, sweep.alpha_star, sweep.c_star);
  return r;
}

/// Point bound plus a percentile bootstrap interval; every replicate reruns the
/// whole sweep. Resampling is seeded from config.seed.
inline BayesBoundReport bayes_bound_with_interval(const PointSet& f1_sample, const PointSet& f2_sample,
                                                  const EnsembleConfig& config, const std::vector<double>& grid,
                                                  double w1, std::size_t replicates, double level) {
  EnsembleConfig inner = config;
  inner.threads = 1;
  auto statistic = [&](const PointSet& a, const PointSet& b, std::uint64_t split_seed) {
    EnsembleConfig c = inner;
    c.seed = split_seed;
    return bayes_error_bound(chernoff_sweep(a, b, c, grid), w1).bound;
  };
  const BootstrapOptions opts{replicates, level, IntervalMethod::percentile, config.seed, config.threads};
  auto boot = bootstrap_two_sample(f1_sample, f2_sample, opts, statistic);
  auto report = bayes_error_bound(chernoff_sweep(f1_sample, f2_sample, config, grid), w1);
  report.bootstrap = std::move(boot);
  return report;
}

}  // namespace ensdiv

#endif  // ENSDIV_BAYES_HPP
