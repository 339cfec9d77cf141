#ifndef ENSDIV_INFERENCE_HPP
#define ENSDIV_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ensdiv/ensemble.hpp"
#include "ensdiv/error.hpp"
#include "ensdiv/functional.hpp"
#include "ensdiv/parallel.hpp"
#include "ensdiv/point_set.hpp"
#include "ensdiv/random.hpp"
#include "ensdiv/stats.hpp"

namespace ensdiv {

enum class IntervalMethod { percentile, normal };

inline const char* to_string(IntervalMethod m) { return m == IntervalMethod::percentile ? "percentile" : "normal"; }

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Order statistics j and B + 1 - j (1-based) of the replicates, j = ceil(B (1 - level) / 2).
/// Both endpoints are always members of the replicate multiset.
inline Interval percentile_interval(std::vector<double> replicates, double level) {
  if (replicates.empty()) throw Error(ErrorKind::parameter, "no replicates");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::parameter, "level must lie in (0, 1)");
  std::sort(replicates.begin(), replicates.end());
  const std::size_t b = replicates.size();
  // The 1e-9 absorbs representation error in B * (1 - level) / 2 (e.g. 25.000000000000004).
  auto low_rank = static_cast<std::size_t>(std::ceil(static_cast<double>(b) * (1.0 - level) / 2.0 - 1e-9));
  low_rank = std::clamp<std::size_t>(low_rank, 1, b);
  const std::size_t high_rank = b + 1 - low_rank;
  return {replicates[std::min(low_rank, high_rank) - 1], replicates[std::max(low_rank, high_rank) - 1]};
}

/// point -/+ z_{(1+level)/2} * sd(replicates).
inline Interval normal_interval(double point, std::span<const double> replicates, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::parameter, "level must lie in (0, 1)");
  const double half = stats::normal_quantile(0.5 * (1.0 + level)) * stats::stddev(replicates);
  return {point - half, point + half};
}

struct BootstrapResult {
  std::vector<double> replicates;
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  IntervalMethod method = IntervalMethod::percentile;
  std::size_t failures = 0;

  double stddev() const { return stats::stddev(replicates); }
};

struct BootstrapOptions {
  std::size_t replicates = 1000;
  double level = 0.95;
  IntervalMethod method = IntervalMethod::percentile;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

// Two-sample bootstrap of an arbitrary statistic. Each replicate resamples both
// samples with replacement (sizes kept) and receives its own split seed; all of
// its randomness comes from (seed, replicate index), so results do not depend
// on the thread count. Replicates whose statistic throws ensdiv::Error are
// dropped and counted; more than 1% of them aborts.
template <class Statistic>
BootstrapResult bootstrap_two_sample(const PointSet& f1, const PointSet& f2, const BootstrapOptions& options,
                                     Statistic&& statistic) {
  if (options.replicates < 100)
    throw Error(ErrorKind::parameter, "bootstrap needs at least 100 replicates, got " + std::to_string(options.replicates));
  if (!(options.level > 0.0 && options.level < 1.0)) throw Error(ErrorKind::parameter, "level must lie in (0, 1)");

  BootstrapResult out;
  out.level = options.level;
  out.method = options.method;
  out.point = statistic(f1, f2, options.seed);

  const std::size_t b = options.replicates;
  std::vector<double> values(b, 0.0);
  std::vector<char> ok(b, 0);
  parallel_for(b, options.threads, [&](std::size_t r) {
    Rng rng(derive_seed(options.seed, r, 0));
    std::vector<std::size_t> idx1(f1.size()), idx2(f2.size());
    for (auto& i : idx1) i = static_cast<std::size_t>(rng.below(f1.size()));
    for (auto& i : idx2) i = static_cast<std::size_t>(rng.below(f2.size()));
    try {
      values[r] = statistic(f1.subset(idx1), f2.subset(idx2), derive_seed(options.seed, r, 1));
      ok[r] = 1;
    } catch (const Error&) {
      ok[r] = 0;
    }
  });
  for (std::size_t r = 0; r < b; ++r) {
    if (ok[r])
      out.replicates.push_back(values[r]);
    else
      ++out.failures;
  }
  if (static_cast<double>(out.failures) > 0.01 * static_cast<double>(b))
    throw Error(ErrorKind::estimator_failure, std::to_string(out.failures) + " of " + std::to_string(b) +
                                                  " bootstrap replicates failed (limit 1%)");
  const Interval ci = options.method == IntervalMethod::percentile
                          ? percentile_interval(out.replicates, options.level)
                          : normal_interval(out.point, out.replicates, options.level);
  out.ci_low = ci.low;
  out.ci_high = ci.high;
  return out;
}

/// Bootstrap of the ensemble estimate. The f2 split is redrawn per replicate.
inline BootstrapResult bootstrap_estimate(const PointSet& f1_sample, const PointSet& f2_sample,
                                          const EnsembleConfig& config, const Functional& f, std::size_t replicates,
                                          double level, IntervalMethod method = IntervalMethod::percentile) {
  BootstrapOptions options{replicates, level, method, config.seed, config.threads};
  EnsembleConfig inner = config;
  inner.threads = 1;
  return bootstrap_two_sample(f1_sample, f2_sample, options,
                              [&](const PointSet& a, const PointSet& b, std::uint64_t split_seed) {
                                EnsembleConfig c = inner;
                                c.seed = split_seed;
                                return ensemble_estimate(a, b, c, f).value;
                              });
}

struct NormalityDiagnostic {
  std::vector<double> normalized_values;     ///< ascending
  std::vector<double> theoretical_quantiles;  ///< Phi^{-1}((i - 0.5) / n)
  double ks_statistic = 0.0;
};

/// Standardizes trial estimates by their own mean and sd and compares them with N(0, 1).
inline NormalityDiagnostic qq_diagnostic(std::span<const double> trials) {
  if (trials.size() < 20)
    throw Error(ErrorKind::parameter, "Q-Q diagnostic needs at least 20 trials, got " + std::to_string(trials.size()));
  const double m = stats::mean(trials);
  const double sd = stats::stddev(trials);
  if (!(sd > 0.0) || !std::isfinite(sd)) throw Error(ErrorKind::degenerate_trials, "trial estimates have zero variance");
  NormalityDiagnostic out;
  out.normalized_values.reserve(trials.size());
  for (double t : trials) out.normalized_values.push_back((t - m) / sd);
  std::sort(out.normalized_values.begin(), out.normalized_values.end());
  const double n = static_cast<double>(trials.size());
  for (std::size_t i = 1; i <= trials.size(); ++i)
    out.theoretical_quantiles.push_back(stats::normal_quantile((static_cast<double>(i) - 0.5) / n));
  out.ks_statistic = stats::ks_statistic_normal(out.normalized_values);
  return out;
}

struct TwoSampleTestReport {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
  std::vector<double> null_statistics;
};

/// Permutation test of f1 == f2 using the ensemble divergence estimate as statistic:
/// p = (1 + #{null >= observed}) / (B + 1).
inline TwoSampleTestReport two_sample_test(const PointSet& f1_sample, const PointSet& f2_sample,
                                           const EnsembleConfig& config, const Functional& f,
                                           std::size_t permutations) {
  if (permutations < 100)
    throw Error(ErrorKind::parameter, "permutation test needs at least 100 permutations, got " + std::to_string(permutations));
  EnsembleConfig inner = config;
  inner.threads = 1;

  TwoSampleTestReport out;
  out.permutations = permutations;
  out.statistic = ensemble_estimate(f1_sample, f2_sample, inner, f).value;

  const PointSet pooled = concat(f1_sample, f2_sample);
  const std::size_t n1 = f1_sample.size();
  std::vector<double> null(permutations, 0.0);
  std::vector<char> ok(permutations, 0);
  parallel_for(permutations, config.threads, [&](std::size_t r) {
    std::vector<std::size_t> order(pooled.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, r, 2));
    rng.shuffle(std::span<std::size_t>(order));
    const std::span<const std::size_t> all(order);
    try {
      null[r] = ensemble_estimate(pooled.subset(all.first(n1)), pooled.subset(all.subspan(n1)), inner, f).value;
      ok[r] = 1;
    } catch (const Error&) {
    }
  });
  std::size_t failures = 0;
  std::size_t exceed = 0;
  for (std::size_t r = 0; r < permutations; ++r) {
    if (!ok[r]) {
      ++failures;
      continue;
    }
    out.null_statistics.push_back(null[r]);
    if (null[r] >= out.statistic) ++exceed;
  }
  if (static_cast<double>(failures) > 0.01 * static_cast<double>(permutations))
    throw Error(ErrorKind::estimator_failure, std::to_string(failures) + " permutations failed (limit 1%)");
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(out.null_statistics.size() + 1);
  return out;
}

}  // namespace ensdiv

#endif  // ENSDIV_INFERENCE_HPP
