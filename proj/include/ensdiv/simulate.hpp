#ifndef ENSDIV_SIMULATE_HPP
#define ENSDIV_SIMULATE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ensdiv/ensemble.hpp"
#include "ensdiv/error.hpp"
#include "ensdiv/functional.hpp"
#include "ensdiv/inference.hpp"
#include "ensdiv/parallel.hpp"
#include "ensdiv/point_set.hpp"
#include "ensdiv/random.hpp"
#include "ensdiv/stats.hpp"

namespace ensdiv {

/// How the scalar in "covariance sigma * I" is read.
enum class SigmaMeaning { variance, standard_deviation };

inline const char* to_string(SigmaMeaning m) { return m == SigmaMeaning::variance ? "variance" : "standard_deviation"; }

inline SigmaMeaning parse_sigma_meaning(const std::string& s) {
  if (s == "variance") return SigmaMeaning::variance;
  if (s == "sd" || s == "standard_deviation") return SigmaMeaning::standard_deviation;
  throw Error(ErrorKind::pathological_spec, "unknown sigma interpretation '" + s + "'");
}

/// Isotropic normal restricted to, and renormalised on, the unit cube [0,1]^d.
struct TruncatedGaussianSpec {
  std::vector<double> mu;
  double sigma = 1.0;
  SigmaMeaning meaning = SigmaMeaning::variance;

  std::size_t dim() const noexcept { return mu.size(); }
  double standard_deviation() const { return meaning == SigmaMeaning::variance ? std::sqrt(sigma) : sigma; }

  void validate() const {
    if (mu.empty()) throw Error(ErrorKind::pathological_spec, "mean vector is empty");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::pathological_spec, "sigma must be positive");
    for (double m : mu)
      if (!std::isfinite(m)) throw Error(ErrorKind::pathological_spec, "mean must be finite");
  }
};

inline TruncatedGaussianSpec isotropic_spec(std::size_t d, double mean, double sigma,
                                            SigmaMeaning meaning = SigmaMeaning::variance) {
  return {std::vector<double>(d, mean), sigma, meaning};
}

/// Rejection sampling from N(mu, s^2 I), keeping draws inside [0,1]^d.
/// Throws pathological_spec once 1e5 attempts have accepted less than 1e-4 of them.
inline PointSet sample_truncated_gaussian(const TruncatedGaussianSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw Error(ErrorKind::pathological_spec, "sample size must be positive");
  constexpr std::uint64_t kProbe = 100000;
  const std::size_t d = spec.dim();
  const double sd = spec.standard_deviation();
  Rng rng(seed);
  std::vector<double> coords;
  coords.reserve(n * d);
  std::vector<double> draw(d);
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
  while (accepted < n) {
    ++attempts;
    bool inside = true;
    for (std::size_t j = 0; j < d; ++j) {
      draw[j] = spec.mu[j] + sd * rng.normal();
      inside = inside && draw[j] >= 0.0 && draw[j] <= 1.0;
    }
    if (inside) {
      coords.insert(coords.end(), draw.begin(), draw.end());
      ++accepted;
    }
    if (attempts % kProbe == 0 && static_cast<double>(accepted) < 1e-4 * static_cast<double>(attempts))
      throw Error(ErrorKind::pathological_spec, "acceptance rate " + std::to_string(static_cast<double>(accepted) / attempts) +
                                                    " is below 1e-4; the mass inside the unit cube is too small");
  }
  return PointSet(d, std::move(coords));
}

// KL(f1 || f2) for two specs of equal dimension. Isotropic normals truncated to a
// box factor over coordinates, so the divergence is a sum of 1-D integrals,
// each done by adaptive Gauss-Kronrod quadrature.
inline double truncated_gaussian_kl(const TruncatedGaussianSpec& p, const TruncatedGaussianSpec& q) {
  p.validate();
  q.validate();
  if (p.dim() != q.dim()) throw Error(ErrorKind::shape, "specs have different dimensions");
  const double sp = p.standard_deviation(), sq = q.standard_deviation();
  double total = 0.0;
  for (std::size_t j = 0; j < p.dim(); ++j) {
    const double mp = p.mu[j], mq = q.mu[j];
    const double zp = stats::normal_cdf((1.0 - mp) / sp) - stats::normal_cdf(-mp / sp);
    const double zq = stats::normal_cdf((1.0 - mq) / sq) - stats::normal_cdf(-mq / sq);
    auto log_p = [&](double x) {
      const double u = (x - mp) / sp;
      return -0.5 * u * u - std::log(sp * zp * std::sqrt(2.0 * std::numbers::pi));
    };
    auto log_q = [&](double x) {
      const double u = (x - mq) / sq;
      return -0.5 * u * u - std::log(sq * zq * std::sqrt(2.0 * std::numbers::pi));
    };
    auto integrand = [&](double x) {
      const double lp = log_p(x);
      return std::exp(lp) * (lp - log_q(x));
    };
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 15, 1e-13);
  }
  return total;
}

struct TrialBatch {
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> estimates;
};

/// estimates[i] = estimator(derive_seed(master, i)), in trial order for any thread count.
template <class Estimator>
TrialBatch run_trials(std::size_t n_trials, std::uint64_t master_seed, std::size_t threads, Estimator&& estimator) {
  TrialBatch batch;
  batch.master_seed = master_seed;
  batch.seeds.resize(n_trials);
  batch.estimates.resize(n_trials);
  for (std::size_t i = 0; i < n_trials; ++i) batch.seeds[i] = derive_seed(master_seed, i);
  parallel_for(n_trials, threads, [&](std::size_t i) { batch.estimates[i] = estimator(batch.seeds[i]); });
  return batch;
}

/// One end-to-end estimate on fresh samples of size `per_density` from each spec.
inline double simulated_estimate(const TruncatedGaussianSpec& spec1, const TruncatedGaussianSpec& spec2,
                                 std::size_t per_density, const EnsembleConfig& config, const Functional& f,
                                 std::uint64_t trial_seed) {
  const PointSet s1 = sample_truncated_gaussian(spec1, per_density, derive_seed(trial_seed, 1));
  const PointSet s2 = sample_truncated_gaussian(spec2, per_density, derive_seed(trial_seed, 2));
  EnsembleConfig c = config;
  c.seed = derive_seed(trial_seed, 3);
  c.threads = 1;
  return ensemble_estimate(s1, s2, c, f).value;
}

struct CltResult {
  TrialBatch batch;
  NormalityDiagnostic diagnostic;
};

template <class Estimator>
CltResult clt_experiment_with(std::size_t n_trials, std::uint64_t master_seed, std::size_t threads,
                              Estimator&& estimator) {
  if (n_trials < 20) throw Error(ErrorKind::parameter, "CLT experiment needs at least 20 trials");
  CltResult out;
  out.batch = run_trials(n_trials, master_seed, threads, estimator);
  out.diagnostic = qq_diagnostic(out.batch.estimates);
  return out;
}

/// Repeated independent estimates on the two truncated normals, checked for normality.
inline CltResult clt_experiment(const TruncatedGaussianSpec& spec1, const TruncatedGaussianSpec& spec2,
                                std::size_t per_density, std::size_t n_trials, const EnsembleConfig& config,
                                const Functional& f, std::uint64_t master_seed) {
  return clt_experiment_with(n_trials, master_seed, config.threads, [&](std::uint64_t seed) {
    return simulated_estimate(spec1, spec2, per_density, config, f, seed);
  });
}

struct MsePoint {
  std::size_t total = 0;
  double mse = 0.0;
};

struct MseSweep {
  std::vector<MsePoint> points;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  bool slope_defined = false;  ///< false when some MSE is zero (log undefined)
};

// Empirical MSE against an externally supplied truth at each T, and the OLS
// slope of ln MSE on ln T. estimator(T, seed) must draw its own data.
template <class Estimator>
MseSweep mse_sweep_with(const std::vector<std::size_t>& totals, std::size_t trials_per_total, double truth,
                        std::uint64_t master_seed, std::size_t threads, Estimator&& estimator) {
  if (totals.size() < 4) throw Error(ErrorKind::parameter, "MSE sweep needs at least four sample sizes");
  for (std::size_t i = 1; i < totals.size(); ++i)
    if (totals[i] <= totals[i - 1]) throw Error(ErrorKind::parameter, "sample sizes must be strictly increasing");
  if (trials_per_total == 0) throw Error(ErrorKind::parameter, "need at least one trial per sample size");
  MseSweep out;
  for (std::size_t t = 0; t < totals.size(); ++t) {
    const auto batch = run_trials(trials_per_total, derive_seed(master_seed, totals[t]), threads,
                                  [&](std::uint64_t seed) { return estimator(totals[t], seed); });
    double sum = 0.0;
    for (double e : batch.estimates) sum += (e - truth) * (e - truth);
    out.points.push_back({totals[t], sum / static_cast<double>(trials_per_total)});
  }
  std::vector<double> x, y;
  for (const auto& p : out.points) {
    if (!(p.mse > 0.0)) return out;
    x.push_back(std::log(static_cast<double>(p.total)));
    y.push_back(std::log(p.mse));
  }
  const auto fit = stats::ols(x, y);
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.slope_defined = std::isfinite(fit.slope);
  return out;
}

inline MseSweep mse_sweep(const TruncatedGaussianSpec& spec1, const TruncatedGaussianSpec& spec2,
                          const std::vector<std::size_t>& totals, std::size_t trials_per_total,
                          const EnsembleConfig& config, const Functional& f, double truth, std::uint64_t master_seed) {
  return mse_sweep_with(totals, trials_per_total, truth, master_seed, config.threads,
                        [&](std::size_t total, std::uint64_t seed) {
                          return simulated_estimate(spec1, spec2, total, config, f, seed);
                        });
}

}  // namespace ensdiv

#endif  // ENSDIV_SIMULATE_HPP
