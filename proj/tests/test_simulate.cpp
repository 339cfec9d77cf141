#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "ensdiv/simulate.hpp"

using namespace ensdiv;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::input;
}

double truncated_mean(double mu, double var) {
  using gk = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto phi = [&](double x) { return std::exp(-0.5 * (x - mu) * (x - mu) / var); };
  const double z = gk::integrate(phi, 0.0, 1.0, 15, 1e-14);
  return gk::integrate([&](double x) { return x * phi(x); }, 0.0, 1.0, 15, 1e-14) / z;
}

std::vector<double> column(const PointSet& p, std::size_t j) {
  std::vector<double> out;
  for (std::size_t i = 0; i < p.size(); ++i) out.push_back(p.point(i)[j]);
  return out;
}

}  // namespace

TEST(Sampler, SupportAndDeterminism) {
  const auto spec = isotropic_spec(4, 0.7, 0.3);
  const auto a = sample_truncated_gaussian(spec, 2000, 5);
  for (double c : a.coords()) {
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
  }
  EXPECT_TRUE(a == sample_truncated_gaussian(spec, 2000, 5));
  EXPECT_FALSE(a == sample_truncated_gaussian(spec, 2000, 6));
}

TEST(Sampler, SymmetricMean) {
  const auto s = sample_truncated_gaussian(isotropic_spec(1, 0.5, 0.1), 100000, 1);
  EXPECT_NEAR(stats::mean(s.coords()), 0.5, 0.01);
}

TEST(Sampler, SixDimensionalMeans) {
  const auto s = sample_truncated_gaussian(isotropic_spec(6, 0.7, 0.1), 100000, 2);
  const double want = truncated_mean(0.7, 0.1);
  EXPECT_LT(want, 0.65);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(stats::mean(column(s, j)), want, 0.01);
}

TEST(Sampler, SigmaMeaning) {
  const auto sd = sample_truncated_gaussian(isotropic_spec(1, 0.7, 0.1, SigmaMeaning::standard_deviation), 100000, 3);
  EXPECT_NEAR(stats::mean(sd.coords()), truncated_mean(0.7, 0.01), 0.01);
  EXPECT_EQ(parse_sigma_meaning("sd"), SigmaMeaning::standard_deviation);
  EXPECT_EQ(parse_sigma_meaning("variance"), SigmaMeaning::variance);
}

TEST(Sampler, HalvesLookAlike) {
  const auto s = sample_truncated_gaussian(isotropic_spec(3, 0.3, 0.3), 4000, 4);
  for (std::size_t j = 0; j < 3; ++j) {
    const auto c = column(s, j);
    std::vector<double> first(c.begin(), c.begin() + 2000), second(c.begin() + 2000, c.end());
    const double dist = stats::ks_two_sample(first, second);
    EXPECT_GT(stats::ks_two_sample_pvalue(dist, 2000, 2000), 0.01);
  }
}

TEST(Sampler, Pathological) {
  EXPECT_EQ(kind_of([] { sample_truncated_gaussian(isotropic_spec(2, 30.0, 0.01), 5, 1); }), ErrorKind::pathological_spec);
  EXPECT_EQ(kind_of([] { sample_truncated_gaussian(isotropic_spec(2, 0.5, -1.0), 5, 1); }), ErrorKind::pathological_spec);
  EXPECT_EQ(kind_of([] { sample_truncated_gaussian(isotropic_spec(2, 0.5, 0.1), 0, 1); }), ErrorKind::pathological_spec);
}

TEST(Truth, SymmetricAndZero) {
  const auto p = isotropic_spec(3, 0.7, 0.1), q = isotropic_spec(3, 0.3, 0.1);
  EXPECT_NEAR(truncated_gaussian_kl(p, p), 0.0, 1e-12);
  EXPECT_NEAR(truncated_gaussian_kl(p, q), truncated_gaussian_kl(q, p), 1e-10);
  EXPECT_GT(truncated_gaussian_kl(p, q), 0.0);
}

TEST(Trials, OrderedBySeed) {
  const auto one = run_trials(25, 7, 1, [](std::uint64_t s) { return double(s % 1000); });
  const auto many = run_trials(25, 7, 4, [](std::uint64_t s) { return double(s % 1000); });
  EXPECT_EQ(one.estimates, many.estimates);
  EXPECT_EQ(one.seeds[3], derive_seed(7, 3));
}

TEST(Clt, ConstantEstimator) {
  EXPECT_EQ(kind_of([] { clt_experiment_with(30, 1, 1, [](std::uint64_t) { return 0.25; }); }), ErrorKind::degenerate_trials);
  EXPECT_EQ(kind_of([] { clt_experiment_with(10, 1, 1, [](std::uint64_t s) { return double(s); }); }), ErrorKind::parameter);
}

TEST(Clt, SmallRun) {
  const auto p = isotropic_spec(2, 0.7, 0.1), q = isotropic_spec(2, 0.3, 0.3);
  const auto r = clt_experiment(p, q, 200, 40, EnsembleConfig{}, Functional::kl_forward(), 3);
  EXPECT_EQ(r.batch.estimates.size(), 40u);
  EXPECT_EQ(r.batch.estimates[5], simulated_estimate(p, q, 200, EnsembleConfig{}, Functional::kl_forward(), r.batch.seeds[5]));
  EXPECT_LT(r.diagnostic.ks_statistic, 0.3);
}

TEST(Mse, ExactEstimatorHasNoSlope) {
  const auto sweep = mse_sweep_with({100, 200, 400, 800}, 5, 0.4, 1, 1, [](std::size_t, std::uint64_t) { return 0.4; });
  ASSERT_EQ(sweep.points.size(), 4u);
  for (const auto& p : sweep.points) EXPECT_EQ(p.mse, 0.0);
  EXPECT_FALSE(sweep.slope_defined);
  EXPECT_TRUE(std::isnan(sweep.slope));
}

TEST(Mse, SyntheticRate) {
  const double truth = 0.4;
  const auto sweep = mse_sweep_with({200, 400, 800, 1600, 3200}, 400, truth, 11, 1, [&](std::size_t t, std::uint64_t seed) {
    Rng rng(seed);
    return truth + 2.0 * rng.normal() / std::sqrt(double(t));
  });
  ASSERT_TRUE(sweep.slope_defined);
  EXPECT_NEAR(sweep.slope, -1.0, 0.15);
}

TEST(Mse, Validation) {
  auto est = [](std::size_t, std::uint64_t) { return 0.0; };
  EXPECT_EQ(kind_of([&] { mse_sweep_with({100, 200, 400}, 5, 0.0, 1, 1, est); }), ErrorKind::parameter);
  EXPECT_EQ(kind_of([&] { mse_sweep_with({100, 200, 200, 400}, 5, 0.0, 1, 1, est); }), ErrorKind::parameter);
}
