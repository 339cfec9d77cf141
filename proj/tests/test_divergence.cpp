#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ensdiv/functional.hpp"
#include "ensdiv/plug_in.hpp"
#include "ensdiv/simulate.hpp"
#include "support.hpp"

using namespace ensdiv;
using ensdiv::testing::line;
using ensdiv::testing::uniform_points;

namespace {

SplitLayout manual_layout(std::vector<std::size_t> eval, std::vector<std::size_t> ref, std::size_t m1) {
  SplitLayout l;
  l.n_eval = eval.size();
  l.m2 = ref.size();
  l.m1 = m1;
  l.eval_indices = std::move(eval);
  l.ref2_indices = std::move(ref);
  return l;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::input;
}

template <class F>
double integrate_2d(F f) {
  using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
  return gk::integrate([&](double x) { return gk::integrate([&](double y) { return f(x, y); }, 0.0, 1.0, 10, 1e-12); },
                       0.0, 1.0, 10, 1e-12);
}

}  // namespace

TEST(Functional, Values) {
  EXPECT_EQ(Functional::kl_forward()(1.0), 0.0);
  EXPECT_EQ(Functional::chernoff(0.5)(4.0), 2.0);
  EXPECT_DOUBLE_EQ(Functional::kl_reverse()(std::numbers::e), -1.0);
  EXPECT_DOUBLE_EQ(Functional::hellinger()(9.0), 3.0);
  EXPECT_DOUBLE_EQ(Functional::renyi(0.25)(16.0), 2.0);
  EXPECT_DOUBLE_EQ(eval_functional(Functional::kl_forward(), 2.0), 2.0 * std::log(2.0));
}

TEST(Functional, Errors) {
  EXPECT_EQ(kind_of([] { Functional::kl_forward()(0.0); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([] { Functional::kl_reverse()(-1.0); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([] { Functional::chernoff(1.0); }), ErrorKind::parameter);
  EXPECT_EQ(kind_of([] { Functional::renyi(0.0); }), ErrorKind::parameter);
  EXPECT_EQ(kind_of([] { Functional::parse("total_variation"); }), ErrorKind::parameter);
}

TEST(Functional, Parse) {
  EXPECT_EQ(Functional::parse("kl").kind(), FunctionalKind::kl_forward);
  EXPECT_EQ(Functional::parse("kl_reverse").kind(), FunctionalKind::kl_reverse);
  EXPECT_EQ(*Functional::parse("chernoff_alpha", 0.3).alpha(), 0.3);
  EXPECT_EQ(*Functional::parse("hellinger").alpha(), 0.5);
}

TEST(Split, PartitionsSample) {
  const auto l = make_split(101, 40, 0.5, 3);
  EXPECT_EQ(l.m2, 51u);
  EXPECT_EQ(l.n_eval, 50u);
  EXPECT_NO_THROW(l.validate(101));
  EXPECT_EQ(l.eval_indices, make_split(101, 40, 0.5, 3).eval_indices);
  EXPECT_NE(l.eval_indices, make_split(101, 40, 0.5, 4).eval_indices);
}

TEST(PlugIn, IdentityIsZero) {
  const auto f2 = uniform_points(600, 3, 1);
  const auto layout = make_split(f2.size(), 300, 0.5, 17);
  const auto f1 = f2.subset(layout.ref2_indices);
  for (std::size_t k : {1, 5, 24}) {
    const auto est = plug_in_estimate(f1, f2, layout, k, k, Functional::kl_forward(), true);
    EXPECT_EQ(est.value, 0.0);
    for (double r : est.per_point_ratios) EXPECT_EQ(r, 1.0);
  }
}

TEST(PlugIn, ToyTermByTerm) {
  const auto f1 = line({0.0, 0.4});
  const auto f2 = line({0.2, 0.3, 0.1, 0.5});
  const auto layout = manual_layout({0, 1}, {2, 3}, 2);
  const auto est = plug_in_estimate(f1, f2, layout, 1, 1, Functional::chernoff(0.5), true);

  const double xs[] = {0.2, 0.3}, a[] = {0.0, 0.4}, b[] = {0.1, 0.5};
  double sum = 0.0;
  for (double x : xs) {
    const double r1 = std::min(std::abs(x - a[0]), std::abs(x - a[1]));
    const double r2 = std::min(std::abs(x - b[0]), std::abs(x - b[1]));
    const double d1 = 1.0 / (2.0 * 2.0 * r1);
    const double d2 = 1.0 / (2.0 * 2.0 * r2);
    sum += std::sqrt(d1 / d2);
  }
  EXPECT_NEAR(est.value, sum / 2.0, 1e-14);
  EXPECT_NEAR(est.value, (std::sqrt(0.5) + std::sqrt(2.0)) / 2.0, 1e-12);
}

TEST(PlugIn, Errors) {
  const auto f1 = line({0.0, 0.4});
  const auto f2 = line({0.2, 0.3, 0.1, 0.5});
  EXPECT_EQ(kind_of([&] { plug_in_estimate(f1, f2, manual_layout({}, {0, 1, 2, 3}, 2), 1, 1, Functional::kl_forward()); }),
            ErrorKind::configuration);
  EXPECT_EQ(kind_of([&] { plug_in_estimate(f1, f2, manual_layout({0, 1}, {2, 3}, 2), 3, 1, Functional::kl_forward()); }),
            ErrorKind::insufficient_neighbors);
  EXPECT_EQ(kind_of([&] { plug_in_estimate(uniform_points(2, 2, 1), f2, manual_layout({0, 1}, {2, 3}, 2), 1, 1, Functional::kl_forward()); }),
            ErrorKind::shape);
}

TEST(PlugIn, PermutationInvariance) {
  const auto f1 = uniform_points(300, 2, 31);
  const auto f2 = ensdiv::testing::normal_points(400, 2, 0.5, 0.2, 32);
  const auto layout = make_split(400, 300, 0.5, 5);
  const auto base = plug_in_estimate(f1, f2, layout, 9, 9, Functional::kl_forward());

  std::vector<std::size_t> perm(300);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(3);
  rng.shuffle(std::span<std::size_t>(perm));
  auto shuffled_layout = layout;
  rng.shuffle(std::span<std::size_t>(shuffled_layout.ref2_indices));
  const auto other = plug_in_estimate(f1.subset(perm), f2, shuffled_layout, 9, 9, Functional::kl_forward());
  EXPECT_EQ(base.value, other.value);

  // Reordering the evaluation points only reorders the summands.
  auto eval_shuffled = layout;
  std::reverse(eval_shuffled.eval_indices.begin(), eval_shuffled.eval_indices.end());
  EXPECT_NEAR(plug_in_estimate(f1, f2, eval_shuffled, 9, 9, Functional::kl_forward()).value, base.value, 1e-13);
}

TEST(PlugIn, TranslationInvariance) {
  // Dyadic coordinates keep every shifted difference exact.
  Rng rng(8);
  auto dyadic = [&](std::size_t n) {
    std::vector<double> c(n * 2);
    for (auto& v : c) v = static_cast<double>(rng.below(1024)) / 1024.0;
    return PointSet(2, std::move(c));
  };
  const auto f1 = dyadic(200), f2 = dyadic(300);
  auto shift = [](const PointSet& p, double a, double b) {
    std::vector<double> c(p.coords().begin(), p.coords().end());
    for (std::size_t i = 0; i < c.size(); i += 2) c[i] += a, c[i + 1] += b;
    return PointSet(2, std::move(c));
  };
  const auto layout = make_split(300, 200, 0.5, 2);
  for (auto f : {Functional::kl_forward(), Functional::chernoff(0.3)}) {
    const double base = plug_in_estimate(f1, f2, layout, 6, 6, f).value;
    EXPECT_EQ(plug_in_estimate(shift(f1, 3.0, -5.0), shift(f2, 3.0, -5.0), layout, 6, 6, f).value, base);
  }
}

TEST(PlugIn, KlAgainstQuadrature) {
  const auto p = isotropic_spec(2, 0.7, 0.1);
  const auto q = isotropic_spec(2, 0.3, 0.3);
  auto gauss = [](double x, double y, double m, double var) {
    return std::exp(-((x - m) * (x - m) + (y - m) * (y - m)) / (2.0 * var));
  };
  const double zp = integrate_2d([&](double x, double y) { return gauss(x, y, 0.7, 0.1); });
  const double zq = integrate_2d([&](double x, double y) { return gauss(x, y, 0.3, 0.3); });
  const double truth = integrate_2d([&](double x, double y) {
    const double fp = gauss(x, y, 0.7, 0.1) / zp, fq = gauss(x, y, 0.3, 0.3) / zq;
    return fp * std::log(fp / fq);
  });
  EXPECT_NEAR(truncated_gaussian_kl(p, q), truth, 1e-9);

  const auto s1 = sample_truncated_gaussian(p, 4000, 101);
  const auto s2 = sample_truncated_gaussian(q, 4000, 102);
  const auto layout = make_split(4000, 4000, 0.5, 103);
  const auto k = static_cast<std::size_t>(std::floor(2.0 * std::sqrt(static_cast<double>(layout.m2))));
  const double est = plug_in_estimate(s1, s2, layout, k, k, Functional::kl_forward()).value;
  EXPECT_NEAR(est, truth, 0.15);
}

TEST(PlugIn, SwappedChernoffAgrees) {
  const auto p = isotropic_spec(2, 0.6, 0.05);
  const auto q = isotropic_spec(2, 0.4, 0.05);
  const auto a = sample_truncated_gaussian(p, 4000, 1);
  const auto b = sample_truncated_gaussian(q, 4000, 2);
  const auto la = make_split(4000, 4000, 0.5, 3);
  const auto k = static_cast<std::size_t>(std::sqrt(2000.0));
  for (double alpha : {0.3, 0.5, 0.7}) {
    const double ab = plug_in_estimate(a, b, la, k, k, Functional::chernoff(alpha)).value;
    const double ba = plug_in_estimate(b, a, la, k, k, Functional::chernoff(1.0 - alpha)).value;
    EXPECT_NEAR(ab, ba, 0.05) << "alpha=" << alpha;
  }
}
