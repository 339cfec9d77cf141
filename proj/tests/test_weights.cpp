#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ensdiv/weights.hpp"
#include "support.hpp"

using namespace ensdiv;
using ensdiv::testing::grid_relaxed_epsilon;
using ensdiv::testing::normal_equations_weights;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::input;
}

}  // namespace

TEST(Basis, Entries) {
  const auto b = basis_matrix({1.0, 4.0}, 2);
  ASSERT_EQ(b.entries.rows(), 1);
  EXPECT_EQ(b.entries(0, 0), 1.0);
  EXPECT_EQ(b.entries(0, 1), 2.0);
  const auto b3 = basis_matrix({8.0}, 3);
  EXPECT_NEAR(b3.entries(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(b3.entries(1, 0), 4.0, 1e-14);
  EXPECT_EQ(basis_matrix({2.0, 3.0}, 1).entries.rows(), 0);
  EXPECT_EQ(kind_of([] { basis_matrix({1.0, -1.0}, 2); }), ErrorKind::domain);
}

TEST(ExactWeights, TwoByTwo) {
  const auto s = solve_exact_weights(basis_matrix({1.0, 4.0}, 2));
  ASSERT_EQ(s.w.size(), 2u);
  EXPECT_NEAR(s.w[0], 2.0, 1e-10);
  EXPECT_NEAR(s.w[1], -1.0, 1e-10);
  EXPECT_NEAR(s.sum(), 1.0, 1e-10);
  EXPECT_FALSE(s.epsilon.has_value());
}

TEST(ExactWeights, NormalEquationsOracle) {
  const std::vector<double> l{1.0, 4.0, 9.0};
  const auto s = solve_exact_weights(basis_matrix(l, 3));
  const auto oracle = normal_equations_weights(l, 3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s.w[i], oracle(static_cast<Eigen::Index>(i)), 1e-8);

  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 2 + rng.below(3);
    const auto lb = ensdiv::testing::spaced_l_bar(rng, d + rng.below(4));
    const auto sol = solve_exact_weights(basis_matrix(lb, d));
    const auto want = normal_equations_weights(lb, d);
    for (std::size_t i = 0; i < lb.size(); ++i) EXPECT_NEAR(sol.w[i], want(static_cast<Eigen::Index>(i)), 1e-8);
    EXPECT_NEAR(sol.sum(), 1.0, 1e-10);
    for (double g : sol.gamma_residuals) EXPECT_LT(g, 1e-8);
  }
}

TEST(ExactWeights, OneDimension) {
  const auto s = solve_exact_weights(basis_matrix({3.0}, 1));
  ASSERT_EQ(s.w.size(), 1u);
  EXPECT_EQ(s.w[0], 1.0);
}

TEST(ExactWeights, Degenerate) {
  EXPECT_EQ(kind_of([] { solve_exact_weights(basis_matrix({2.0, 2.0}, 2)); }), ErrorKind::degenerate_basis);
  EXPECT_EQ(kind_of([] { solve_exact_weights(basis_matrix({1.0, 2.0}, 3)); }), ErrorKind::degenerate_basis);
}

TEST(ExactWeights, NullSpacePerturbation) {
  Rng rng(99);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t d = 2 + rng.below(3);
    const auto basis = basis_matrix(ensdiv::testing::spaced_l_bar(rng, d + 1 + rng.below(4)), d);
    const auto s = solve_exact_weights(basis);
    const Eigen::Map<const Eigen::VectorXd> w(s.w.data(), static_cast<Eigen::Index>(s.w.size()));
    const Eigen::MatrixXd null = Eigen::FullPivLU<Eigen::MatrixXd>(basis.constraint_matrix()).kernel();
    for (int t = 0; t < 10; ++t) {
      Eigen::VectorXd c(null.cols());
      for (auto& v : c) v = rng.normal();
      Eigen::VectorXd delta = null * c;
      delta *= 1e-3 / delta.norm();
      EXPECT_GE((w + delta).norm(), w.norm() - 1e-9);
    }
  }
}

TEST(RelaxedWeights, SingleIndex) {
  for (std::size_t d : {2, 3, 5}) {
    const auto s = solve_relaxed_weights(basis_matrix({2.0}, d), 100.0, 1.0);
    ASSERT_EQ(s.w.size(), 1u);
    EXPECT_EQ(s.w[0], 1.0);
    double eps = 0.0;
    for (std::size_t i = 1; i < d; ++i)
      eps = std::max(eps, std::pow(2.0, double(i) / double(d)) * std::pow(100.0, 0.5 - double(i) / (2.0 * double(d))));
    EXPECT_NEAR(*s.epsilon, eps, 1e-12);
  }
}

TEST(RelaxedWeights, GridOracle) {
  const auto oracle = grid_relaxed_epsilon(1.0, 4.0, 2, 100.0, 10.0);
  const auto s = solve_relaxed_weights(basis_matrix({1.0, 4.0}, 2), 100.0, 10.0);
  EXPECT_NEAR(*s.epsilon, oracle.epsilon, 1e-4);

  // Tight budget: the unconstrained optimum (2, -1) is outside the ball.
  const auto tight = grid_relaxed_epsilon(1.0, 4.0, 2, 100.0, 3.0);
  const auto st = solve_relaxed_weights(basis_matrix({1.0, 4.0}, 2), 100.0, 3.0);
  EXPECT_GT(tight.epsilon, 0.1);
  EXPECT_NEAR(*st.epsilon, tight.epsilon, 1e-4);
  EXPECT_LE(st.norm_sq, 3.0 + 1e-8);
  EXPECT_NEAR(st.sum(), 1.0, 1e-10);

  const auto d3 = grid_relaxed_epsilon(1.5, 3.0, 3, 500.0, 1.0);
  const auto s3 = solve_relaxed_weights(basis_matrix({1.5, 3.0}, 3), 500.0, 1.0);
  EXPECT_NEAR(*s3.epsilon, d3.epsilon, 1e-4);
}

TEST(RelaxedWeights, ExactFeasibleGivesZero) {
  const auto basis = basis_matrix({1.0, 2.0, 3.0, 4.0, 5.0}, 3);
  const auto exact = solve_exact_weights(basis);
  ASSERT_LE(exact.norm_sq, 500.0);
  const auto s = solve_relaxed_weights(basis, 1000.0, 500.0);
  EXPECT_NEAR(*s.epsilon, 0.0, 1e-8);
  for (double r : s.scaled_residuals) EXPECT_LE(r, 1e-8);
  EXPECT_NEAR(s.sum(), 1.0, 1e-10);
}

TEST(RelaxedWeights, ConstraintsHold) {
  Rng rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t d = 2 + rng.below(5);
    const auto lb = ensdiv::testing::spaced_l_bar(rng, std::max<std::size_t>(d, 5));
    const double eta = 1.0 / double(lb.size()) + 2.0 * rng.uniform();
    const auto s = solve_relaxed_weights(basis_matrix(lb, d), 200.0 + 2000.0 * rng.uniform(), eta);
    EXPECT_NEAR(s.sum(), 1.0, 1e-10);
    EXPECT_LE(s.norm_sq, eta + 1e-8);
    for (double r : s.scaled_residuals) EXPECT_LE(r, *s.epsilon + 1e-8);
  }
}

TEST(RelaxedWeights, BudgetBelowFloor) {
  EXPECT_EQ(kind_of([] { solve_relaxed_weights(basis_matrix({1.0, 2.0, 3.0}, 2), 100.0, 0.3); }), ErrorKind::infeasible);
  EXPECT_NO_THROW(solve_relaxed_weights(basis_matrix({1.0, 2.0, 3.0}, 2), 100.0, 1.0 / 3.0));
}

TEST(RelaxedWeights, Deterministic) {
  const auto basis = basis_matrix({1.5, 1.875, 2.25, 2.625, 3.0}, 6);
  const auto a = solve_relaxed_weights(basis, 1000.0, 1.0);
  const auto b = solve_relaxed_weights(basis, 1000.0, 1.0);
  EXPECT_EQ(a.w, b.w);
}

TEST(WeightMode, Parse) {
  EXPECT_EQ(parse_weight_mode("exact"), WeightMode::exact);
  EXPECT_EQ(parse_weight_mode("relaxed"), WeightMode::relaxed);
  EXPECT_EQ(kind_of([] { parse_weight_mode("other"); }), ErrorKind::parameter);
}
