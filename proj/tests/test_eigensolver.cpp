#include <gtest/gtest.h>

#include <random>

#include "bosonlab/eigensolver.hpp"

using namespace bosonlab;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng);
  }
  return a;
}

EigenResult iterate(const Eigen::MatrixXd& a, const EigenOptions& opt) {
  return lowest_eigenpair_iterative([&](const auto& x, Eigen::VectorXd& y) { y.noalias() = a * x; }, a.rows(), opt);
}

}  // namespace

TEST(Eigensolver, DenseMatchesKnownSpectrum) {
  Eigen::MatrixXd a(2, 2);
  a << 2, 2, 2, 6;
  const auto r = lowest_eigenpair_dense(a);
  EXPECT_NEAR(r.value, 4 - 2 * std::sqrt(2.0), 1e-14);
  EXPECT_LT(r.residual, 1e-13);
}

TEST(Eigensolver, RestartedLanczosAgreesWithDense) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = random_symmetric(300, seed);
    EigenOptions opt;
    opt.krylov_dim = 25;
    opt.keep = 5;
    const auto it = iterate(a, opt);
    const auto dn = lowest_eigenpair_dense(a);
    EXPECT_NEAR(it.value, dn.value, 1e-8);
    EXPECT_LT(it.residual, 1e-8);
    EXPECT_GT(it.restarts, 0);
    EXPECT_NEAR(std::abs(it.vector.dot(dn.vector)), 1.0, 1e-8);
  }
}

TEST(Eigensolver, SmallOperatorIsSolvedExactly) {
  const auto a = random_symmetric(12, 9);
  const auto it = iterate(a, EigenOptions{});
  EXPECT_NEAR(it.value, lowest_eigenpair_dense(a).value, 1e-12);
  EXPECT_EQ(it.restarts, 0);
}

TEST(Eigensolver, InvariantStartVectorStopsEarly) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(50, 50);
  for (int i = 0; i < 50; ++i) a(i, i) = i;
  Eigen::VectorXd start = Eigen::VectorXd::Zero(50);
  start(0) = 1;
  start(3) = 1;
  const auto r = lowest_eigenpair_iterative([&](const auto& x, Eigen::VectorXd& y) { y.noalias() = a * x; }, 50,
                                            EigenOptions{}, &start);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  EXPECT_LE(r.matvecs, 3);
}

TEST(Eigensolver, ReportsNonConvergence) {
  const auto a = random_symmetric(400, 4);
  EigenOptions opt;
  opt.krylov_dim = 6;
  opt.keep = 2;
  opt.max_restarts = 1;
  opt.tolerance = 1e-14;
  EXPECT_THROW(iterate(a, opt), ConvergenceFailure);
}

TEST(Eigensolver, DeterministicForFixedSeed) {
  const auto a = random_symmetric(200, 5);
  EigenOptions opt;
  opt.krylov_dim = 20;
  const auto r1 = iterate(a, opt);
  const auto r2 = iterate(a, opt);
  EXPECT_EQ(r1.value, r2.value);
  EXPECT_EQ(r1.matvecs, r2.matvecs);
}
