#include <gtest/gtest.h>

#include <random>

#include "bosonlab/boson.hpp"
#include "bosonlab/operators.hpp"

using namespace bosonlab;

namespace {

const Momentum e1{1, 0};

BosonVector random_boson(const TruncationWindow& w, std::mt19937_64& rng, int terms) {
  const auto monos = w.monomials();
  std::uniform_int_distribution<std::size_t> pick(0, monos.size() - 1);
  std::normal_distribution<double> g;
  std::vector<BosonVector::Term> t;
  for (int i = 0; i < terms; ++i) t.emplace_back(monos[pick(rng)], Complex(g(rng), g(rng)));
  return BosonVector::from_terms(std::move(t));
}

BosonWeights single_pair(double g) { return {{e1, g}, {-e1, g}}; }

// Charge-zero block of one pair, orthonormal states |n,n>, n <= top.
double pair_oracle(double g, int top) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(top + 1, top + 1);
  for (int n = 0; n <= top; ++n) {
    a(n, n) = 2 * g * (2 * n + 1);
    if (n < top) a(n, n + 1) = a(n + 1, n) = 2 * g * (n + 1);
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues()(0);
}

}  // namespace

TEST(Boson, VacuumAndNorms) {
  EXPECT_TRUE(boson_apply(BosonOp::annihilation, e1, vacuum()).empty());
  const auto two = boson_apply(BosonOp::creation, e1, boson_apply(BosonOp::creation, e1, vacuum()));
  EXPECT_DOUBLE_EQ(two.norm2(), 2.0);
  EXPECT_DOUBLE_EQ(basis_gram(monomial({e1, e1, e1, Momentum{0, 1}})), 6.0);
  EXPECT_THROW(boson_apply(BosonOp::creation, Momentum{0, 0}, vacuum()), std::invalid_argument);
  EXPECT_THROW(monomial({Momentum{0, 0}}), std::invalid_argument);
}

TEST(Boson, CanonicalCommutationRelations) {
  const TruncationWindow w = TruncationWindow::ball(2, 2, 3);
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    const auto f = random_boson(w, rng, 6);
    const auto& s = w.modes();
    const Momentum k = s[rng() % s.size()];
    const Momentum q = (t % 3 == 0) ? k : s[rng() % s.size()];
    auto a = [&](const Momentum& m, const BosonVector& x) { return boson_apply(BosonOp::annihilation, m, x); };
    auto c = [&](const Momentum& m, const BosonVector& x) { return boson_apply(BosonOp::creation, m, x); };
    const BosonVector comm = a(k, c(q, f)) - c(q, a(k, f));
    const BosonVector expected = (k == q) ? f : BosonVector{};
    EXPECT_LT((comm - expected).norm(), 1e-12 * f.norm());
    EXPECT_LT((c(k, c(q, f)) - c(q, c(k, f))).norm(), 1e-12 * f.norm());
    EXPECT_LT((a(k, a(q, f)) - a(q, a(k, f))).norm(), 1e-12 * f.norm());
    // e_k is the adjoint of e_k^* in the Gram inner product.
    const auto g2 = random_boson(w, rng, 6);
    const Complex lhs = inner(g2, c(k, f));
    const Complex rhs = inner(a(k, g2), f);
    EXPECT_LT(std::abs(lhs - rhs), 1e-12 * (1 + std::abs(lhs)));
  }
}

TEST(TruncationWindow, DimensionsMatchBinomials) {
  for (long r2 : {1L, 2L}) {
    for (std::size_t m : {0u, 1u, 2u, 3u, 4u}) {
      const auto w = TruncationWindow::ball(2, r2, m);
      const auto monos = w.monomials();
      EXPECT_EQ(monos.size(), w.dimension());
      std::size_t top = 0;
      for (const auto& x : monos) top += x.degree() == m;
      EXPECT_EQ(top, w.dimension_of_degree(m));
    }
  }
  EXPECT_EQ(TruncationWindow::ball(2, 1, 2).dimension(), 15u);
  EXPECT_THROW(TruncationWindow({e1}, 2), std::invalid_argument);
  EXPECT_THROW(TruncationWindow({Momentum{0, 0}}, 2), std::invalid_argument);
}

TEST(HB, VacuumExpectationMatchesPairInteraction) {
  const Potential pot = unit_mode_potential(2);
  for (long r2 : {1L, 2L, 5L}) {
    const GasConfig cfg(2, r2, 0.3);
    const auto w = hb_weights(cfg, pot);
    double sum = 0;
    for (const auto& [k, g] : w) sum += g;
    const double boson = inner(vacuum(), hb_apply(vacuum(), w)).real();
    EXPECT_NEAR(boson, sum, 1e-13);
    const FermiSea sea(cfg);
    EXPECT_NEAR(expectation(sea, ops::H1{pot}, sea.psi0()), sum, 1e-12);
  }
  EXPECT_TRUE(hb_apply(vacuum(), BosonWeights{}).empty());
  EXPECT_TRUE(hb_apply(vacuum(), single_pair(0.0)).empty());
}

TEST(HB, RejectsAsymmetricWeights) {
  EXPECT_THROW(hb_apply(vacuum(), BosonWeights{{e1, 1.0}}), std::invalid_argument);
  EXPECT_THROW(hb_apply(vacuum(), BosonWeights{{e1, 1.0}, {-e1, 2.0}}), std::invalid_argument);
  EXPECT_THROW(validate_weights(single_pair(-1.0), true), std::invalid_argument);
}

TEST(HB, SinglePairBlock) {
  const TruncationWindow w({e1, -e1}, 2);
  const auto blocks = charge_blocks(w);
  const auto& zero = blocks.at({0});
  ASSERT_EQ(zero.size(), 2u);
  const Eigen::MatrixXd a = hb_form_matrix(single_pair(1.0), zero);
  Eigen::Matrix2d expected;
  expected << 2, 2, 2, 6;
  EXPECT_LT((a - expected).norm(), 1e-14);
  const auto r = hb_min_truncated(single_pair(1.0), w);
  EXPECT_NEAR(r.value, 4 - 2 * std::sqrt(2.0), 1e-14);
  EXPECT_EQ(r.charges, std::vector<int>{0});
  EXPECT_NEAR(r.argmin.norm(), 1.0, 1e-14);
  EXPECT_NEAR(inner(r.argmin, hb_apply(r.argmin, single_pair(1.0))).real(), r.value, 1e-12);
}

TEST(HB, ChargeSectorsDecouple) {
  const TruncationWindow w = TruncationWindow::ball(2, 2, 3);
  const auto monos = w.monomials();
  BosonWeights weights;
  for (const auto& k : w.modes()) weights[k] = 1.0 + k.norm2();
  weights[Momentum{2, 0}] = weights[Momentum{-2, 0}] = 0.7;
  const Eigen::MatrixXd a = hb_form_matrix(weights, monos);
  for (std::size_t i = 0; i < monos.size(); ++i) {
    for (std::size_t j = 0; j < monos.size(); ++j) {
      if (detail::pair_charges(w, monos[i]) != detail::pair_charges(w, monos[j])) {
        EXPECT_EQ(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.0);
      }
    }
  }
  // Block solve equals the unreduced dense minimum.
  const double full = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues()(0);
  EXPECT_NEAR(hb_min_truncated(weights, w).value, full, 1e-10);
}

TEST(HB, TruncatedMinimumDecreasesWithDegree) {
  double prev = 1e300;
  double at_zero = 0;
  for (std::size_t m = 0; m <= 10; ++m) {
    const auto r = hb_min_truncated(single_pair(1.0), TruncationWindow({e1, -e1}, m));
    if (m == 0) {
      at_zero = r.value;
      EXPECT_DOUBLE_EQ(r.value, 2.0);
      EXPECT_EQ(r.argmin, vacuum());
    }
    EXPECT_LE(r.value, prev + 1e-12);
    EXPECT_GE(r.value, 0.0);
    EXPECT_NEAR(r.value, pair_oracle(1.0, static_cast<int>(m / 2)), 1e-12) << m;
    if (m == 6) {
      EXPECT_LT(r.value, 0.5 * at_zero);
    }
    prev = r.value;
  }
}

TEST(HB, ZeroDegreeIncludesModesOutsideWindow) {
  const auto w = hb_tilde_weights(unit_mode_potential(2));
  const auto r = hb_min_truncated(w, TruncationWindow({e1, -e1}, 0));
  EXPECT_NEAR(r.value, 4 * kTwoPi, 1e-12);
  EXPECT_THROW(hb_min_truncated(w, TruncationWindow({}, 2)), std::invalid_argument);
}

TEST(HBDomination, ExampleWindowPasses) {
  const Potential pot = unit_mode_potential(2);
  const GasConfig cfg(2, 1, 0.0);
  const auto audit = audit_crescent_bounds({cfg}, pot.nonzero_support());
  ASSERT_TRUE(audit.ok);
  const double c = domination_constant(audit.c2, {cfg});
  const auto rep = hb_domination_check(cfg, pot, TruncationWindow::ball(2, 1, 2), c);
  EXPECT_TRUE(rep.ok) << rep.failure;
  EXPECT_GE(rep.min_eig_hb, -1e-12);
  EXPECT_GE(rep.min_eig_gap, -1e-12);
  // Shrinking c below the per-mode ratio must expose a witness.
  const auto bad = hb_domination_check(cfg, pot, TruncationWindow::ball(2, 1, 2), 0.5 * c);
  EXPECT_FALSE(bad.ok);
  EXPECT_FALSE(bad.witness.empty());
}

TEST(HBDomination, ZeroPotential) {
  const auto rep = hb_domination_check(GasConfig(2, 2, 0.0), Potential{}, TruncationWindow::ball(2, 1, 2), 1.0);
  EXPECT_TRUE(rep.ok);
  EXPECT_EQ(rep.min_eig_hb, 0.0);
  EXPECT_EQ(rep.min_eig_gap, 0.0);
}

TEST(HBDomination, PositiveForRandomNonnegativeWeights) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 3);
  const auto w = TruncationWindow::ball(2, 2, 3);
  for (int t = 0; t < 5; ++t) {
    BosonWeights weights;
    for (const auto& k : w.modes()) {
      if (k.key() < (-k).key()) weights[k] = weights[-k] = u(rng);
    }
    for (const auto& [q, basis] : charge_blocks(w)) {
      const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hb_form_matrix(weights, basis)).eigenvalues();
      EXPECT_GE(ev(0), -1e-10);
    }
  }
}
