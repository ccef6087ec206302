#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "bosonlab/bridge.hpp"
#include "bosonlab/exact.hpp"
#include "random_states.hpp"

using namespace bosonlab;
using bosonlab::testing::random_any;
using bosonlab::testing::random_excited;
using bosonlab::testing::random_momentum;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

/// ‖lhs - rhs‖ relative to the largest constituent norm.
double rel(const FermionVector& lhs, const FermionVector& rhs, std::initializer_list<double> norms) {
  double scale = std::max(lhs.norm(), rhs.norm());
  for (double n : norms) scale = std::max(scale, n);
  const double diff = (lhs - rhs).norm();
  return diff == 0.0 ? 0.0 : diff / scale;
}

BosonVector random_boson(const TruncationWindow& w, std::mt19937_64& rng, int terms) {
  const auto monos = w.monomials();
  std::uniform_int_distribution<std::size_t> pick(0, monos.size() - 1);
  std::normal_distribution<double> g;
  std::vector<BosonVector::Term> t;
  for (int i = 0; i < terms; ++i) t.emplace_back(monos[pick(rng)], Complex(g(rng), g(rng)));
  return BosonVector::from_terms(std::move(t));
}

struct Gas {
  int dim;
  long r2;
};
const std::vector<Gas> kIdentityGases{{2, 1}, {2, 2}, {2, 4}, {2, 5}, {2, 9}, {3, 1}, {3, 2}, {3, 3}};

Outcome identities() {
  Outcome o;
  constexpr double tol = 1e-10;
  constexpr int per_gas = 25;
  std::map<std::string, std::map<int, int>> count;
  double worst = 0;
  auto check = [&](const std::string& name, int dim, double err) {
    ++count[name][dim];
    worst = std::max(worst, err);
    o.require(err <= tol, name + " d=" + std::to_string(dim) + " error " + std::to_string(err));
  };
  for (const auto& gas : kIdentityGases) {
    const FermiSea sea(GasConfig(gas.dim, gas.r2, -1.0));
    if (sea.config().particle_number() > 33) throw std::logic_error("identity gas too large");
    std::mt19937_64 rng(4242 + gas.dim * 100 + gas.r2);
    const long outer = gas.r2 + 4;
    const int rounds = gas.dim == 2 ? per_gas : 2 * per_gas;
    PhiMap phi(sea);
    const auto window = TruncationWindow::ball(gas.dim, 1, 2);
    for (int t = 0; t < rounds; ++t) {
      const FermionVector any = random_any(sea, rng, 6, outer);
      const Momentum p = random_momentum(gas.dim, outer, rng, false);
      const Momentum q = (t % 3 == 0) ? p : random_momentum(gas.dim, outer, rng, false);
      auto a = [&](const Momentum& m, const FermionVector& x) { return apply_annihilator(sea, m, x); };
      auto c = [&](const Momentum& m, const FermionVector& x) { return apply_creator(sea, m, x); };
      {
        const auto x = a(p, a(q, any)), y = a(q, a(p, any));
        check("car_annihilators", gas.dim, rel(x + y, {}, {x.norm(), y.norm(), any.norm()}));
      }
      {
        const auto x = c(p, c(q, any)), y = c(q, c(p, any));
        check("car_creators", gas.dim, rel(x + y, {}, {x.norm(), y.norm(), any.norm()}));
      }
      {
        const auto x = a(p, c(q, any)), y = c(q, a(p, any));
        check("car_mixed", gas.dim, rel(x + y, p == q ? any : FermionVector{}, {x.norm(), y.norm(), any.norm()}));
      }

      const FermionVector v = random_excited(sea, rng, 6, 2, outer);
      const Momentum k = random_momentum(gas.dim, 4, rng);
      const Momentum kq = (t % 4 == 0) ? k : random_momentum(gas.dim, 4, rng);
      {
        const auto b = apply_b(sea, k, v), bd = apply_b_dag(sea, -k, v), d = apply_d(sea, k, v);
        check("rho_split", gas.dim, rel(apply_rho(sea, k, v), b + bd + d, {b.norm(), bd.norm(), d.norm()}));
      }
      {
        const auto x = apply_b(sea, k, apply_b_dag(sea, kq, v));
        const auto y = apply_b_dag(sea, kq, apply_b(sea, k, v));
        FermionVector rhs = apply_normal_commutator(sea, k, kq, v);
        if (k == kq) rhs = axpy(static_cast<double>(sea.crescent_size(k)), v, rhs);
        check("pair_commutator", gas.dim, rel(x - y, rhs, {x.norm(), y.norm()}));
      }
      {
        const auto f = random_boson(window, rng, 5);
        const Momentum s = window.modes()[static_cast<std::size_t>(t) % window.modes().size()];
        const auto lhs = apply_phi_dag(sea, s, phi.apply(f));
        const auto rhs = phi.apply(boson_apply(BosonOp::creation, s, f));
        check("phi_intertwines_creation", gas.dim, rel(lhs, rhs, {}));
      }
    }
    for (const auto& k : nonzero_momenta(gas.dim, 4)) {
      check("scattering_kills_plane_wave", gas.dim, apply_d(sea, k, sea.psi0()).norm());
      for (const auto& q : nonzero_momenta(gas.dim, 2)) {
        check("normal_commutator_kills_plane_wave", gas.dim, apply_normal_commutator(sea, k, q, sea.psi0()).norm());
      }
    }
  }
  for (const auto& [name, per_dim] : count) {
    for (int dim : {2, 3}) {
      const int n = per_dim.count(dim) ? per_dim.at(dim) : 0;
      const bool deterministic = name.find("plane_wave") != std::string::npos;
      o.require(deterministic ? n > 0 : n >= 100, name + " d=" + std::to_string(dim) + " has only " +
                                                      std::to_string(n) + " samples");
    }
  }
  o.detail << count.size() << " identities, worst relative error " << worst;
  return o;
}

Outcome small_values() {
  Outcome o;
  const GasConfig cfg(2, 1, 0.0);
  const FermiSea sea(cfg);
  const Momentum e1{1, 0};
  o.require(crescent_size(e1, cfg) == 3, "|C_e1| != 3");
  PhiMap phi(sea);
  const auto m = monomial({e1, e1});
  const double norm2 = phi.image(m).norm2();
  o.require(std::abs(norm2 - 4.0 / 3.0) <= 1e-12, "double occupation norm " + std::to_string(norm2));
  const auto rep = isometry_audit(TruncationWindow({e1, -e1}, 2), phi);
  const auto monos = TruncationWindow({e1, -e1}, 2).monomials();
  const auto idx = static_cast<Eigen::Index>(std::find(monos.begin(), monos.end(), m) - monos.begin());
  const double eps = rep.eps(idx, idx);
  o.require(std::abs(eps + 2.0 / 3.0) <= 1e-12, "eps(kk,kk) = " + std::to_string(eps));
  double worst = 0;
  for (double alpha : {-1.0, -0.5, 0.0, 0.5, 0.9}) {
    const auto tb = trivial_bounds(GasConfig(2, 1, alpha), unit_mode_potential(2));
    const double expected = 6.0 * std::pow(5.0, -alpha);
    const double err = std::abs((tb.upper - tb.lower) - expected) / expected;
    const FermiSea s(GasConfig(2, 1, alpha));
    const double direct = expectation(s, ops::Hamiltonian{unit_mode_potential(2)}, s.psi0()) - tb.lower;
    worst = std::max({worst, err, std::abs(direct - expected) / expected});
  }
  o.require(worst <= 1e-12, "plane-wave excess relative error " + std::to_string(worst));
  o.detail << "|C|=3, norm^2=" << norm2 << ", eps=" << eps << ", plane-wave excess rel. error " << worst;
  return o;
}

Outcome sandwich() {
  Outcome o;
  const Potential pot = unit_mode_potential(2);
  for (double alpha : {-1.0, 0.0}) {
    const GasConfig cfg(2, 1, alpha);
    const FermiSea sea(cfg);
    PhiMap phi(sea);
    const auto tb = trivial_bounds(cfg, pot);
    const Sector sector{cfg.particle_number(), Momentum::zero(2), 4};
    EigenOptions dense_opt;
    EigenOptions lanczos_opt;
    lanczos_opt.force_iterative = true;
    lanczos_opt.tolerance = 1e-11;
    const auto dense = ground_state(sea, ops::Hamiltonian{pot}, sector, dense_opt);
    const auto iter = ground_state(sea, ops::Hamiltonian{pot}, sector, lanczos_opt);
    const auto sub = subspace_upper_bound(TruncationWindow::ball(2, 1, 2), phi, pot);
    const double zero = sub.zero_sector.value_or(std::numeric_limits<double>::quiet_NaN());
    char tag_buf[32];
    std::snprintf(tag_buf, sizeof tag_buf, "alpha=%g: ", alpha);
    const std::string tag = tag_buf;
    o.require(dense.method == "dense" && iter.method == "lanczos", tag + "solver routes");
    o.require(tb.lower <= dense.energy, tag + "E_N0 > exact");
    o.require(dense.energy <= zero, tag + "exact > subspace bound");
    o.require(zero <= tb.upper, tag + "subspace bound > plane-wave energy");
    o.require(std::abs(dense.energy - iter.energy) <= 1e-8, tag + "dense/iterative disagree");
    o.detail << tag << tb.lower << " <= " << dense.energy << " <= " << zero << " <= " << tb.upper
             << " (dim " << dense.dimension << ", |dense-lanczos| " << std::abs(dense.energy - iter.energy) << "); ";
  }
  return o;
}

Outcome crescent_audit() {
  Outcome o;
  const auto cfgs = magic_configs(2, 1, 50, 0.0);
  const auto rep = audit_crescent_bounds(cfgs, nonzero_momenta(2, 36));
  o.require(rep.ok, rep.failure);
  o.require(rep.c1 > 0 && std::isfinite(rep.c2), "window not positive and finite");
  o.require(rep.union_identity_holds, "C_k union C_-k != B(k_F) for some |k| > k_F");
  o.detail << cfgs.size() << " configs, " << rep.rows.size() << " (config, k) pairs, ratio in [" << rep.c1 << ", "
           << rep.c2 << "], union identity " << (rep.union_identity_holds ? "exact" : "violated");
  return o;
}

Outcome inequality_audits() {
  Outcome o;
  long cases = 0, violations = 0;
  auto count = [&](bool ok, const std::string& what) {
    ++cases;
    if (!ok) ++violations;
    o.require(ok, what);
  };
  for (const auto& gas : std::vector<Gas>{{2, 1}, {2, 2}, {2, 4}, {2, 5}, {3, 1}, {3, 2}}) {
    const FermiSea sea(GasConfig(gas.dim, gas.r2, -0.5));
    std::mt19937_64 rng(99 + gas.dim * 10 + gas.r2);
    for (int t = 0; t < 20; ++t) {
      const auto psi = random_excited(sea, rng, 6, 3, gas.r2 + 4);
      const Momentum k = random_momentum(gas.dim, 4, rng);
      const Momentum q = random_momentum(gas.dim, 4, rng);
      const double ck = static_cast<double>(sea.crescent_size(k));
      const double n_half = inner(psi, apply_excitation_number(sea, psi)).real();
      const double n_norm = apply_excitation_number(sea, psi).norm();
      const double slack = 1e-12 * (1 + psi.norm2());
      count(apply_b(sea, k, psi).norm2() <= ck * n_half + slack, "b_k bound");
      count(apply_b_dag(sea, k, psi).norm2() <= ck * (n_half + psi.norm2()) + slack, "b_k^* bound");
      count(apply_normal_commutator(sea, k, q, psi).norm() <= 2 * n_norm + slack, "normal commutator bound");
      count(apply_d(sea, k, psi).norm() <= 2 * n_norm + slack, "scattering bound");
    }
  }
  const Potential pot = unit_mode_potential(2);
  for (long r2 : {1L, 4L, 9L}) {
    const GasConfig cfg(2, r2, -1.0);
    const FermiSea sea(cfg);
    PhiMap phi(sea);
    std::mt19937_64 rng(7 + r2);
    for (std::size_t m : {1u, 2u}) {
      const auto w = TruncationWindow::ball(2, 1, m);
      for (const auto& mono : w.monomials()) {
        count(h2_expectation_audit(phi.image(mono), sea, pot, kTwoPi, w).ok, "H2 bound on a window image");
      }
      for (int t = 0; t < 25; ++t) {
        count(h2_expectation_audit(phi.apply(random_boson(w, rng, 4)), sea, pot, kTwoPi, w).ok,
              "H2 bound on a random image");
      }
    }
  }
  o.require(cases >= 500, "only " + std::to_string(cases) + " cases");
  o.detail << cases << " cases, " << violations << " violations";
  return o;
}

Outcome decay_sweeps() {
  Outcome o;
  const Potential pot = unit_mode_potential(2);
  const auto w = TruncationWindow::ball(2, 1, 2);
  std::vector<double> kf, eps, res, ratio_sub, ratio_psi;
  for (long n = 3; n <= 10; ++n) {
    const GasConfig cfg(2, n * n, -1.0);
    const FermiSea sea(cfg);
    PhiMap phi(sea);
    kf.push_back(cfg.fermi_momentum());
    eps.push_back(isometry_audit(w, phi).max_abs_eps);
    double worst = 0;
    for (const auto& k : w.modes()) worst = std::max(worst, intertwine_residual(k, w, phi).annihilation);
    res.push_back(worst);
    const auto tb = trivial_bounds(cfg, pot);
    const auto sub = subspace_upper_bound(w, phi, pot);
    ratio_sub.push_back((sub.value - tb.lower) / cfg.correction_scale());
    ratio_psi.push_back((tb.upper - tb.lower) / cfg.correction_scale());
  }
  const auto fe = fit_loglog(kf, eps);
  const auto fr = fit_loglog(kf, res);
  o.require(std::abs(fe.slope + 1.0) <= 0.3, "max|eps| slope " + std::to_string(fe.slope));
  o.require(std::abs(fr.slope + 1.0) <= 0.3, "intertwining slope " + std::to_string(fr.slope));
  const std::size_t n = kf.size();
  for (std::size_t i = n - 3; i < n; ++i) o.require(ratio_sub[i] < ratio_psi[i], "subspace ratio not below plane wave");
  for (std::size_t i = n - 2; i < n; ++i) o.require(ratio_sub[i] < ratio_sub[i - 1], "subspace ratio not decreasing");
  o.detail << n << " configs; slopes eps " << fe.slope << " (rms " << fe.rms_residual << "), intertwining "
           << fr.slope << " (rms " << fr.rms_residual << "); last ratios subspace/plane-wave";
  for (std::size_t i = n - 3; i < n; ++i) o.detail << " " << ratio_sub[i] << "/" << ratio_psi[i];
  return o;
}

Outcome bosonic_side() {
  Outcome o;
  const Momentum e1{1, 0};
  const BosonWeights pair{{e1, 1.0}, {-e1, 1.0}};
  std::vector<double> values;
  for (std::size_t m = 0; m <= 8; ++m) values.push_back(hb_min_truncated(pair, TruncationWindow({e1, -e1}, m)).value);
  const double target = 4 - 2 * std::sqrt(2.0);
  o.require(std::abs(values[2] - target) <= 1e-12 && std::abs(values[3] - target) <= 1e-12, "n <= 1 minimum");
  for (std::size_t m = 1; m < values.size(); ++m) o.require(values[m] <= values[m - 1] + 1e-12, "not monotone");
  o.require(values[6] < 0.5 * values[0], "m=6 not below half of m=0");

  int windows = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int dim : {2, 3}) {
    const Potential pot = unit_mode_potential(dim);
    const auto cfgs = magic_configs(dim, 1, dim == 2 ? 10 : 4, -1.0);
    const auto audit = audit_crescent_bounds(cfgs, pot.nonzero_support());
    o.require(audit.ok, audit.failure);
    const double c = domination_constant(audit.c2, cfgs);
    std::vector<TruncationWindow> ws{TruncationWindow::ball(dim, 1, 1), TruncationWindow::ball(dim, 1, 2)};
    if (dim == 2) {
      ws.push_back(TruncationWindow::ball(2, 1, 4));
      ws.push_back(TruncationWindow::ball(2, 2, 2));
    }
    for (const auto& cfg : cfgs) {
      for (const auto& w : ws) {
        const auto rep = hb_domination_check(cfg, pot, w, c);
        ++windows;
        min_gap = std::min(min_gap, rep.min_eig_gap);
        o.require(rep.ok, "domination fails at radius_sq " + std::to_string(cfg.fermi_radius_sq()));
      }
    }
  }
  o.detail << "minima m=0.." << values.size() - 1 << ":";
  for (double v : values) o.detail << " " << v;
  o.detail << "; domination checked on " << windows << " (config, window) pairs, smallest gap eigenvalue " << min_gap;
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "algebraic identities", 60, identities},
      {2, "exact small values", 60, small_values},
      {3, "sandwich on exact instance", 300, sandwich},
      {4, "crescent ratio window", 60, crescent_audit},
      {5, "excitation and H2 inequality audits", 300, inequality_audits},
      {6, "decay sweeps", 1800, decay_sweeps},
      {7, "bosonic minimum and domination", 60, bosonic_side},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(s <= c.limit_s, "runtime limit exceeded");
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s) [%.2fs]: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, s,
                o.detail.str().c_str());
  }
  return failed == 0 ? 0 : 1;
}
