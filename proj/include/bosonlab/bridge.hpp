#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bosonlab/boson.hpp"
#include "bosonlab/operators.hpp"
#include "bosonlab/parallel.hpp"

namespace bosonlab {

/// φ_k^* = |C_k|^{-1/2} b_k^*.
inline FermionVector apply_phi_dag(const FermiSea& sea, const Momentum& k, const FermionVector& v) {
  const std::size_t c = sea.crescent_size(k);
  if (c == 0) throw std::domain_error("phi: |C_k| = 0 for k = " + k.str() + "; Fermi ball too small");
  return (1.0 / std::sqrt(static_cast<double>(c))) * apply_b_dag(sea, k, v);
}

/// φ_k = |C_k|^{-1/2} b_k.
inline FermionVector apply_phi(const FermiSea& sea, const Momentum& k, const FermionVector& v) {
  const std::size_t c = sea.crescent_size(k);
  if (c == 0) throw std::domain_error("phi: |C_k| = 0 for k = " + k.str() + "; Fermi ball too small");
  return (1.0 / std::sqrt(static_cast<double>(c))) * apply_b(sea, k, v);
}

/// Φ(e_{k1}^* ... e_{km}^* Ω) = φ_{k1}^* ... φ_{km}^* ψ0, with images cached
/// per monomial. Safe to call from several threads.
class PhiMap {
 public:
  explicit PhiMap(const FermiSea& sea) : sea_(&sea) {}

  const FermiSea& sea() const noexcept { return *sea_; }

  const FermionVector& image(const BosonMonomial& m) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(m); it != cache_.end()) return it->second;
    }
    FermionVector img;
    if (m.modes.empty()) {
      img = sea_->psi0();
    } else {
      BosonMonomial rest = m;
      const ModeKey last = rest.modes.back();
      rest.modes.pop_back();
      img = apply_phi_dag(*sea_, sea_->momentum(last), image(rest));
    }
    std::lock_guard lock(mutex_);
    return cache_.emplace(m, std::move(img)).first->second;
  }

  FermionVector apply(const BosonVector& f) {
    FermionAccumulator acc;
    for (const auto& [m, c] : f.terms()) acc.add(image(m), c);
    return std::move(acc).finish();
  }

  std::size_t cached() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
  }

 private:
  const FermiSea* sea_;
  mutable std::mutex mutex_;
  std::map<BosonMonomial, FermionVector> cache_;
};

struct PhiImage {
  BosonVector source;
  FermionVector image;
  GasConfig config;
};

inline PhiImage phi_map(const BosonVector& f, PhiMap& phi) {
  return {f, phi.apply(f), phi.sea().config()};
}

inline Momentum total_mode_sum(const BosonMonomial& m, int dim) {
  Momentum s = Momentum::zero(dim);
  for (auto k : m.modes) s += Momentum::from_key(k, dim);
  return s;
}

struct IsometryReport {
  std::vector<BosonMonomial> monomials;
  Eigen::MatrixXd eps;                  ///< ⟨m_i|(Φ*Φ - 1) m_j⟩ in the monomial basis
  double max_abs_eps = 0.0;
  double max_abs_imag = 0.0;
  double low_degree_max = 0.0;          ///< max |ε| over degrees <= 1
  std::vector<double> max_eps_by_degree;
  double operator_norm_bound = 0.0;     ///< max_m dim D^S_m · max|ε_m|
  double fitted_constant = 0.0;         ///< max_m max|ε_m| / (binom(m,2) m! k_F^{1-d})
  bool hermitian = true;
  std::size_t skipped_pairs = 0;        ///< pairs with different total momentum
};

inline IsometryReport isometry_audit(const TruncationWindow& window, PhiMap& phi, unsigned threads = 1) {
  IsometryReport rep;
  const FermiSea& sea = phi.sea();
  const int dim = sea.dim();
  rep.monomials = window.monomials();
  const std::size_t n = rep.monomials.size();
  std::vector<const FermionVector*> images(n);
  std::vector<Momentum> sums(n);
  for (std::size_t i = 0; i < n; ++i) {
    images[i] = &phi.image(rep.monomials[i]);
    sums[i] = total_mode_sum(rep.monomials[i], dim);
  }
  rep.eps = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> imag(n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (sums[i] != sums[j]) continue;
      Complex e = inner(*images[i], *images[j]);
      if (rep.monomials[i] == rep.monomials[j]) e -= basis_gram(rep.monomials[i]);
      rep.eps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = e.real();
      imag[i] = std::max(imag[i], std::abs(e.imag()));
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) rep.skipped_pairs += sums[i] != sums[j];
  }
  rep.max_abs_imag = *std::max_element(imag.begin(), imag.end());
  rep.max_eps_by_degree.assign(window.max_degree() + 1, 0.0);
  const auto eps_abs = rep.eps.cwiseAbs();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = eps_abs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const std::size_t deg = std::max(rep.monomials[i].degree(), rep.monomials[j].degree());
      rep.max_eps_by_degree[deg] = std::max(rep.max_eps_by_degree[deg], a);
      if (deg <= 1) rep.low_degree_max = std::max(rep.low_degree_max, a);
    }
  }
  const double scale = rep.eps.cwiseAbs().maxCoeff();
  rep.hermitian = (rep.eps - rep.eps.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, scale);
  const double kf = sea.config().fermi_momentum();
  double fact = 1.0;
  for (std::size_t m = 0; m <= window.max_degree(); ++m) {
    if (m > 0) fact *= static_cast<double>(m);
    const double em = rep.max_eps_by_degree[m];
    rep.max_abs_eps = std::max(rep.max_abs_eps, em);
    rep.operator_norm_bound = std::max(rep.operator_norm_bound, static_cast<double>(window.dimension_of_degree(m)) * em);
    if (m >= 2) {
      const double shape = static_cast<double>(binomial(m, 2)) * fact * std::pow(kf, 1.0 - sea.dim());
      rep.fitted_constant = std::max(rep.fitted_constant, em / shape);
    }
  }
  return rep;
}

struct IntertwineReport {
  Momentum k;
  double annihilation = 0.0;  ///< max over window monomials of ‖(φ_k Φ - Φ e_k) m‖
  double creation = 0.0;      ///< max of ‖φ_k^* Φ m - Φ e_k^* m‖
  BosonMonomial worst;
};

inline IntertwineReport intertwine_residual(const Momentum& k, const TruncationWindow& window, PhiMap& phi) {
  IntertwineReport rep;
  rep.k = k;
  const FermiSea& sea = phi.sea();
  for (const auto& m : window.monomials()) {
    const BosonVector f = BosonVector::basis(m);
    const FermionVector& img = phi.image(m);
    const FermionVector ann = apply_phi(sea, k, img) - phi.apply(boson_apply(BosonOp::annihilation, k, f));
    const double a = ann.norm();
    if (a > rep.annihilation) {
      rep.annihilation = a;
      rep.worst = m;
    }
    const FermionVector cre = apply_phi_dag(sea, k, img) - phi.apply(boson_apply(BosonOp::creation, k, f));
    rep.creation = std::max(rep.creation, cre.norm());
  }
  return rep;
}

/// ⟨ψ|H^(2) ψ⟩ / ‖ψ‖², evaluated as ⟨:T:⟩ + (N^{-α}/2) Σ v̂(k) (2 Re⟨B_k ψ|d_k ψ⟩ + ‖d_k ψ‖²)
/// with B_k = b_k + b_{-k}^*.
inline double h2_expectation(const FermiSea& sea, const Potential& pot, const FermionVector& psi) {
  const double n2 = psi.norm2();
  if (n2 == 0.0) throw std::invalid_argument("h2_expectation: zero vector");
  double s = inner(psi, apply_normal_kinetic(sea, psi)).real();
  const double g = 0.5 * sea.config().coupling();
  for (const auto& k : pot.nonzero_support()) {
    const FermionVector dk = apply_d(sea, k, psi);
    if (dk.empty()) continue;
    const FermionVector bk = apply_pair_part(sea, k, psi);
    s += g * pot(k) * (2.0 * inner(bk, dk).real() + dk.norm2());
  }
  return s / n2;
}

struct H2Audit {
  double value = 0.0;  ///< |⟨ψ|H^(2)ψ⟩| / ‖ψ‖²
  double bound = 0.0;
  double kinetic = 0.0;
  bool ok = false;
};

/// Right-hand side (2 k_F K + K²) m + (N^{-α}/2) Σ |v̂(k)| (8 m (m+1)^{1/2} |C_k|^{1/2} + 4 m²).
inline double h2_bound(const GasConfig& config, const Potential& pot, double K, std::size_t m) {
  const double md = static_cast<double>(m);
  double s = 0.0;
  for (const auto& k : pot.nonzero_support()) {
    const double c = static_cast<double>(crescent_size(k, config));
    s += std::abs(pot(k)) * (8.0 * md * std::sqrt(md + 1.0) * std::sqrt(c) + 4.0 * md * md);
  }
  return (2.0 * config.fermi_momentum() * K + K * K) * md + 0.5 * config.coupling() * s;
}

inline void check_h2_window(const GasConfig& config, const TruncationWindow& window, double K) {
  if (K < kTwoPi - 1e-12 || K > config.fermi_momentum() + 1e-12) {
    throw std::invalid_argument("h2 audit: K = " + std::to_string(K) + " outside [2π, k_F]");
  }
  for (const auto& k : window.modes()) {
    if (k.physical_norm() > K + 1e-12) throw std::invalid_argument("h2 audit: window mode " + k.str() + " has |k| > K");
  }
}

inline H2Audit h2_expectation_audit(const FermionVector& psi, const FermiSea& sea, const Potential& pot, double K,
                                    const TruncationWindow& window) {
  check_h2_window(sea.config(), window, K);
  H2Audit a;
  a.value = std::abs(h2_expectation(sea, pot, psi));
  a.kinetic = expectation(sea, ops::NormalKinetic{}, psi);
  a.bound = h2_bound(sea.config(), pot, K, window.max_degree());
  a.ok = a.value <= a.bound;
  return a;
}

struct TrialEnergy {
  double raw = 0.0;  ///< ⟨Φf|H_N Φf⟩ / ‖Φf‖²
  double e0 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  double bosonic_prediction = 0.0;  ///< E_N^(0) + ⟨f|H^B f⟩ / ‖f‖²
  double discrepancy = 0.0;         ///< raw - bosonic_prediction
  double norm_ratio = 0.0;          ///< ‖Φf‖² / ‖f‖²
};

inline TrialEnergy trial_energy(const BosonVector& f, PhiMap& phi, const Potential& pot) {
  const FermiSea& sea = phi.sea();
  const double f2 = f.norm2();
  if (f2 == 0.0) throw std::invalid_argument("trial_energy: zero boson vector");
  const FermionVector psi = phi.apply(f);
  const double n2 = psi.norm2();
  if (n2 == 0.0) throw std::runtime_error("trial_energy: Φf = 0");
  TrialEnergy t;
  t.e0 = e_n0(sea.config(), pot);
  t.norm_ratio = n2 / f2;
  const double g = 0.5 * sea.config().coupling();
  const double kin = inner(psi, apply_normal_kinetic(sea, psi)).real() / n2;
  double inter = 0.0;
  double h1 = 0.0;
  for (const auto& k : pot.nonzero_support()) {
    inter += g * pot(k) * apply_rho(sea, k, psi).norm2();
    h1 += g * pot(k) * apply_pair_part(sea, k, psi).norm2();
  }
  t.raw = t.e0 + kin + inter / n2;
  t.h1 = h1 / n2;
  t.h2 = h2_expectation(sea, pot, psi);
  t.bosonic_prediction = t.e0 + inner(f, hb_apply(f, hb_weights(sea.config(), pot))).real() / f2;
  t.discrepancy = t.raw - t.bosonic_prediction;
  return t;
}

struct SectorBound {
  Momentum momentum;
  double value = 0.0;
  std::size_t dimension = 0;
  std::size_t kept = 0;  ///< Gram directions above the pivot threshold
};

struct SubspaceBound {
  double value = 0.0;
  Momentum momentum;
  std::vector<SectorBound> sectors;
  std::size_t dropped = 0;
  std::optional<double> zero_sector;  ///< value in the sector containing Ω
  FermionVector minimizer;            ///< unit-norm Rayleigh-Ritz vector of the best sector
};

/// Rayleigh-Ritz minimum of H_N over span Φ(D^S_{<=m}), solved per total
/// momentum sector with the exact fermionic Gram. Gram directions with
/// eigenvalue below pivot·λ_max are discarded and counted in `dropped`.
inline SubspaceBound subspace_upper_bound(const TruncationWindow& window, PhiMap& phi, const Potential& pot,
                                          double pivot = 1e-10, unsigned threads = 1) {
  const FermiSea& sea = phi.sea();
  const int dim = sea.dim();
  const double e0 = e_n0(sea.config(), pot);
  const double g = 0.5 * sea.config().coupling();
  const auto support = pot.nonzero_support();

  std::map<Momentum, std::vector<BosonMonomial>> groups;
  for (auto& m : window.monomials()) groups[total_mode_sum(m, dim)].push_back(std::move(m));

  SubspaceBound out;
  out.value = std::numeric_limits<double>::infinity();
  for (const auto& [p, monos] : groups) {
    const std::size_t n = monos.size();
    std::vector<const FermionVector*> imgs(n);
    for (std::size_t i = 0; i < n; ++i) imgs[i] = &phi.image(monos[i]);
    std::vector<FermionVector> tkin(n);
    std::vector<std::vector<FermionVector>> rho(n);
    parallel_for(n, threads, [&](std::size_t i) {
      tkin[i] = apply_normal_kinetic(sea, *imgs[i]);
      for (const auto& k : support) rho[i].push_back(apply_rho(sea, k, *imgs[i]));
    });
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd gram(ni, ni), ham(ni, ni);
    parallel_for(n, threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double gij = inner(*imgs[i], *imgs[j]).real();
        double hij = e0 * gij + inner(*imgs[i], tkin[j]).real();
        for (std::size_t s = 0; s < support.size(); ++s) {
          hij += g * pot(support[s]) * inner(rho[i][s], rho[j][s]).real();
        }
        gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gij;
        ham(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hij;
      }
    });
    gram = 0.5 * (gram + gram.transpose()).eval();
    ham = 0.5 * (ham + ham.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(gram);
    const double top = gs.eigenvalues().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < ni; ++i) {
      if (gs.eigenvalues()(i) > pivot * top) keep.push_back(i);
    }
    out.dropped += n - keep.size();
    if (keep.empty()) continue;
    Eigen::MatrixXd w(ni, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      w.col(static_cast<Eigen::Index>(c)) = gs.eigenvectors().col(keep[c]) / std::sqrt(gs.eigenvalues()(keep[c]));
    }
    const Eigen::MatrixXd reduced = w.transpose() * ham * w;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hs(0.5 * (reduced + reduced.transpose()));
    const double v = hs.eigenvalues()(0);
    out.sectors.push_back({p, v, n, keep.size()});
    if (p.is_zero()) out.zero_sector = v;
    if (v < out.value) {
      out.value = v;
      out.momentum = p;
      const Eigen::VectorXd coeff = w * hs.eigenvectors().col(0);
      FermionAccumulator acc;
      for (std::size_t i = 0; i < n; ++i) acc.add(*imgs[i], coeff(static_cast<Eigen::Index>(i)));
      out.minimizer = std::move(acc).finish();
    }
  }
  if (out.sectors.empty()) throw std::runtime_error("subspace_upper_bound: Gram matrix vanishes on the window");
  return out;
}

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

/// Least squares fit of log y = intercept + slope · log x.
inline LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog: need two or more points");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (x[u] <= 0 || y[u] <= 0) throw std::invalid_argument("fit_loglog: nonpositive data");
    a(i, 0) = 1.0;
    a(i, 1) = std::log(x[u]);
    b(i) = std::log(y[u]);
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
  LogLogFit fit;
  fit.intercept = c(0);
  fit.slope = c(1);
  fit.rms_residual = std::sqrt((a * c - b).squaredNorm() / static_cast<double>(n));
  return fit;
}

}  // namespace bosonlab
