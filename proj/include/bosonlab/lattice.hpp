#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bosonlab/momentum.hpp"

namespace bosonlab {

namespace detail {

inline long isqrt(long x) {
  if (x < 0) return -1;
  long r = static_cast<long>(std::sqrt(static_cast<double>(x)));
  while (r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

/// Calls fn(Momentum) for every lattice point with |n|^2 <= radius_sq (unordered).
template <class Fn>
void for_each_in_ball(int dim, long radius_sq, Fn&& fn) {
  if (radius_sq < 0) return;
  const int r = static_cast<int>(isqrt(radius_sq));
  std::array<int, kMaxDim> c{};
  for (int i = 0; i < dim; ++i) c[i] = -r;
  while (true) {
    long n2 = 0;
    for (int i = 0; i < dim; ++i) n2 += static_cast<long>(c[i]) * c[i];
    if (n2 <= radius_sq) fn(Momentum::from_range(std::span<const int>(c.data(), dim)));
    int i = dim - 1;
    while (i >= 0 && c[i] == r) c[i--] = -r;
    if (i < 0) break;
    ++c[i];
  }
}

}  // namespace detail

/// Every lattice point with |n|^2 <= radius_sq, sorted in the global mode order.
inline std::vector<Momentum> lattice_ball(int dim, long radius_sq) {
  std::vector<Momentum> out;
  detail::for_each_in_ball(dim, radius_sq, [&](const Momentum& m) { out.push_back(m); });
  std::sort(out.begin(), out.end());
  return out;
}

inline std::size_t lattice_count(int dim, long radius_sq) {
  std::size_t n = 0;
  detail::for_each_in_ball(dim, radius_sq, [&](const Momentum&) { ++n; });
  return n;
}

/// True when some lattice point has |n|^2 == radius_sq exactly.
inline bool shell_occupied(int dim, long radius_sq) {
  if (radius_sq < 0) return false;
  bool found = false;
  detail::for_each_in_ball(dim, radius_sq, [&](const Momentum& m) {
    if (m.norm2() == radius_sq) found = true;
  });
  return found;
}

/// Physical system parameters. The Fermi radius is stored as an exact squared
/// norm in lattice units (k_F^2 / (2 pi)^2) and always sits on an occupied
/// shell, so the particle number is a magic number.
class GasConfig {
 public:
  GasConfig(int dim, long fermi_radius_sq, double alpha)
      : dim_(dim), radius_sq_(fermi_radius_sq), alpha_(alpha) {
    if (dim < 2 || dim > kMaxDim) {
      throw std::invalid_argument("GasConfig: dimension must be in [2, " + std::to_string(kMaxDim) + "]");
    }
    if (!shell_occupied(dim, fermi_radius_sq)) {
      throw std::invalid_argument("GasConfig: no lattice point has |n|^2 = " + std::to_string(fermi_radius_sq) +
                                  "; the Fermi radius must sit on an occupied shell");
    }
    particles_ = lattice_count(dim, fermi_radius_sq);
  }

  /// Smallest occupied radius whose ball holds at least n points; rejects n if
  /// that ball holds more than n (n is not magic).
  static GasConfig from_particle_number(int dim, std::size_t n, double alpha) {
    if (dim < 2 || dim > kMaxDim) throw std::invalid_argument("GasConfig: dimension must be in [2, 4]");
    if (n == 0) throw std::invalid_argument("GasConfig: particle number must be positive");
    for (long r2 = 0;; ++r2) {
      if (!shell_occupied(dim, r2)) continue;
      const std::size_t count = lattice_count(dim, r2);
      if (count == n) return GasConfig(dim, r2, alpha);
      if (count > n) {
        throw std::invalid_argument("GasConfig: N = " + std::to_string(n) + " is not a magic number in d = " +
                                    std::to_string(dim) + " (next magic number is " + std::to_string(count) + ")");
      }
    }
  }

  int dim() const noexcept { return dim_; }
  long fermi_radius_sq() const noexcept { return radius_sq_; }
  double alpha() const noexcept { return alpha_; }
  std::size_t particle_number() const noexcept { return particles_; }
  /// k_F / (2 pi).
  double fermi_radius() const { return std::sqrt(static_cast<double>(radius_sq_)); }
  /// k_F.
  double fermi_momentum() const { return kTwoPi * fermi_radius(); }
  /// Interaction prefactor N^{-alpha}.
  double coupling() const { return std::pow(static_cast<double>(particles_), -alpha_); }
  /// N^{1 - alpha - 1/d}, the scale of the first-order interaction correction.
  double correction_scale() const {
    return std::pow(static_cast<double>(particles_), 1.0 - alpha_ - 1.0 / dim_);
  }
  /// alpha < 1 - 2/d.
  bool strongly_interacting() const { return alpha_ < 1.0 - 2.0 / dim_; }

  bool inside(const Momentum& p) const noexcept { return p.norm2() <= radius_sq_; }

 private:
  int dim_;
  long radius_sq_;
  double alpha_;
  std::size_t particles_ = 0;
};

/// The occupied momenta of the plane-wave state, in the global mode order.
inline std::vector<Momentum> fermi_ball(const GasConfig& config) {
  return lattice_ball(config.dim(), config.fermi_radius_sq());
}

struct MagicNumber {
  long radius_sq;
  std::size_t particles;
  friend bool operator==(const MagicNumber&, const MagicNumber&) = default;
};

/// Admissible particle numbers as the squared radius sweeps occupied shells up
/// to max_radius_sq.
inline std::vector<MagicNumber> magic_numbers(int dim, long max_radius_sq) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("magic_numbers: dimension must be in [1, 4]");
  std::vector<std::size_t> shell_counts(static_cast<std::size_t>(std::max(0L, max_radius_sq + 1)), 0);
  detail::for_each_in_ball(dim, max_radius_sq, [&](const Momentum& m) { ++shell_counts[m.norm2()]; });
  std::vector<MagicNumber> out;
  std::size_t total = 0;
  for (long r2 = 0; r2 <= max_radius_sq; ++r2) {
    if (shell_counts[r2] == 0) continue;
    total += shell_counts[r2];
    out.push_back({r2, total});
  }
  return out;
}

/// Sum of |p|^2 over the Fermi ball, in physical units.
inline double kinetic_ground_sum(const GasConfig& config) {
  long s = 0;
  detail::for_each_in_ball(config.dim(), config.fermi_radius_sq(), [&](const Momentum& m) { s += m.norm2(); });
  return kTwoPi * kTwoPi * static_cast<double>(s);
}

/// C_k = { p : |p| <= k_F, |p + k| > k_F }.
struct CrescentSet {
  Momentum k;
  std::vector<Momentum> members;  // global mode order
  std::size_t size() const noexcept { return members.size(); }
  bool contains(const Momentum& p) const { return std::binary_search(members.begin(), members.end(), p); }
};

inline CrescentSet crescent(const Momentum& k, const GasConfig& config) {
  if (k.dim() != config.dim()) throw std::invalid_argument("crescent: dimension mismatch");
  CrescentSet set{k, {}};
  for (const auto& p : fermi_ball(config)) {
    if (!config.inside(p + k)) set.members.push_back(p);
  }
  return set;
}

inline std::size_t crescent_size(const Momentum& k, const GasConfig& config) {
  std::size_t n = 0;
  detail::for_each_in_ball(config.dim(), config.fermi_radius_sq(), [&](const Momentum& p) {
    if (!config.inside(p + k)) ++n;
  });
  return n;
}

/// |C_k| / (k_F^{d-1} min(|k|, k_F)) with lengths in lattice units.
inline double crescent_ratio(std::size_t size, const Momentum& k, const GasConfig& config) {
  const double kf = config.fermi_radius();
  return static_cast<double>(size) / (std::pow(kf, config.dim() - 1) * std::min(k.norm(), kf));
}

struct CrescentAuditRow {
  long radius_sq;
  std::size_t particles;
  Momentum k;
  std::size_t size;
  double ratio;
};

struct CrescentAuditReport {
  double c1 = 0.0;  ///< smallest ratio observed
  double c2 = 0.0;  ///< largest ratio observed
  CrescentAuditRow min_witness{};
  CrescentAuditRow max_witness{};
  long smallest_radius_sq = 0;  ///< realizes c3
  bool union_identity_holds = true;
  bool reflection_symmetric = true;
  bool ok = false;
  std::string failure;
  std::vector<CrescentAuditRow> rows;
  /// Largest k_F^{d-1} / N^{(d-1)/d} over the swept configs (lattice units).
  double max_radius_to_density = 0.0;
};

/// All nonzero lattice momenta with |k|^2 <= radius_sq in the global order.
inline std::vector<Momentum> nonzero_momenta(int dim, long radius_sq) {
  auto ball = lattice_ball(dim, radius_sq);
  ball.erase(std::remove_if(ball.begin(), ball.end(), [](const Momentum& m) { return m.is_zero(); }), ball.end());
  return ball;
}

/// Computes |C_k| over every (config, k) pair and reports the extremal ratios.
///
/// Fails if any ratio is zero, if C_k and C_{-k} differ in size, if
/// C_k ∪ C_{-k} misses a ball point for some |k| > k_F, or if the maximal
/// ratio grows strictly at every step of the config sweep (divergence).
inline CrescentAuditReport audit_crescent_bounds(const std::vector<GasConfig>& configs,
                                                 const std::vector<Momentum>& ks) {
  CrescentAuditReport rep;
  if (configs.empty() || ks.empty()) {
    rep.failure = "empty audit range";
    return rep;
  }
  rep.c1 = std::numeric_limits<double>::infinity();
  rep.smallest_radius_sq = configs.front().fermi_radius_sq();
  std::vector<double> per_config_max;
  for (const auto& cfg : configs) {
    rep.smallest_radius_sq = std::min(rep.smallest_radius_sq, cfg.fermi_radius_sq());
    if (cfg.fermi_radius_sq() == 0) {
      rep.failure = "k_F = 0 config in audit range";
      return rep;
    }
    const double dens = std::pow(cfg.fermi_radius(), cfg.dim() - 1) /
                        std::pow(static_cast<double>(cfg.particle_number()), (cfg.dim() - 1.0) / cfg.dim());
    rep.max_radius_to_density = std::max(rep.max_radius_to_density, dens);
    const auto ball = fermi_ball(cfg);
    double cfg_max = 0.0;
    for (const auto& k : ks) {
      if (k.is_zero()) continue;
      const auto ck = crescent(k, cfg);
      const auto cmk = crescent(-k, cfg);
      if (ck.size() != cmk.size()) {
        rep.reflection_symmetric = false;
        rep.failure = "|C_k| != |C_-k| at k = " + k.str() + ", radius_sq = " + std::to_string(cfg.fermi_radius_sq());
      }
      if (k.norm2() > cfg.fermi_radius_sq()) {
        std::set<Momentum> uni(ck.members.begin(), ck.members.end());
        uni.insert(cmk.members.begin(), cmk.members.end());
        if (uni.size() != ball.size()) {
          rep.union_identity_holds = false;
          rep.failure = "C_k ∪ C_-k != B(k_F) at k = " + k.str() + ", radius_sq = " +
                        std::to_string(cfg.fermi_radius_sq());
        }
      }
      CrescentAuditRow row{cfg.fermi_radius_sq(), cfg.particle_number(), k, ck.size(),
                           crescent_ratio(ck.size(), k, cfg)};
      if (row.ratio < rep.c1) {
        rep.c1 = row.ratio;
        rep.min_witness = row;
      }
      if (row.ratio > rep.c2) {
        rep.c2 = row.ratio;
        rep.max_witness = row;
      }
      cfg_max = std::max(cfg_max, row.ratio);
      rep.rows.push_back(row);
    }
    per_config_max.push_back(cfg_max);
  }
  if (rep.rows.empty()) {
    rep.failure = "no nonzero k in audit range";
    return rep;
  }
  if (rep.c1 <= 0.0 && rep.failure.empty()) {
    rep.failure = "zero ratio at k = " + rep.min_witness.k.str() + ", radius_sq = " +
                  std::to_string(rep.min_witness.radius_sq);
  }
  if (per_config_max.size() >= 4 && rep.failure.empty()) {
    bool increasing = true;
    for (std::size_t i = 1; i < per_config_max.size(); ++i) increasing &= per_config_max[i] > per_config_max[i - 1];
    if (increasing) {
      rep.failure = "maximal ratio grows at every step of the sweep; witness k = " + rep.max_witness.k.str() +
                    ", radius_sq = " + std::to_string(rep.max_witness.radius_sq);
    }
  }
  rep.ok = rep.failure.empty();
  return rep;
}

/// Configs at every magic number with min_radius_sq <= k_F^2 <= max_radius_sq.
inline std::vector<GasConfig> magic_configs(int dim, long min_radius_sq, long max_radius_sq, double alpha) {
  std::vector<GasConfig> out;
  for (const auto& mn : magic_numbers(dim, max_radius_sq)) {
    if (mn.radius_sq >= min_radius_sq) out.emplace_back(dim, mn.radius_sq, alpha);
  }
  return out;
}

}  // namespace bosonlab
