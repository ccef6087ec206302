#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bosonlab/lattice.hpp"
#include "bosonlab/potential.hpp"
#include "bosonlab/sparse_vector.hpp"

namespace bosonlab {

/// e_{k1}^* ... e_{km}^* Ω, stored as the sorted multiset of mode keys.
struct BosonMonomial {
  std::vector<ModeKey> modes;

  std::size_t degree() const noexcept { return modes.size(); }
  std::size_t multiplicity(ModeKey k) const {
    auto [lo, hi] = std::equal_range(modes.begin(), modes.end(), k);
    return static_cast<std::size_t>(hi - lo);
  }

  friend bool operator==(const BosonMonomial&, const BosonMonomial&) = default;
  friend auto operator<=>(const BosonMonomial&, const BosonMonomial&) = default;
};

/// ‖e_{k1}^* ... e_{km}^* Ω‖² = Π over distinct modes of multiplicity!.
inline double basis_gram(const BosonMonomial& m) noexcept {
  double g = 1.0;
  std::size_t run = 0;
  for (std::size_t i = 0; i < m.modes.size(); ++i) {
    run = (i > 0 && m.modes[i] == m.modes[i - 1]) ? run + 1 : 1;
    g *= static_cast<double>(run);
  }
  return g;
}

struct BosonMonomialHash {
  std::size_t operator()(const BosonMonomial& m) const noexcept {
    std::size_t h = m.modes.size();
    for (auto k : m.modes) {
      k ^= k >> 31;
      k *= 0x9e3779b97f4a7c15ULL;
      h ^= k + 0x7f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

using BosonVector = SparseVector<BosonMonomial>;
using BosonAccumulator = Accumulator<BosonMonomial, BosonMonomialHash>;

inline BosonMonomial monomial(std::initializer_list<Momentum> modes) {
  BosonMonomial m;
  for (const auto& k : modes) {
    if (k.is_zero()) throw std::invalid_argument("boson monomial: zero mode");
    m.modes.push_back(k.key());
  }
  std::sort(m.modes.begin(), m.modes.end());
  return m;
}

inline BosonVector vacuum() { return BosonVector::basis(BosonMonomial{}); }

enum class BosonOp { creation, annihilation };

inline BosonVector boson_apply(BosonOp which, const Momentum& k, const BosonVector& f) {
  if (k.is_zero()) throw std::invalid_argument("boson_apply: k = 0 is not a bosonic mode");
  const ModeKey key = k.key();
  std::vector<BosonVector::Term> out;
  out.reserve(f.size());
  for (const auto& [mono, amp] : f.terms()) {
    BosonMonomial next = mono;
    if (which == BosonOp::creation) {
      next.modes.insert(std::upper_bound(next.modes.begin(), next.modes.end(), key), key);
      out.emplace_back(std::move(next), amp);
    } else {
      const std::size_t n = mono.multiplicity(key);
      if (n == 0) continue;
      next.modes.erase(std::lower_bound(next.modes.begin(), next.modes.end(), key));
      out.emplace_back(std::move(next), amp * static_cast<double>(n));
    }
  }
  return BosonVector::from_terms(std::move(out));
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// The finite mode set S (closed under k -> -k, 0 excluded) and the maximal
/// degree m of D^S_{<=m}.
class TruncationWindow {
 public:
  TruncationWindow(std::vector<Momentum> modes, std::size_t max_degree) : max_degree_(max_degree) {
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
    for (const auto& k : modes) {
      if (k.is_zero()) throw std::invalid_argument("TruncationWindow: S contains 0");
      if (!std::binary_search(modes.begin(), modes.end(), -k)) {
        throw std::invalid_argument("TruncationWindow: S not closed under negation, missing " + (-k).str());
      }
      if (k.dim() != modes.front().dim()) throw std::invalid_argument("TruncationWindow: mixed dimensions");
    }
    modes_ = std::move(modes);
  }

  /// S = {k ≠ 0 : |k|² <= radius_sq}.
  static TruncationWindow ball(int dim, long radius_sq, std::size_t max_degree) {
    return TruncationWindow(nonzero_momenta(dim, radius_sq), max_degree);
  }

  const std::vector<Momentum>& modes() const noexcept { return modes_; }
  std::size_t max_degree() const noexcept { return max_degree_; }
  bool empty() const noexcept { return modes_.empty(); }
  int dim() const { return modes_.empty() ? 0 : modes_.front().dim(); }
  bool contains(const Momentum& k) const { return std::binary_search(modes_.begin(), modes_.end(), k); }

  std::uint64_t dimension() const { return binomial(max_degree_ + modes_.size(), max_degree_); }
  std::uint64_t dimension_of_degree(std::size_t m) const {
    if (modes_.empty()) return m == 0 ? 1 : 0;
    return binomial(m + modes_.size() - 1, m);
  }

  /// Every monomial of degree <= m, by degree and then lexicographically.
  std::vector<BosonMonomial> monomials() const {
    std::vector<BosonMonomial> out;
    std::vector<ModeKey> keys;
    for (const auto& k : modes_) keys.push_back(k.key());
    BosonMonomial cur;
    for (std::size_t deg = 0; deg <= max_degree_; ++deg) {
      auto rec = [&](auto&& self, std::size_t from) -> void {
        if (cur.modes.size() == deg) {
          out.push_back(cur);
          return;
        }
        for (std::size_t i = from; i < keys.size(); ++i) {
          cur.modes.push_back(keys[i]);
          self(self, i);
          cur.modes.pop_back();
        }
      };
      rec(rec, 0);
    }
    return out;
  }

 private:
  std::vector<Momentum> modes_;
  std::size_t max_degree_;
};

/// Mode weights w_k of Σ_{k≠0} w_k (e_k^* + e_{-k})(e_{-k}^* + e_k).
using BosonWeights = std::map<Momentum, double>;

inline void validate_weights(const BosonWeights& w, bool require_nonnegative) {
  for (const auto& [k, g] : w) {
    if (k.is_zero()) throw std::invalid_argument("boson weights: k = 0 present");
    auto it = w.find(-k);
    const double partner = it == w.end() ? 0.0 : it->second;
    if (partner != g) throw std::invalid_argument("boson weights: w(" + k.str() + ") != w(" + (-k).str() + ")");
    if (require_nonnegative && g < 0) throw std::invalid_argument("boson weights: negative weight at " + k.str());
  }
}

/// g_k = (N^{-α}/2) |C_k| v̂(k).
inline BosonWeights hb_weights(const GasConfig& config, const Potential& pot) {
  BosonWeights w;
  const double half = 0.5 * config.coupling();
  for (const auto& k : pot.nonzero_support()) w[k] = half * static_cast<double>(crescent_size(k, config)) * pot(k);
  return w;
}

/// |k| v̂(k), independent of k_F.
inline BosonWeights hb_tilde_weights(const Potential& pot) {
  BosonWeights w;
  for (const auto& k : pot.nonzero_support()) w[k] = k.physical_norm() * pot(k);
  return w;
}

inline BosonVector hb_apply(const BosonVector& f, const BosonWeights& weights) {
  validate_weights(weights, false);
  BosonAccumulator acc;
  for (const auto& [k, g] : weights) {
    if (g == 0.0) continue;
    const Momentum mk = -k;
    const BosonVector inner_part =
        boson_apply(BosonOp::creation, mk, f) + boson_apply(BosonOp::annihilation, k, f);
    acc.add(boson_apply(BosonOp::creation, k, inner_part), g);
    acc.add(boson_apply(BosonOp::annihilation, mk, inner_part), g);
  }
  return std::move(acc).finish();
}

namespace detail {

/// n_k - n_{-k} for each pair {k, -k} of S, pairs indexed by the smaller key.
inline std::vector<int> pair_charges(const TruncationWindow& w, const BosonMonomial& m) {
  std::vector<int> q;
  for (const auto& k : w.modes()) {
    const Momentum mk = -k;
    if (k.key() > mk.key()) continue;
    q.push_back(static_cast<int>(m.multiplicity(k.key())) - static_cast<int>(m.multiplicity(mk.key())));
  }
  return q;
}

}  // namespace detail

/// Window monomials grouped by their pair-charge vector; the quadratic forms
/// are block diagonal with respect to this grouping.
inline std::map<std::vector<int>, std::vector<BosonMonomial>> charge_blocks(const TruncationWindow& w) {
  std::map<std::vector<int>, std::vector<BosonMonomial>> blocks;
  for (auto& m : w.monomials()) blocks[detail::pair_charges(w, m)].push_back(std::move(m));
  return blocks;
}

/// Galerkin matrix of the weighted form on span(basis) in the orthonormalized
/// monomial basis e_i / ‖e_i‖.
inline Eigen::MatrixXd hb_form_matrix(const BosonWeights& weights, const std::vector<BosonMonomial>& basis) {
  std::unordered_map<BosonMonomial, Eigen::Index, BosonMonomialHash> index;
  for (std::size_t i = 0; i < basis.size(); ++i) index.emplace(basis[i], static_cast<Eigen::Index>(i));
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXd norms(n);
  for (Eigen::Index i = 0; i < n; ++i) norms(i) = std::sqrt(basis_gram(basis[static_cast<std::size_t>(i)]));
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const BosonVector h = hb_apply(BosonVector::basis(basis[static_cast<std::size_t>(j)]), weights);
    for (const auto& [mono, amp] : h.terms()) {
      auto it = index.find(mono);
      if (it == index.end()) continue;
      const Eigen::Index i = it->second;
      a(i, j) = amp.real() * basis_gram(mono) / (norms(i) * norms(j));
    }
  }
  return 0.5 * (a + a.transpose());
}

struct TruncatedMinimum {
  double value = 0.0;
  BosonVector argmin;  ///< unit norm
  std::vector<int> charges;
  std::size_t dimension = 0;
  std::size_t largest_block = 0;
};

/// Minimum of <f|H f>/<f|f> over D^S_{<=m}, solved exactly per charge block.
inline TruncatedMinimum hb_min_truncated(const BosonWeights& weights, const TruncationWindow& window) {
  if (window.empty()) throw std::invalid_argument("hb_min_truncated: empty window");
  validate_weights(weights, false);
  TruncatedMinimum best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& [q, basis] : charge_blocks(window)) {
    best.dimension += basis.size();
    best.largest_block = std::max(best.largest_block, basis.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hb_form_matrix(weights, basis));
    const double v = es.eigenvalues()(0);
    if (v < best.value - 1e-14 * std::max(1.0, std::abs(v))) {
      best.value = v;
      best.charges = q;
      std::vector<BosonVector::Term> terms;
      for (std::size_t i = 0; i < basis.size(); ++i) {
        terms.emplace_back(basis[i], es.eigenvectors()(static_cast<Eigen::Index>(i), 0) / std::sqrt(basis_gram(basis[i])));
      }
      best.argmin = BosonVector::from_terms(std::move(terms));
    }
  }
  return best;
}

/// c with |C_k| <= c2 k_F^{d-1}|k| (lattice units) turned into
/// H^B <= c N^{1-α-1/d} H̃^B, maximized over the given configs.
inline double domination_constant(double c2, const std::vector<GasConfig>& configs) {
  double worst = 0.0;
  for (const auto& cfg : configs) {
    const int d = cfg.dim();
    const double n = static_cast<double>(cfg.particle_number());
    worst = std::max(worst, std::pow(cfg.fermi_radius(), d - 1) / std::pow(n, (d - 1.0) / d));
  }
  return c2 * worst / (2.0 * kTwoPi);
}

struct DominationReport {
  double c = 0.0;
  double scale = 0.0;            ///< N^{1-α-1/d}
  double min_eig_hb = 0.0;       ///< smallest eigenvalue of H^B on the window
  double min_eig_gap = 0.0;      ///< smallest eigenvalue of c·scale·H̃^B - H^B
  bool ok = false;
  std::string failure;
  BosonVector witness;
};

inline DominationReport hb_domination_check(const GasConfig& config, const Potential& pot,
                                            const TruncationWindow& window, double c, double tolerance = 1e-9) {
  DominationReport rep;
  rep.c = c;
  rep.scale = config.correction_scale();
  const BosonWeights hb = hb_weights(config, pot);
  const BosonWeights ht = hb_tilde_weights(pot);
  validate_weights(ht, true);
  rep.min_eig_hb = std::numeric_limits<double>::infinity();
  rep.min_eig_gap = std::numeric_limits<double>::infinity();
  double norm_scale = 1.0;
  for (const auto& [q, basis] : charge_blocks(window)) {
    const Eigen::MatrixXd a = hb_form_matrix(hb, basis);
    const Eigen::MatrixXd gap = c * rep.scale * hb_form_matrix(ht, basis) - a;
    norm_scale = std::max({norm_scale, a.norm(), gap.norm()});
    auto probe = [&](const Eigen::MatrixXd& m, double& slot) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
      if (es.eigenvalues()(0) < slot) slot = es.eigenvalues()(0);
      return es;
    };
    const auto es_a = probe(a, rep.min_eig_hb);
    const auto es_g = probe(gap, rep.min_eig_gap);
    auto witness_from = [&](const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
      std::vector<BosonVector::Term> terms;
      for (std::size_t i = 0; i < basis.size(); ++i) {
        terms.emplace_back(basis[i], es.eigenvectors()(static_cast<Eigen::Index>(i), 0) / std::sqrt(basis_gram(basis[i])));
      }
      return BosonVector::from_terms(std::move(terms));
    };
    if (rep.failure.empty() && es_a.eigenvalues()(0) < -tolerance * norm_scale) {
      rep.failure = "H^B not positive semidefinite";
      rep.witness = witness_from(es_a);
    }
    if (rep.failure.empty() && es_g.eigenvalues()(0) < -tolerance * norm_scale) {
      rep.failure = "c N^{1-a-1/d} H~B - H^B not positive semidefinite";
      rep.witness = witness_from(es_g);
    }
  }
  rep.ok = rep.failure.empty();
  return rep;
}

}  // namespace bosonlab
