#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>

#include "bosonlab/fermion.hpp"
#include "bosonlab/potential.hpp"

namespace bosonlab {

/// Tags for the implemented second-quantized operators. Every operator
/// commutes with total momentum; all except the single-mode creators and
/// annihilators preserve particle number.
namespace ops {
struct Annihilator { Momentum p; };          ///< a_p
struct Creator { Momentum p; };              ///< a_p^*
struct Rho { Momentum k; };                  ///< ρ_k = Σ_p a_{p-k}^* a_p
struct B { Momentum k; };                    ///< b_k
struct BDag { Momentum k; };                 ///< b_k^*
struct D { Momentum k; };                    ///< d_k
struct NormalKinetic {};                     ///< :T:
struct ExcitationNumber {};                  ///< 𝒩
struct NormalCommutator { Momentum k, q; };  ///< :[b_k, b_q^*]:
struct Hamiltonian { Potential potential; }; ///< H_N
struct H1 { Potential potential; };          ///< pair-operator part of H_N - E_N^(0)
struct H2 { Potential potential; };          ///< remainder: :T: and the d_k terms
}  // namespace ops

using OperatorSpec = std::variant<ops::Annihilator, ops::Creator, ops::Rho, ops::B, ops::BDag, ops::D,
                                  ops::NormalKinetic, ops::ExcitationNumber, ops::NormalCommutator,
                                  ops::Hamiltonian, ops::H1, ops::H2>;

namespace detail {

/// Applies Σ_p a_{target(p)}^* a_p, summing over occupied p for which target
/// returns a momentum.
template <class Target>
FermionVector apply_one_body(const FermiSea& sea, const FermionVector& v, Target&& target) {
  FermionAccumulator acc;
  const auto& ball = sea.ball();
  const auto& keys = sea.ball_keys();
  for (const auto& [det, amp] : v.terms()) {
    auto visit = [&](ModeKey from_key, const Momentum& from) {
      const std::optional<Momentum> to = target(from);
      if (!to) return;
      if (auto r = sea.hop(det, to->key(), from_key)) acc.add(std::move(r->det), amp * static_cast<double>(r->sign));
    };
    std::size_t h = 0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      while (h < det.holes.size() && det.holes[h] < keys[i]) ++h;
      if (h < det.holes.size() && det.holes[h] == keys[i]) continue;
      visit(keys[i], ball[i]);
    }
    for (auto pk : det.particles) visit(pk, sea.momentum(pk));
  }
  return std::move(acc).finish();
}

inline void check_dim(const FermiSea& sea, const Momentum& k) {
  if (k.dim() != sea.dim()) throw std::invalid_argument("operator momentum " + k.str() + " has wrong dimension");
}

inline void check_potential(const FermiSea& sea, const Potential& pot) {
  if (!pot.is_zero() && pot.dim() != sea.dim()) {
    throw std::invalid_argument("potential dimension does not match the gas");
  }
}

}  // namespace detail

inline FermionVector apply_annihilator(const FermiSea& sea, const Momentum& p, const FermionVector& v) {
  detail::check_dim(sea, p);
  const ModeKey k = p.key();
  FermionAccumulator acc;
  for (const auto& [det, amp] : v.terms()) {
    if (auto r = sea.annihilate(det, k)) acc.add(std::move(r->det), amp * static_cast<double>(r->sign));
  }
  return std::move(acc).finish();
}

inline FermionVector apply_creator(const FermiSea& sea, const Momentum& p, const FermionVector& v) {
  detail::check_dim(sea, p);
  const ModeKey k = p.key();
  FermionAccumulator acc;
  for (const auto& [det, amp] : v.terms()) {
    if (auto r = sea.create(det, k)) acc.add(std::move(r->det), amp * static_cast<double>(r->sign));
  }
  return std::move(acc).finish();
}

inline FermionVector apply_rho(const FermiSea& sea, const Momentum& k, const FermionVector& v) {
  detail::check_dim(sea, k);
  return detail::apply_one_body(sea, v, [&](const Momentum& p) -> std::optional<Momentum> { return p - k; });
}

/// b_k = Σ_{|p| > k_F, |p-k| <= k_F} a_{p-k}^* a_p.
inline FermionVector apply_b(const FermiSea& sea, const Momentum& k, const FermionVector& v) {
  detail::check_dim(sea, k);
  return detail::apply_one_body(sea, v, [&](const Momentum& p) -> std::optional<Momentum> {
    if (sea.inside(p)) return std::nullopt;
    Momentum to = p - k;
    if (!sea.inside(to)) return std::nullopt;
    return to;
  });
}

/// b_k^* = Σ_{p ∈ C_k} a_{p+k}^* a_p.
inline FermionVector apply_b_dag(const FermiSea& sea, const Momentum& k, const FermionVector& v) {
  detail::check_dim(sea, k);
  return detail::apply_one_body(sea, v, [&](const Momentum& p) -> std::optional<Momentum> {
    if (!sea.inside(p)) return std::nullopt;
    Momentum to = p + k;
    if (sea.inside(to)) return std::nullopt;
    return to;
  });
}

/// d_k: the part of ρ_k that keeps a particle on its side of the Fermi surface.
inline FermionVector apply_d(const FermiSea& sea, const Momentum& k, const FermionVector& v) {
  detail::check_dim(sea, k);
  return detail::apply_one_body(sea, v, [&](const Momentum& p) -> std::optional<Momentum> {
    Momentum to = p - k;
    if (sea.inside(p) != sea.inside(to)) return std::nullopt;
    return to;
  });
}

/// b_k + b_{-k}^*: the part of ρ_k that moves a particle across the Fermi surface.
inline FermionVector apply_pair_part(const FermiSea& sea, const Momentum& k, const FermionVector& v) {
  detail::check_dim(sea, k);
  return detail::apply_one_body(sea, v, [&](const Momentum& p) -> std::optional<Momentum> {
    Momentum to = p - k;
    if (sea.inside(p) == sea.inside(to)) return std::nullopt;
    return to;
  });
}

/// :[b_k, b_q^*]: = - Σ_{|p|,|p+q-k| <= k_F < |p+q|} a_p a_{p+q-k}^*
///                  - Σ_{|p| <= k_F < |p+q|,|p+k|} a_{p+q}^* a_{p+k}.
inline FermionVector apply_normal_commutator(const FermiSea& sea, const Momentum& k, const Momentum& q,
                                             const FermionVector& v) {
  detail::check_dim(sea, k);
  detail::check_dim(sea, q);
  struct Pair { ModeKey first, second; };  // apply `first` then `second`
  std::vector<Pair> hole_terms;   // a_p a_{p+q-k}^*
  std::vector<Pair> part_terms;   // a_{p+q}^* a_{p+k}
  for (const auto& p : sea.ball()) {
    const Momentum pq = p + q;
    if (sea.inside(pq)) continue;
    const Momentum pqk = pq - k;
    if (sea.inside(pqk)) hole_terms.push_back({pqk.key(), p.key()});
    const Momentum pk = p + k;
    if (!sea.inside(pk)) part_terms.push_back({pk.key(), pq.key()});
  }
  FermionAccumulator acc;
  for (const auto& [det, amp] : v.terms()) {
    for (const auto& t : hole_terms) {
      auto r1 = sea.create(det, t.first);
      if (!r1) continue;
      auto r2 = sea.annihilate(r1->det, t.second);
      if (!r2) continue;
      acc.add(std::move(r2->det), -amp * static_cast<double>(r1->sign * r2->sign));
    }
    for (const auto& t : part_terms) {
      auto r1 = sea.annihilate(det, t.first);
      if (!r1) continue;
      auto r2 = sea.create(r1->det, t.second);
      if (!r2) continue;
      acc.add(std::move(r2->det), -amp * static_cast<double>(r1->sign * r2->sign));
    }
  }
  return std::move(acc).finish();
}

/// :T: = Σ_{|p| > k_F} |p|^2 a_p^* a_p - Σ_{|p| <= k_F} |p|^2 a_p a_p^*.
inline FermionVector apply_normal_kinetic(const FermiSea&, const FermionVector& v) {
  std::vector<FermionVector::Term> out;
  out.reserve(v.size());
  for (const auto& [det, amp] : v.terms()) {
    long s = 0;
    for (auto k : det.particles) s += static_cast<long>(norm2_of(k));
    for (auto k : det.holes) s -= static_cast<long>(norm2_of(k));
    out.emplace_back(det, amp * (kTwoPi * kTwoPi * static_cast<double>(s)));
  }
  return FermionVector::from_terms(std::move(out));
}

/// 𝒩 = (#holes + #particles) / 2.
inline FermionVector apply_excitation_number(const FermiSea&, const FermionVector& v) {
  std::vector<FermionVector::Term> out;
  out.reserve(v.size());
  for (const auto& [det, amp] : v.terms()) {
    out.emplace_back(det, amp * (0.5 * static_cast<double>(det.holes.size() + det.particles.size())));
  }
  return FermionVector::from_terms(std::move(out));
}

/// E_N^(0) = Σ_{|p| <= k_F} |p|^2 + (N^{2-α}/2) ∫v - (N^{1-α}/2) v(0).
inline double e_n0(const GasConfig& config, const Potential& pot) {
  const double n = static_cast<double>(config.particle_number());
  const double a = config.alpha();
  return kinetic_ground_sum(config) + 0.5 * std::pow(n, 2.0 - a) * pot.integral() -
         0.5 * std::pow(n, 1.0 - a) * pot.value_at_origin();
}

/// E_N^(0) <= E_N <= <ψ0|H_N ψ0> = E_N^(0) + (N^{-α}/2) Σ_{k≠0} |C_k| v̂(k).
struct TrivialBounds {
  double lower;
  double upper;
};

inline TrivialBounds trivial_bounds(const GasConfig& config, const Potential& pot) {
  const double lower = e_n0(config, pot);
  double s = 0.0;
  for (const auto& k : pot.nonzero_support()) s += static_cast<double>(crescent_size(k, config)) * pot(k);
  return {lower, lower + 0.5 * config.coupling() * s};
}

inline FermionVector apply_h1(const FermiSea& sea, const Potential& pot, const FermionVector& v) {
  detail::check_potential(sea, pot);
  FermionAccumulator acc;
  const double g = 0.5 * sea.config().coupling();
  for (const auto& k : pot.nonzero_support()) {
    // (b_k^* + b_{-k})(b_{-k}^* + b_k)
    const FermionVector inner_part = apply_pair_part(sea, k, v);
    acc.add(apply_pair_part(sea, -k, inner_part), g * pot(k));
  }
  return std::move(acc).finish();
}

inline FermionVector apply_h2(const FermiSea& sea, const Potential& pot, const FermionVector& v) {
  detail::check_potential(sea, pot);
  FermionAccumulator acc;
  acc.add(apply_normal_kinetic(sea, v));
  const double g = 0.5 * sea.config().coupling();
  for (const auto& k : pot.nonzero_support()) {
    const Momentum mk = -k;
    const FermionVector dk = apply_d(sea, k, v);
    // (b_k^* + b_{-k}) d_k + d_{-k} (b_{-k}^* + b_k) + d_{-k} d_k
    acc.add(apply_pair_part(sea, mk, dk), g * pot(k));
    acc.add(apply_d(sea, mk, apply_pair_part(sea, k, v)), g * pot(k));
    acc.add(apply_d(sea, mk, dk), g * pot(k));
  }
  return std::move(acc).finish();
}

/// H_N = E_N^(0) + :T: + (N^{-α}/2) Σ_{k≠0} v̂(k) ρ_k^* ρ_k on the N-particle sector.
inline FermionVector apply_hamiltonian(const FermiSea& sea, const Potential& pot, const FermionVector& v) {
  detail::check_potential(sea, pot);
  FermionAccumulator acc;
  acc.add(v, e_n0(sea.config(), pot));
  acc.add(apply_normal_kinetic(sea, v));
  const double g = 0.5 * sea.config().coupling();
  for (const auto& k : pot.nonzero_support()) {
    acc.add(apply_rho(sea, -k, apply_rho(sea, k, v)), g * pot(k));
  }
  return std::move(acc).finish();
}

inline FermionVector apply_operator(const FermiSea& sea, const OperatorSpec& spec, const FermionVector& v) {
  return std::visit(
      [&](const auto& op) -> FermionVector {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, ops::Annihilator>) return apply_annihilator(sea, op.p, v);
        else if constexpr (std::is_same_v<T, ops::Creator>) return apply_creator(sea, op.p, v);
        else if constexpr (std::is_same_v<T, ops::Rho>) return apply_rho(sea, op.k, v);
        else if constexpr (std::is_same_v<T, ops::B>) return apply_b(sea, op.k, v);
        else if constexpr (std::is_same_v<T, ops::BDag>) return apply_b_dag(sea, op.k, v);
        else if constexpr (std::is_same_v<T, ops::D>) return apply_d(sea, op.k, v);
        else if constexpr (std::is_same_v<T, ops::NormalKinetic>) return apply_normal_kinetic(sea, v);
        else if constexpr (std::is_same_v<T, ops::ExcitationNumber>) return apply_excitation_number(sea, v);
        else if constexpr (std::is_same_v<T, ops::NormalCommutator>) return apply_normal_commutator(sea, op.k, op.q, v);
        else if constexpr (std::is_same_v<T, ops::Hamiltonian>) return apply_hamiltonian(sea, op.potential, v);
        else if constexpr (std::is_same_v<T, ops::H1>) return apply_h1(sea, op.potential, v);
        else return apply_h2(sea, op.potential, v);
      },
      spec);
}

/// <v|A v> / <v|v>; the operators are self-adjoint or the caller wants the real part.
inline double expectation(const FermiSea& sea, const OperatorSpec& spec, const FermionVector& v) {
  const double n2 = v.norm2();
  if (n2 == 0.0) throw std::invalid_argument("expectation: zero vector");
  return inner(v, apply_operator(sea, spec, v)).real() / n2;
}

}  // namespace bosonlab
