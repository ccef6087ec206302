#pragma once

#include <algorithm>
#include <compare>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bosonlab/lattice.hpp"
#include "bosonlab/momentum.hpp"
#include "bosonlab/sparse_vector.hpp"

namespace bosonlab {

/// Slater determinant, stored as its difference from the plane-wave state of
/// a FermiSea: the unoccupied ball modes (holes) and the occupied modes outside
/// the ball (particles). Both lists are sorted in the global mode order. The
/// occupied set is ball \ holes ∪ particles; the reference state itself is the
/// empty excitation.
///
/// A determinant is only meaningful together with the FermiSea it was built
/// against.
struct Determinant {
  std::vector<ModeKey> holes;
  std::vector<ModeKey> particles;

  bool is_reference() const noexcept { return holes.empty() && particles.empty(); }
  std::size_t excitation_rank() const noexcept { return std::max(holes.size(), particles.size()); }

  friend bool operator==(const Determinant&, const Determinant&) = default;
  friend auto operator<=>(const Determinant&, const Determinant&) = default;
};

inline double basis_gram(const Determinant&) noexcept { return 1.0; }

struct DeterminantHash {
  std::size_t operator()(const Determinant& d) const noexcept {
    std::size_t h = d.holes.size() * 0x9e3779b97f4a7c15ULL;
    auto mix = [&h](ModeKey k) {
      k ^= k >> 33;
      k *= 0xff51afd7ed558ccdULL;
      k ^= k >> 33;
      h ^= k + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    for (auto k : d.holes) mix(k);
    mix(0x5bd1e995u);
    for (auto k : d.particles) mix(k);
    return h;
  }
};

using FermionVector = SparseVector<Determinant>;
using FermionAccumulator = Accumulator<Determinant, DeterminantHash>;

struct SignedDeterminant {
  Determinant det;
  int sign;
};

/// The filled Fermi ball of a GasConfig and the fermionic sign machinery
/// relative to it. Fermionic sign convention: a_p and a_p^* acting on a
/// determinant pick up (-1)^(number of occupied modes preceding p in the
/// global mode order).
class FermiSea {
 public:
  explicit FermiSea(GasConfig config) : config_(std::move(config)), ball_(fermi_ball(config_)) {
    ball_keys_.reserve(ball_.size());
    for (const auto& p : ball_) ball_keys_.push_back(p.key());
    kinetic_sum_ = kinetic_ground_sum(config_);
  }

  const GasConfig& config() const noexcept { return config_; }
  int dim() const noexcept { return config_.dim(); }
  std::size_t particle_number() const noexcept { return ball_.size(); }
  const std::vector<Momentum>& ball() const noexcept { return ball_; }
  const std::vector<ModeKey>& ball_keys() const noexcept { return ball_keys_; }
  double kinetic_sum() const noexcept { return kinetic_sum_; }

  bool inside(ModeKey k) const noexcept {
    return norm2_of(k) <= static_cast<std::uint64_t>(config_.fermi_radius_sq());
  }
  bool inside(const Momentum& p) const noexcept { return config_.inside(p); }

  Momentum momentum(ModeKey k) const { return Momentum::from_key(k, dim()); }

  /// Number of ball modes strictly preceding k.
  std::size_t rank(ModeKey k) const noexcept {
    if (!inside(k)) return ball_keys_.size();
    return static_cast<std::size_t>(std::lower_bound(ball_keys_.begin(), ball_keys_.end(), k) - ball_keys_.begin());
  }

  std::size_t crescent_size(const Momentum& k) const { return bosonlab::crescent_size(k, config_); }

  FermionVector psi0() const { return FermionVector::basis(Determinant{}); }

  bool occupied(const Determinant& d, ModeKey k) const {
    return inside(k) ? !std::binary_search(d.holes.begin(), d.holes.end(), k)
                     : std::binary_search(d.particles.begin(), d.particles.end(), k);
  }

  /// Number of occupied modes of d strictly preceding k in the global order.
  std::size_t count_before(const Determinant& d, ModeKey k) const {
    const auto holes_before = std::lower_bound(d.holes.begin(), d.holes.end(), k) - d.holes.begin();
    const auto parts_before = std::lower_bound(d.particles.begin(), d.particles.end(), k) - d.particles.begin();
    return rank(k) - static_cast<std::size_t>(holes_before) + static_cast<std::size_t>(parts_before);
  }

  std::size_t particle_number(const Determinant& d) const {
    return ball_keys_.size() - d.holes.size() + d.particles.size();
  }

  std::vector<ModeKey> occupied_keys(const Determinant& d) const {
    std::vector<ModeKey> out;
    out.reserve(particle_number(d));
    std::set_difference(ball_keys_.begin(), ball_keys_.end(), d.holes.begin(), d.holes.end(),
                        std::back_inserter(out));
    out.insert(out.end(), d.particles.begin(), d.particles.end());
    return out;
  }

  std::vector<Momentum> occupied(const Determinant& d) const {
    std::vector<Momentum> out;
    for (auto k : occupied_keys(d)) out.push_back(momentum(k));
    return out;
  }

  Momentum total_momentum(const Determinant& d) const {
    Momentum total = Momentum::zero(dim());
    for (auto k : occupied_keys(d)) total += momentum(k);
    return total;
  }

  /// Builds the determinant occupying exactly `modes`; rejects repeated modes.
  Determinant determinant(std::span<const Momentum> modes) const {
    std::vector<ModeKey> keys;
    keys.reserve(modes.size());
    for (const auto& m : modes) {
      if (m.dim() != dim()) throw std::invalid_argument("FermiSea::determinant: dimension mismatch");
      keys.push_back(m.key());
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
      throw std::invalid_argument("FermiSea::determinant: repeated momentum violates Pauli exclusion");
    }
    Determinant d;
    std::set_difference(ball_keys_.begin(), ball_keys_.end(), keys.begin(), keys.end(), std::back_inserter(d.holes));
    for (auto k : keys) {
      if (!inside(k)) d.particles.push_back(k);
    }
    return d;
  }

  std::optional<SignedDeterminant> annihilate(const Determinant& d, ModeKey k) const {
    if (!occupied(d, k)) return std::nullopt;
    const int sign = (count_before(d, k) % 2 == 0) ? 1 : -1;
    Determinant out = d;
    remove_mode(out, k);
    return SignedDeterminant{std::move(out), sign};
  }

  std::optional<SignedDeterminant> create(const Determinant& d, ModeKey k) const {
    if (occupied(d, k)) return std::nullopt;
    const int sign = (count_before(d, k) % 2 == 0) ? 1 : -1;
    Determinant out = d;
    add_mode(out, k);
    return SignedDeterminant{std::move(out), sign};
  }

  /// a_to^* a_from.
  std::optional<SignedDeterminant> hop(const Determinant& d, ModeKey to, ModeKey from) const {
    if (!occupied(d, from)) return std::nullopt;
    if (to == from) return SignedDeterminant{d, 1};
    if (occupied(d, to)) return std::nullopt;
    std::size_t swaps = count_before(d, from);
    Determinant out = d;
    remove_mode(out, from);
    swaps += count_before(out, to);
    add_mode(out, to);
    return SignedDeterminant{std::move(out), swaps % 2 == 0 ? 1 : -1};
  }

 private:
  static void insert_sorted(std::vector<ModeKey>& v, ModeKey k) {
    v.insert(std::lower_bound(v.begin(), v.end(), k), k);
  }
  static void erase_sorted(std::vector<ModeKey>& v, ModeKey k) {
    v.erase(std::lower_bound(v.begin(), v.end(), k));
  }
  void remove_mode(Determinant& d, ModeKey k) const {
    if (inside(k)) {
      insert_sorted(d.holes, k);
    } else {
      erase_sorted(d.particles, k);
    }
  }
  void add_mode(Determinant& d, ModeKey k) const {
    if (inside(k)) {
      erase_sorted(d.holes, k);
    } else {
      insert_sorted(d.particles, k);
    }
  }

  GasConfig config_;
  std::vector<Momentum> ball_;
  std::vector<ModeKey> ball_keys_;
  double kinetic_sum_ = 0.0;
};

/// The particle number shared by every term, or nullopt for the zero vector.
/// Throws if the terms mix particle numbers.
inline std::optional<std::size_t> particle_number(const FermiSea& sea, const FermionVector& v) {
  std::optional<std::size_t> n;
  for (const auto& [d, c] : v.terms()) {
    const auto m = sea.particle_number(d);
    if (n && *n != m) throw std::logic_error("FermionVector mixes particle numbers");
    n = m;
  }
  return n;
}

}  // namespace bosonlab
