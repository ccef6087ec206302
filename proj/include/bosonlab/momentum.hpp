#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bosonlab {

inline constexpr int kMaxDim = 4;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Order-preserving 64-bit encoding of a lattice momentum.
///
/// Layout: bits 32..63 hold the squared norm, bits 0..31 hold up to four
/// components biased by 128, most significant component first. Comparing keys
/// as integers therefore reproduces the global mode order
/// (|n|^2, n_1, ..., n_d). Components must lie in [-128, 127].
using ModeKey = std::uint64_t;

inline constexpr std::uint64_t norm2_of(ModeKey key) noexcept { return key >> 32; }

/// Integer lattice vector n; the physical momentum is 2*pi*n.
class Momentum {
 public:
  Momentum() = default;

  Momentum(std::initializer_list<int> components) {
    if (components.size() == 0 || components.size() > kMaxDim) {
      throw std::invalid_argument("Momentum: dimension must be in [1, 4]");
    }
    dim_ = static_cast<int>(components.size());
    int i = 0;
    for (int c : components) c_[i++] = c;
  }

  static Momentum zero(int dim) {
    check_dim(dim);
    Momentum m;
    m.dim_ = dim;
    return m;
  }

  static Momentum unit(int dim, int axis, int sign = 1) {
    Momentum m = zero(dim);
    if (axis < 0 || axis >= dim) throw std::out_of_range("Momentum::unit: axis");
    m.c_[axis] = sign;
    return m;
  }

  template <class Range>
  static Momentum from_range(const Range& r) {
    Momentum m;
    int i = 0;
    for (auto c : r) {
      if (i < kMaxDim) m.c_[i] = static_cast<int>(c);
      ++i;
    }
    check_dim(i);
    m.dim_ = i;
    return m;
  }

  static Momentum from_key(ModeKey key, int dim) {
    check_dim(dim);
    Momentum m;
    m.dim_ = dim;
    for (int i = 0; i < kMaxDim; ++i) {
      const int shift = 8 * (kMaxDim - 1 - i);
      const int c = static_cast<int>((key >> shift) & 0xFFu) - 128;
      if (i < dim) {
        m.c_[i] = c;
      } else if (c != 0) {
        throw std::invalid_argument("Momentum::from_key: key has components beyond dim");
      }
    }
    return m;
  }

  int dim() const noexcept { return dim_; }
  int operator[](int i) const noexcept { return c_[i]; }
  const std::array<int, kMaxDim>& components() const noexcept { return c_; }

  long norm2() const noexcept {
    long s = 0;
    for (int i = 0; i < dim_; ++i) s += static_cast<long>(c_[i]) * c_[i];
    return s;
  }
  /// |n| in lattice units.
  double norm() const { return std::sqrt(static_cast<double>(norm2())); }
  /// |2*pi*n|.
  double physical_norm() const { return kTwoPi * norm(); }
  bool is_zero() const noexcept { return norm2() == 0; }

  ModeKey key() const {
    ModeKey k = static_cast<ModeKey>(norm2()) << 32;
    for (int i = 0; i < kMaxDim; ++i) {
      const int c = c_[i];
      if (c < -128 || c > 127) throw std::out_of_range("Momentum::key: component out of [-128, 127]");
      k |= static_cast<ModeKey>(c + 128) << (8 * (kMaxDim - 1 - i));
    }
    return k;
  }

  Momentum operator-() const {
    Momentum m = *this;
    for (int i = 0; i < dim_; ++i) m.c_[i] = -m.c_[i];
    return m;
  }
  Momentum& operator+=(const Momentum& o) {
    same_dim(o);
    for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Momentum& operator-=(const Momentum& o) {
    same_dim(o);
    for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Momentum& operator*=(int s) {
    for (int i = 0; i < dim_; ++i) c_[i] *= s;
    return *this;
  }
  friend Momentum operator+(Momentum a, const Momentum& b) { return a += b; }
  friend Momentum operator-(Momentum a, const Momentum& b) { return a -= b; }
  friend Momentum operator*(int s, Momentum a) { return a *= s; }

  friend bool operator==(const Momentum& a, const Momentum& b) noexcept {
    return a.dim_ == b.dim_ && a.c_ == b.c_;
  }
  /// Global mode order: (|n|^2, n_1, ..., n_d).
  friend std::strong_ordering operator<=>(const Momentum& a, const Momentum& b) noexcept {
    if (auto c = a.norm2() <=> b.norm2(); c != 0) return c;
    if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
    for (int i = 0; i < a.dim_; ++i) {
      if (auto c = a.c_[i] <=> b.c_[i]; c != 0) return c;
    }
    return std::strong_ordering::equal;
  }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < dim_; ++i) {
      if (i) s += ',';
      s += std::to_string(c_[i]);
    }
    return s + ")";
  }

 private:
  static void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Momentum: dimension must be in [1, 4]");
  }
  void same_dim(const Momentum& o) const {
    if (o.dim_ != dim_) throw std::invalid_argument("Momentum: dimension mismatch");
  }

  std::array<int, kMaxDim> c_{};
  int dim_ = 0;
};

}  // namespace bosonlab

template <>
struct std::hash<bosonlab::Momentum> {
  std::size_t operator()(const bosonlab::Momentum& m) const noexcept {
    std::size_t h = static_cast<std::size_t>(m.dim());
    for (int i = 0; i < m.dim(); ++i) {
      h ^= std::hash<int>{}(m[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};
