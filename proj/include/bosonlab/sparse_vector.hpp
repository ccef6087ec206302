#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bosonlab {

using Complex = std::complex<double>;

/// Amplitudes with |c| * sqrt(gram) <= kDropTolerance * norm are discarded when
/// a vector is assembled.
inline constexpr double kDropTolerance = 1e-14;

/// Sparse linear combination over an orthogonal basis. Terms are kept sorted by
/// basis element so that iteration and floating-point summation order are
/// deterministic. The basis type supplies `basis_gram(b)`, the squared norm of
/// the (possibly unnormalized) basis element, found by ADL.
template <class Basis>
class SparseVector {
 public:
  using Term = std::pair<Basis, Complex>;

  SparseVector() = default;

  static SparseVector basis(Basis b, Complex c = 1.0) {
    SparseVector v;
    if (c != Complex{}) v.terms_.emplace_back(std::move(b), c);
    return v;
  }

  /// Takes terms in any order; merges duplicates and drops negligible amplitudes.
  static SparseVector from_terms(std::vector<Term> terms, double drop_tolerance = kDropTolerance) {
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.first < b.first; });
    SparseVector v;
    for (auto& t : terms) {
      if (!v.terms_.empty() && v.terms_.back().first == t.first) {
        v.terms_.back().second += t.second;
      } else {
        v.terms_.push_back(std::move(t));
      }
    }
    v.prune(drop_tolerance);
    return v;
  }

  const std::vector<Term>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }

  Complex coefficient(const Basis& b) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), b,
                               [](const Term& t, const Basis& key) { return t.first < key; });
    return (it != terms_.end() && it->first == b) ? it->second : Complex{};
  }

  double norm2() const {
    double s = 0.0;
    for (const auto& [b, c] : terms_) s += std::norm(c) * basis_gram(b);
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }

  /// <a|b>, antilinear in the first argument.
  friend Complex inner(const SparseVector& a, const SparseVector& b) {
    Complex s{};
    auto ia = a.terms_.begin();
    auto ib = b.terms_.begin();
    while (ia != a.terms_.end() && ib != b.terms_.end()) {
      if (ia->first < ib->first) {
        ++ia;
      } else if (ib->first < ia->first) {
        ++ib;
      } else {
        s += std::conj(ia->second) * ib->second * basis_gram(ia->first);
        ++ia;
        ++ib;
      }
    }
    return s;
  }

  SparseVector& operator*=(Complex s) {
    if (s == Complex{}) {
      terms_.clear();
      return *this;
    }
    for (auto& t : terms_) t.second *= s;
    return *this;
  }
  friend SparseVector operator*(Complex s, SparseVector v) { return v *= s; }
  friend SparseVector operator*(double s, SparseVector v) { return v *= Complex(s); }

  friend SparseVector axpy(Complex alpha, const SparseVector& x, const SparseVector& y) {
    SparseVector out;
    out.terms_.reserve(x.terms_.size() + y.terms_.size());
    auto ix = x.terms_.begin();
    auto iy = y.terms_.begin();
    while (ix != x.terms_.end() || iy != y.terms_.end()) {
      if (iy == y.terms_.end() || (ix != x.terms_.end() && ix->first < iy->first)) {
        out.terms_.emplace_back(ix->first, alpha * ix->second);
        ++ix;
      } else if (ix == x.terms_.end() || iy->first < ix->first) {
        out.terms_.push_back(*iy);
        ++iy;
      } else {
        out.terms_.emplace_back(ix->first, alpha * ix->second + iy->second);
        ++ix;
        ++iy;
      }
    }
    out.prune(kDropTolerance);
    return out;
  }
  friend SparseVector operator+(const SparseVector& a, const SparseVector& b) { return axpy(1.0, a, b); }
  friend SparseVector operator-(const SparseVector& a, const SparseVector& b) { return axpy(-1.0, b, a); }
  SparseVector& operator+=(const SparseVector& o) { return *this = *this + o; }
  SparseVector& operator-=(const SparseVector& o) { return *this = *this - o; }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  void prune(double drop_tolerance) {
    const double cut = drop_tolerance * norm();
    std::erase_if(terms_, [&](const Term& t) {
      return t.second == Complex{} || std::abs(t.second) * std::sqrt(basis_gram(t.first)) <= cut;
    });
  }

  std::vector<Term> terms_;
};

/// Hash-map accumulator used while applying operators; `finish` produces the
/// canonical sorted vector.
template <class Basis, class Hash = std::hash<Basis>>
class Accumulator {
 public:
  void add(const Basis& b, Complex c) {
    if (c != Complex{}) map_[b] += c;
  }
  void add(Basis&& b, Complex c) {
    if (c != Complex{}) map_[std::move(b)] += c;
  }
  void add(const SparseVector<Basis>& v, Complex scale = 1.0) {
    for (const auto& [b, c] : v.terms()) add(b, scale * c);
  }
  void reserve(std::size_t n) { map_.reserve(n); }

  SparseVector<Basis> finish(double drop_tolerance = kDropTolerance) && {
    std::vector<typename SparseVector<Basis>::Term> terms;
    terms.reserve(map_.size());
    for (auto& [b, c] : map_) terms.emplace_back(b, c);
    map_.clear();
    return SparseVector<Basis>::from_terms(std::move(terms), drop_tolerance);
  }

 private:
  std::unordered_map<Basis, Complex, Hash> map_;
};

}  // namespace bosonlab
