#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bosonlab/lattice.hpp"
#include "bosonlab/momentum.hpp"

namespace bosonlab {

struct PotentialViolation {
  enum class Kind { parse, dimension, duplicate, symmetry, positivity };
  Kind kind;
  Momentum k;  ///< offending momentum (unset for parse errors)
  std::string message;
};

inline const char* to_string(PotentialViolation::Kind kind) {
  switch (kind) {
    case PotentialViolation::Kind::parse: return "parse";
    case PotentialViolation::Kind::dimension: return "dimension";
    case PotentialViolation::Kind::duplicate: return "duplicate";
    case PotentialViolation::Kind::symmetry: return "symmetry";
    case PotentialViolation::Kind::positivity: return "positivity";
  }
  return "unknown";
}

class PotentialError : public std::runtime_error {
 public:
  explicit PotentialError(std::vector<PotentialViolation> violations)
      : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}
  const std::vector<PotentialViolation>& violations() const noexcept { return violations_; }

 private:
  static std::string summarize(const std::vector<PotentialViolation>& v) {
    std::string s = "invalid potential:";
    for (const auto& x : v) s += "\n  [" + std::string(to_string(x.kind)) + "] " + x.message;
    return s;
  }
  std::vector<PotentialViolation> violations_;
};

/// Finitely supported Fourier coefficients v̂(k) of a real, even two-body
/// potential of positive type: v̂(k) = v̂(-k) >= 0 for k != 0, v̂(0) arbitrary.
class Potential {
 public:
  using Coefficients = std::map<Momentum, double>;

  Potential() = default;

  /// Validates and stores the coefficients; throws PotentialError listing
  /// every violated k.
  Potential(int dim, Coefficients coefficients) : dim_(dim), coeffs_(std::move(coefficients)) {
    auto v = violations(dim_, coeffs_);
    if (!v.empty()) throw PotentialError(std::move(v));
    for (auto it = coeffs_.begin(); it != coeffs_.end();) {
      it = (it->second == 0.0) ? coeffs_.erase(it) : std::next(it);
    }
  }

  static std::vector<PotentialViolation> violations(int dim, const Coefficients& c) {
    std::vector<PotentialViolation> out;
    for (const auto& [k, value] : c) {
      if (k.dim() != dim) {
        out.push_back({PotentialViolation::Kind::dimension, k,
                       "k = " + k.str() + " has dimension " + std::to_string(k.dim()) + ", expected " +
                           std::to_string(dim)});
        continue;
      }
      if (!std::isfinite(value)) {
        out.push_back({PotentialViolation::Kind::parse, k, "v̂" + k.str() + " is not finite"});
        continue;
      }
      if (!k.is_zero() && value < 0.0) {
        out.push_back({PotentialViolation::Kind::positivity, k,
                       "v̂" + k.str() + " = " + std::to_string(value) + " is negative"});
      }
      if (k.is_zero()) continue;
      const Momentum mk = -k;
      auto partner = c.find(mk);
      if (partner == c.end()) {
        if (value != 0.0) {
          out.push_back({PotentialViolation::Kind::symmetry, mk,
                         "v̂" + mk.str() + " is missing but v̂" + k.str() + " = " + std::to_string(value)});
        }
      } else if (partner->second != value && k < mk) {
        out.push_back({PotentialViolation::Kind::symmetry, mk,
                       "v̂" + mk.str() + " = " + std::to_string(partner->second) + " differs from v̂" + k.str() +
                           " = " + std::to_string(value)});
      }
    }
    return out;
  }

  int dim() const noexcept { return dim_; }
  const Coefficients& coefficients() const noexcept { return coeffs_; }
  bool is_zero() const noexcept { return coeffs_.empty(); }

  double operator()(const Momentum& k) const {
    auto it = coeffs_.find(k);
    return it == coeffs_.end() ? 0.0 : it->second;
  }

  /// ∫ v = v̂(0).
  double integral() const {
    return dim_ == 0 ? 0.0 : (*this)(Momentum::zero(dim_));
  }
  /// v(0) = Σ_k v̂(k).
  double value_at_origin() const {
    double s = 0.0;
    for (const auto& [k, v] : coeffs_) s += v;
    return s;
  }
  /// Σ_k |k| v̂(k) in physical units.
  double gradient_weight() const {
    double s = 0.0;
    for (const auto& [k, v] : coeffs_) s += k.physical_norm() * std::abs(v);
    return s;
  }

  /// Support excluding k = 0, in the global mode order.
  std::vector<Momentum> nonzero_support() const {
    std::vector<Momentum> out;
    for (const auto& [k, v] : coeffs_) {
      if (!k.is_zero()) out.push_back(k);
    }
    return out;
  }

 private:
  int dim_ = 0;
  Coefficients coeffs_;
};

/// v̂ = value on the 2d unit vectors ±e_i, zero elsewhere.
inline Potential unit_mode_potential(int dim, double value = 1.0, double at_zero = 0.0) {
  Potential::Coefficients c;
  for (int i = 0; i < dim; ++i) {
    c[Momentum::unit(dim, i, +1)] = value;
    c[Momentum::unit(dim, i, -1)] = value;
  }
  if (at_zero != 0.0) c[Momentum::zero(dim)] = at_zero;
  return Potential(dim, std::move(c));
}

struct TruncatedPotential {
  Potential potential;
  /// Σ |k| v̂(k) over cutoff < |k|^2 <= tail_radius_sq (physical units).
  double discarded_weight = 0.0;
};

/// Restricts an infinite coefficient family to |k|^2 <= cutoff_radius_sq and
/// reports the gradient weight that was dropped up to tail_radius_sq.
inline TruncatedPotential truncate_potential(int dim, const std::function<double(const Momentum&)>& family,
                                             long cutoff_radius_sq, long tail_radius_sq) {
  Potential::Coefficients c;
  double dropped = 0.0;
  for (const auto& k : lattice_ball(dim, std::max(cutoff_radius_sq, tail_radius_sq))) {
    const double v = family(k);
    if (k.norm2() <= cutoff_radius_sq) {
      if (v != 0.0) c[k] = v;
    } else {
      dropped += k.physical_norm() * std::abs(v);
    }
  }
  return {Potential(dim, std::move(c)), dropped};
}

/// Text format: '#' starts a comment; the first record is `dim <d>`; every
/// further record is `n_1 ... n_d value`.
inline Potential parse_potential(std::istream& in) {
  std::vector<PotentialViolation> errs;
  Potential::Coefficients coeffs;
  int dim = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (dim == 0) {
      if (tok.size() != 2 || tok[0] != "dim") {
        errs.push_back({PotentialViolation::Kind::parse, {}, where + "expected `dim <d>` header"});
        break;
      }
      try {
        dim = std::stoi(tok[1]);
      } catch (const std::exception&) {
        dim = 0;
      }
      if (dim < 1 || dim > kMaxDim) {
        errs.push_back({PotentialViolation::Kind::parse, {}, where + "dimension must be in [1, 4]"});
        break;
      }
      continue;
    }
    if (tok.size() != static_cast<std::size_t>(dim) + 1) {
      errs.push_back({PotentialViolation::Kind::parse, {},
                      where + "expected " + std::to_string(dim) + " integers and a value"});
      continue;
    }
    try {
      std::vector<int> comps;
      for (int i = 0; i < dim; ++i) {
        std::size_t pos = 0;
        comps.push_back(std::stoi(tok[i], &pos));
        if (pos != tok[i].size()) throw std::invalid_argument("trailing characters");
      }
      std::size_t pos = 0;
      const double value = std::stod(tok[dim], &pos);
      if (pos != tok[dim].size()) throw std::invalid_argument("trailing characters");
      const Momentum k = Momentum::from_range(comps);
      if (!coeffs.emplace(k, value).second) {
        errs.push_back({PotentialViolation::Kind::duplicate, k, where + "duplicate entry for k = " + k.str()});
      }
    } catch (const std::exception&) {
      errs.push_back({PotentialViolation::Kind::parse, {}, where + "malformed record"});
    }
  }
  if (dim == 0 && errs.empty()) errs.push_back({PotentialViolation::Kind::parse, {}, "missing `dim <d>` header"});
  if (!errs.empty()) throw PotentialError(std::move(errs));
  auto inv = Potential::violations(dim, coeffs);
  if (!inv.empty()) throw PotentialError(std::move(inv));
  return Potential(dim, std::move(coeffs));
}

inline Potential load_potential(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PotentialError({{PotentialViolation::Kind::parse, {}, "cannot open " + path}});
  return parse_potential(in);
}

inline void write_potential(std::ostream& out, const Potential& pot) {
  out << "dim " << pot.dim() << '\n';
  out.precision(17);
  for (const auto& [k, v] : pot.coefficients()) {
    for (int i = 0; i < k.dim(); ++i) out << k[i] << ' ';
    out << v << '\n';
  }
}

}  // namespace bosonlab
