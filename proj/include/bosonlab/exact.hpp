#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bosonlab/eigensolver.hpp"
#include "bosonlab/operators.hpp"

namespace bosonlab {

class DimensionLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sector {
  std::size_t particles;
  Momentum total_momentum;
  long cutoff_radius_sq;  ///< modes with |p|^2 <= cutoff (lattice units)
};

/// N-particle determinants over the modes of a ball with fixed total momentum,
/// in lexicographic order of their sorted mode lists.
class SectorBasis {
 public:
  SectorBasis(const FermiSea& sea, const Sector& sector, std::size_t dim_limit) {
    if (sector.total_momentum.dim() != sea.dim()) throw std::invalid_argument("sector momentum has wrong dimension");
    const auto modes = lattice_ball(sea.dim(), sector.cutoff_radius_sq);
    const int reach = static_cast<int>(detail::isqrt(sector.cutoff_radius_sq));
    std::vector<std::size_t> chosen;
    std::vector<int> sum(sea.dim(), 0);
    const std::size_t n = sector.particles;

    auto recurse = [&](auto&& self, std::size_t next) -> void {
      const std::size_t left = n - chosen.size();
      if (left == 0) {
        for (int i = 0; i < sea.dim(); ++i) {
          if (sum[i] != sector.total_momentum[i]) return;
        }
        std::vector<Momentum> occ;
        occ.reserve(n);
        for (auto c : chosen) occ.push_back(modes[c]);
        if (dets_.size() >= dim_limit) {
          throw DimensionLimitExceeded("sector dimension exceeds limit " + std::to_string(dim_limit));
        }
        dets_.push_back(sea.determinant(occ));
        return;
      }
      for (int i = 0; i < sea.dim(); ++i) {
        if (std::abs(sector.total_momentum[i] - sum[i]) > static_cast<int>(left) * reach) return;
      }
      for (std::size_t j = next; j + left <= modes.size(); ++j) {
        chosen.push_back(j);
        for (int i = 0; i < sea.dim(); ++i) sum[i] += modes[j][i];
        self(self, j + 1);
        for (int i = 0; i < sea.dim(); ++i) sum[i] -= modes[j][i];
        chosen.pop_back();
      }
    };
    recurse(recurse, 0);
    index_.reserve(dets_.size());
    for (std::size_t i = 0; i < dets_.size(); ++i) index_.emplace(dets_[i], i);
  }

  std::size_t size() const noexcept { return dets_.size(); }
  const std::vector<Determinant>& determinants() const noexcept { return dets_; }
  std::optional<std::size_t> find(const Determinant& d) const {
    auto it = index_.find(d);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  FermionVector expand(const Eigen::VectorXd& x) const {
    std::vector<FermionVector::Term> terms;
    terms.reserve(dets_.size());
    for (std::size_t i = 0; i < dets_.size(); ++i) terms.emplace_back(dets_[i], Complex(x(static_cast<Eigen::Index>(i))));
    return FermionVector::from_terms(std::move(terms));
  }

 private:
  std::vector<Determinant> dets_;
  std::unordered_map<Determinant, std::size_t, DeterminantHash> index_;
};

/// Galerkin projection of a real operator onto the sector basis.
inline Eigen::SparseMatrix<double> project(const FermiSea& sea, const OperatorSpec& spec, const SectorBasis& basis) {
  std::vector<Eigen::Triplet<double>> entries;
  const auto& dets = basis.determinants();
  for (std::size_t j = 0; j < dets.size(); ++j) {
    const FermionVector out = apply_operator(sea, spec, FermionVector::basis(dets[j]));
    for (const auto& [det, amp] : out.terms()) {
      if (auto i = basis.find(det)) {
        entries.emplace_back(static_cast<int>(*i), static_cast<int>(j), amp.real());
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(dets.size());
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

struct GroundState {
  double energy = 0.0;
  FermionVector vector;
  std::size_t dimension = 0;
  std::string method;
  double residual = 0.0;
  int matvecs = 0;
};

/// Lowest eigenpair of `spec` restricted to the truncated sector. The returned
/// vector is normalized with its largest-magnitude amplitude positive.
inline GroundState ground_state(const FermiSea& sea, const OperatorSpec& spec, const Sector& sector,
                                const EigenOptions& options = {}) {
  const SectorBasis basis(sea, sector, options.dim_limit);
  if (basis.size() == 0) throw std::invalid_argument("ground_state: empty sector");
  const Eigen::SparseMatrix<double> h = project(sea, spec, basis);

  EigenResult r;
  if (!options.force_iterative && basis.size() < options.dense_below) {
    r = lowest_eigenpair_dense(Eigen::MatrixXd(h));
  } else {
    r = lowest_eigenpair_iterative(
        [&](const auto& x, Eigen::VectorXd& y) { y.noalias() = h * x; }, h.rows(), options);
    if (r.residual > options.tolerance * std::max(1.0, std::abs(r.value)) * 10) {
      throw ConvergenceFailure("ground_state: residual " + std::to_string(r.residual) + " above tolerance");
    }
  }
  Eigen::Index imax = 0;
  r.vector.cwiseAbs().maxCoeff(&imax);
  if (r.vector(imax) < 0) r.vector = -r.vector;

  GroundState g;
  g.energy = r.value;
  g.vector = basis.expand(r.vector);
  g.dimension = basis.size();
  g.method = r.method;
  g.residual = r.residual;
  g.matvecs = r.matvecs;
  return g;
}

}  // namespace bosonlab
