#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace bosonlab {

class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EigenOptions {
  double tolerance = 1e-9;        ///< residual ||Ax - θx|| relative to max(1, |θ|)
  int max_restarts = 500;
  int krylov_dim = 40;
  int keep = 8;                   ///< Ritz vectors retained across a restart
  std::size_t dense_below = 2000; ///< dense diagonalization below this dimension
  std::size_t dim_limit = 500000;
  bool force_iterative = false;
  std::uint64_t seed = 7;
};

struct EigenResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
  int matvecs = 0;
  int restarts = 0;
  std::string method;
};

inline EigenResult lowest_eigenpair_dense(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) throw std::invalid_argument("lowest_eigenpair_dense: empty matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw ConvergenceFailure("dense eigensolver failed");
  EigenResult r;
  r.value = es.eigenvalues()(0);
  r.vector = es.eigenvectors().col(0);
  r.residual = (a * r.vector - r.value * r.vector).norm();
  r.method = "dense";
  return r;
}

/// Lowest eigenpair of a symmetric operator given as y = A x.
///
/// Thick-restart Lanczos with full reorthogonalization: the projected matrix
/// T = V^T A V is built explicitly column by column, and on restart the `keep`
/// lowest Ritz vectors plus the normalized residual direction seed the next
/// cycle.
template <class MatVec>
EigenResult lowest_eigenpair_iterative(MatVec&& apply, Eigen::Index n, const EigenOptions& opt,
                                       const Eigen::VectorXd* start = nullptr) {
  using Eigen::Index;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  if (n <= 0) throw std::invalid_argument("lowest_eigenpair_iterative: empty operator");

  const Index m = std::min<Index>(std::max(opt.krylov_dim, 2), n);
  const Index keep = std::clamp<Index>(opt.keep, 1, std::max<Index>(m - 1, 1));

  MatrixXd basis(n, m);
  MatrixXd proj = MatrixXd::Zero(m, m);
  VectorXd w(n);

  if (start && start->size() == n && start->norm() > 0) {
    basis.col(0) = *start / start->norm();
  } else {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss;
    for (Index i = 0; i < n; ++i) basis(i, 0) = gauss(rng);
    basis.col(0).normalize();
  }

  EigenResult result;
  result.method = "lanczos";
  Index first = 0;
  for (int restart = 0;; ++restart) {
    Index filled = m;
    double beta = 0.0;
    for (Index j = first; j < m; ++j) {
      apply(basis.col(j), w);
      ++result.matvecs;
      const double w0 = w.norm();
      for (int pass = 0; pass < 2; ++pass) {
        const VectorXd h = basis.leftCols(j + 1).transpose() * w;
        w.noalias() -= basis.leftCols(j + 1) * h;
        proj.col(j).head(j + 1) += h;
      }
      proj.row(j).head(j + 1) = proj.col(j).head(j + 1).transpose();
      beta = w.norm();
      if (beta <= 1e-13 * std::max(w0, 1e-300)) {
        filled = j + 1;
        beta = 0.0;
        break;
      }
      if (j + 1 < m) basis.col(j + 1) = w / beta;
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(proj.topLeftCorner(filled, filled));
    const double theta = es.eigenvalues()(0);
    const double est = beta * std::abs(es.eigenvectors()(filled - 1, 0));
    const bool exact = filled < m || m == n;
    if (exact || est <= opt.tolerance * std::max(1.0, std::abs(theta))) {
      result.value = theta;
      result.vector = basis.leftCols(filled) * es.eigenvectors().col(0);
      result.vector.normalize();
      VectorXd ax(n);
      apply(result.vector, ax);
      ++result.matvecs;
      result.residual = (ax - theta * result.vector).norm();
      result.restarts = restart;
      return result;
    }
    if (restart >= opt.max_restarts) {
      throw ConvergenceFailure("Lanczos: no convergence after " + std::to_string(restart) +
                               " restarts (residual estimate " + std::to_string(est) + ")");
    }
    const MatrixXd kept = basis * es.eigenvectors().leftCols(keep);
    basis.leftCols(keep) = kept;
    basis.col(keep) = w / beta;
    proj.setZero();
    for (Index i = 0; i < keep; ++i) proj(i, i) = es.eigenvalues()(i);
    first = keep;
  }
}

}  // namespace bosonlab
