#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "decov/common.hpp"
#include "decov/sampler.hpp"

namespace decov {

/// A S A^T without forming A (x) A.
template <typename SparseA, typename Dense>
Eigen::MatrixXd kron_apply(const Eigen::SparseMatrixBase<SparseA>& a,
                           const Eigen::MatrixBase<Dense>& s) {
  if (s.rows() != a.cols() || s.cols() != a.cols())
    throw ParameterError("kron_apply: S must be p x p with p = cols(A)");
  const Eigen::MatrixXd as = a.derived() * s.derived();
  return as * a.derived().transpose();
}

/// A^T R A, the adjoint of kron_apply under the trace inner product.
template <typename SparseA, typename Dense>
Eigen::MatrixXd kron_adjoint(const Eigen::SparseMatrixBase<SparseA>& a,
                             const Eigen::MatrixBase<Dense>& r) {
  if (r.rows() != a.rows() || r.cols() != a.rows())
    throw ParameterError("kron_adjoint: R must be d x d with d = rows(A)");
  const Eigen::MatrixXd atr = a.derived().transpose() * r.derived();
  return atr * a.derived();
}

struct RecoveryConfig {
  double mu = 1e-2;
  int max_iters = 5000;
  double tol = 1e-9;  // max entry change per step, relative to max(1, max entry)
  bool symmetrize = true;

  void validate() const;
};

struct CovEstimate {
  Eigen::MatrixXd sigma_hat;
  double residual = 0.0;  // ||Sigma_Y - A Sigma A^T||_F
  int iterations = 0;
  bool converged = false;
  bool input_symmetrized = false;
  std::vector<double> objective_history;  // one entry per accepted iterate
  std::vector<int> restarts;              // iterations at which momentum was reset
};

/// min 1/2 ||Sigma_Y - A Sigma A^T||_F^2 + mu ||Sigma||_1 by FISTA with monotone
/// restarts; `warm` seeds the iterate.
CovEstimate recover_covariance(const Eigen::SparseMatrix<double>& a, const Eigen::MatrixXd& sigma_y,
                               const RecoveryConfig& cfg,
                               const std::optional<Eigen::MatrixXd>& warm = std::nullopt);

inline CovEstimate recover_covariance(const SensingMatrix& a, const Eigen::MatrixXd& sigma_y,
                                      const RecoveryConfig& cfg) {
  return recover_covariance(a.entries, sigma_y, cfg);
}

/// Largest eigenvalue of A^T A by power iteration.
double gram_spectral_norm(const Eigen::SparseMatrix<double>& a, int iters = 500);

struct MuPath {
  std::vector<double> grid;     // descending
  std::vector<double> misfits;  // relative Frobenius misfit per grid point
  std::size_t chosen = 0;
  CovEstimate estimate;
};

/// Logarithmic grid from max|A^T Sigma_Y A| down by `span`; picks the largest mu whose
/// relative misfit is within target, or the smallest grid value if none is.
MuPath select_mu(const Eigen::SparseMatrix<double>& a, const Eigen::MatrixXd& sigma_y,
                 const RecoveryConfig& base, double misfit_target = 0.05, int points = 10,
                 double span = 1e-4);

struct ClimeConfig {
  double lambda = 0.1;
  /// Columns are solved by the exact LP up to this dimension, by a first-order
  /// method with support polishing above it.
  int lp_max_dim = 64;
  int max_iters = 20000;
  double tol = 1e-9;
};

struct PrecisionEstimate {
  Eigen::MatrixXd omega_hat;  // symmetrized
  Eigen::MatrixXd columns;    // column-wise solutions before symmetrization
  double infeasibility = 0.0; // max over non-flagged columns of ||Sigma theta - e_i||_inf
  std::vector<int> flagged;   // columns filled by the ridge fallback
};

PrecisionEstimate clime(const Eigen::MatrixXd& sigma_hat, const ClimeConfig& cfg);

/// Single CLIME column via the LP reformulation; nullopt when infeasible.
std::optional<Eigen::VectorXd> clime_column_lp(const Eigen::MatrixXd& sigma_hat, Eigen::Index i,
                                               double lambda);

/// Omega_ij <- whichever of Omega_ij, Omega_ji has smaller magnitude.
Eigen::MatrixXd symmetrize_min_magnitude(const Eigen::MatrixXd& m);

}  // namespace decov
