#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "decov/recovery.hpp"

namespace decov {

struct WeightedEdge {
  Eigen::Index parent = 0;
  Eigen::Index child = 0;
  double weight = 0.0;

  bool operator==(const WeightedEdge&) const = default;
};

struct GraphEstimate {
  std::vector<WeightedEdge> edges;
  std::vector<Eigen::Index> order;  // elimination order, terminal nodes first

  /// Dense weighted adjacency W with W(parent, child) = weight.
  Eigen::MatrixXd adjacency(Eigen::Index p) const;
};

/// {j != i : |omega(i, j)| > zero_tol}, ascending.
std::vector<Eigen::Index> markov_blanket(const Eigen::MatrixXd& omega, Eigen::Index i, double zero_tol);

/// Coefficients of the regression of x_i on x_mb; zero outside mb.
Eigen::VectorXd regression_coeffs(const Eigen::MatrixXd& sigma, Eigen::Index i,
                                  const std::vector<Eigen::Index>& mb);

/// r_i = max_{j in mb_i} |omega(i, j) / theta_i(j)|, 0 for an empty blanket and +inf when
/// some theta_i(j) vanishes. Column i of `thetas` holds theta_i.
double terminal_score(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& thetas, Eigen::Index i,
                      const std::vector<Eigen::Index>& mb);

/// Candidate with the smallest finite score (ties: smallest index).
Eigen::Index find_terminal(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& thetas,
                           const std::vector<std::vector<Eigen::Index>>& blankets,
                           const std::vector<Eigen::Index>& candidates);

/// Deletes row and column v.
Eigen::MatrixXd marginalize(const Eigen::MatrixXd& sigma, Eigen::Index v);

enum class PrecisionUpdate { inverse, clime };

struct StructureConfig {
  /// Blanket threshold relative to max|Omega| of the current round...
  double zero_tol_rel = 1e-3;
  /// ...unless an absolute threshold is given.
  std::optional<double> zero_tol_abs;
  PrecisionUpdate recompute = PrecisionUpdate::inverse;
  ClimeConfig clime;
};

GraphEstimate recover_structure(const Eigen::MatrixXd& sigma_hat, const Eigen::MatrixXd& omega_hat,
                                const StructureConfig& cfg = {});

}  // namespace decov
