#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace decov {

/// Linear Gaussian SEM on a DAG: x_i = sum_j W(j, i) x_j + z_i, z_i ~ N(0, noise_var).
struct Gbn {
  Eigen::MatrixXd weights;  // weights(i, j): edge i -> j
  double noise_var = 1.0;

  Eigen::Index size() const { return weights.rows(); }
  Eigen::Index edge_count() const;
};

/// Columns are samples; rows are coordinates.
using SampleSet = Eigen::MatrixXd;

struct MeasurementSystem {
  Eigen::SparseMatrix<double> sensing;  // d x p
  double noise_std = 0.0;
};

/// Kahn topological order, or nullopt when the weighted graph has a cycle.
std::optional<std::vector<Eigen::Index>> topological_order(const Eigen::MatrixXd& weights);

/// Erdos-Renyi DAG under a uniformly random node order. Edge weights are
/// +/- weight_magnitude with equal probability.
Gbn gen_er_dag(Eigen::Index p, double edge_prob, double weight_magnitude, std::uint64_t seed,
               double noise_var = 1.0);

/// noise_var * (I - W^T)^{-1} (I - W^T)^{-T}.
Eigen::MatrixXd true_covariance(const Gbn& g);

SampleSet simulate_sem(const Gbn& g, Eigen::Index n, std::uint64_t seed);

/// y_k = A x_k + n_k with n_k ~ N(0, noise_std^2 I).
SampleSet measure(const MeasurementSystem& ms, const SampleSet& xs, std::uint64_t seed);

/// (1/N) sum_k y_k y_k^T; `centered` subtracts the sample mean first.
Eigen::MatrixXd sample_covariance(const SampleSet& ys, bool centered = false);

}  // namespace decov
