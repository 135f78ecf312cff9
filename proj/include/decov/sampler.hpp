#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/SparseCore>

#include "decov/factorgraph.hpp"

namespace decov {

/// Sparse d x p sensing matrix. Designed matrices carry entries +/- norm_const^{-1/2};
/// the unsigned baseline carries +1 entries with norm_const = 1.
struct SensingMatrix {
  Eigen::SparseMatrix<double> entries;
  double norm_const = 1.0;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
  Eigen::Index nnz() const { return entries.nonZeros(); }
};

/// Configuration-model sample: column degrees from lambda, row degrees from rho,
/// repaired to equal stub counts, duplicate placements re-paired, fair random signs.
/// norm_const defaults to the mean column degree of lambda.
SensingMatrix sample_sensing_matrix(const DegreeDistribution& lambda, const DegreeDistribution& rho,
                                    Eigen::Index d, Eigen::Index p,
                                    std::optional<double> norm_const, std::uint64_t seed);

/// [A_H | A_L]: the first n_h columns follow lambda_h, the rest lambda_l. Every row
/// places rho_h-distributed nonzeros in the high block and rho_l-distributed ones in
/// the low block. The high block is drawn exactly as sample_sensing_matrix(lambda_h,
/// rho_h, d, n_h, A, seed) would; the low block uses an independent stream.
SensingMatrix sample_preferential_matrix(const DegreeDistribution& lambda_h,
                                         const DegreeDistribution& lambda_l,
                                         const DegreeDistribution& rho_h,
                                         const DegreeDistribution& rho_l, Eigen::Index d,
                                         Eigen::Index n_h, Eigen::Index n_l,
                                         std::optional<double> norm_const, std::uint64_t seed);

/// Each column gets exactly delta ones in distinct uniformly chosen rows.
SensingMatrix baseline_left_regular(int delta, Eigen::Index d, Eigen::Index p, std::uint64_t seed);

/// Number of nonzeros in each row / column.
Eigen::VectorXi row_degrees(const SensingMatrix& a);
Eigen::VectorXi col_degrees(const SensingMatrix& a);

}  // namespace decov
