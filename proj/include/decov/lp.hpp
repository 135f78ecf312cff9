#pragma once

#include <Eigen/Core>

namespace decov {

/// min cost.x  s.t.  a_eq x = b_eq,  a_ub x <= b_ub,  x >= 0.
/// Empty constraint blocks are allowed (zero rows).
struct LinearProgram {
  Eigen::VectorXd cost;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_ub;
  Eigen::VectorXd b_ub;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  int pivots = 0;
};

/// Dense two-phase tableau simplex. Dantzig pricing, switching to Bland's rule
/// after a run of degenerate pivots, so the result is deterministic.
LpResult lp_solve(const LinearProgram& lp);

}  // namespace decov
