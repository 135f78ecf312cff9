#pragma once

#include <Eigen/Core>

namespace decov {

struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // normalized to sum to one
};

/// Nodes/weights for E[f(Z)], Z ~ N(0, 1) (probabilists' Gauss-Hermite).
QuadratureRule gauss_hermite(int n);

/// Nodes/weights for E[f(T)], T ~ Exp(1) (Gauss-Laguerre).
QuadratureRule gauss_laguerre(int n);

}  // namespace decov
