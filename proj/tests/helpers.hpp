#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>
#include <random>

#include <Eigen/Core>

#include "decov/common.hpp"
#include "decov/factorgraph.hpp"

namespace testing {

inline double max_abs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Random valid distribution on {2..max_degree} with `points` support points.
inline decov::DegreeDistribution random_degree(int max_degree, int points, std::uint64_t seed) {
  decov::Rng rng = decov::make_rng(seed, 77);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<int> slots;
  for (int k = 2; k <= max_degree; ++k) slots.push_back(k);
  std::shuffle(slots.begin(), slots.end(), rng);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(max_degree);
  for (int i = 0; i < points && i < static_cast<int>(slots.size()); ++i) w[slots[i] - 1] = u(rng);
  w /= w.sum();
  return decov::DegreeDistribution(w);
}

}  // namespace testing
