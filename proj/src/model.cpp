#include "decov/model.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "decov/common.hpp"

namespace decov {

Eigen::Index Gbn::edge_count() const {
  return (weights.array() != 0.0).count();
}

std::optional<std::vector<Eigen::Index>> topological_order(const Eigen::MatrixXd& weights) {
  const Eigen::Index p = weights.rows();
  if (weights.cols() != p) throw ParameterError("adjacency must be square");
  std::vector<Eigen::Index> indegree(p, 0);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < p; ++i)
      if (weights(i, j) != 0.0) ++indegree[j];

  std::vector<Eigen::Index> order;
  order.reserve(p);
  std::vector<Eigen::Index> ready;
  for (Eigen::Index i = p - 1; i >= 0; --i)
    if (indegree[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    const Eigen::Index v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (Eigen::Index j = p - 1; j >= 0; --j) {
      if (weights(v, j) != 0.0 && --indegree[j] == 0) ready.push_back(j);
    }
  }
  if (static_cast<Eigen::Index>(order.size()) != p) return std::nullopt;
  return order;
}

Gbn gen_er_dag(Eigen::Index p, double edge_prob, double weight_magnitude, std::uint64_t seed,
               double noise_var) {
  if (p < 1) throw ParameterError("gen_er_dag: p must be >= 1");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0))
    throw ParameterError("gen_er_dag: edge probability outside [0, 1]");
  if (!(noise_var > 0.0)) throw ParameterError("gen_er_dag: noise variance must be positive");

  Rng rng = make_rng(seed);
  std::vector<Eigen::Index> order(p);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::bernoulli_distribution edge(edge_prob);
  std::bernoulli_distribution sign(0.5);
  Gbn g{Eigen::MatrixXd::Zero(p, p), noise_var};
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a + 1; b < p; ++b) {
      if (edge(rng)) {
        g.weights(order[a], order[b]) = sign(rng) ? weight_magnitude : -weight_magnitude;
      }
    }
  }
  return g;
}

Eigen::MatrixXd true_covariance(const Gbn& g) {
  if (!topological_order(g.weights)) throw StructuralError("true_covariance: graph has a cycle");
  const Eigen::Index p = g.size();
  // (I - W^T) is unit-triangular up to permutation, so the LU solve is exact enough.
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p) - g.weights.transpose();
  const Eigen::MatrixXd inv = m.partialPivLu().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd sigma = g.noise_var * inv * inv.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

SampleSet simulate_sem(const Gbn& g, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("simulate_sem: sample count must be >= 1");
  const auto order = topological_order(g.weights);
  if (!order) throw StructuralError("simulate_sem: graph has a cycle");

  const Eigen::Index p = g.size();
  Rng rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(g.noise_var));

  // Parents of each node, gathered once.
  std::vector<std::vector<std::pair<Eigen::Index, double>>> parents(p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < p; ++i)
      if (g.weights(i, j) != 0.0) parents[j].emplace_back(i, g.weights(i, j));

  SampleSet xs(p, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (const Eigen::Index v : *order) {
      double value = noise(rng);
      for (const auto& [u, w] : parents[v]) value += w * xs(u, k);
      xs(v, k) = value;
    }
  }
  return xs;
}

SampleSet measure(const MeasurementSystem& ms, const SampleSet& xs, std::uint64_t seed) {
  if (ms.sensing.cols() != xs.rows())
    throw ParameterError("measure: sensing matrix has " + std::to_string(ms.sensing.cols()) +
                         " columns but samples have dimension " + std::to_string(xs.rows()));
  if (ms.noise_std < 0.0) throw ParameterError("measure: negative noise standard deviation");

  SampleSet ys = ms.sensing * xs;
  if (ms.noise_std > 0.0) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, ms.noise_std);
    for (Eigen::Index k = 0; k < ys.cols(); ++k)
      for (Eigen::Index r = 0; r < ys.rows(); ++r) ys(r, k) += noise(rng);
  }
  return ys;
}

Eigen::MatrixXd sample_covariance(const SampleSet& ys, bool centered) {
  const Eigen::Index n = ys.cols();
  if (n < 1) throw ParameterError("sample_covariance: empty sample set");
  Eigen::MatrixXd s;
  if (centered) {
    const Eigen::VectorXd mean = ys.rowwise().mean();
    const Eigen::MatrixXd c = ys.colwise() - mean;
    s.noalias() = c * c.transpose();
  } else {
    s.noalias() = ys * ys.transpose();
  }
  s /= static_cast<double>(n);
  return 0.5 * (s + s.transpose());
}

}  // namespace decov
