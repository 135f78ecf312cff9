#include "decov/factorgraph.hpp"

#include <cmath>
#include <string>

#include "decov/common.hpp"

namespace decov {

namespace {
constexpr double kMassTolerance = 1e-12;
}

DegreeDistribution::DegreeDistribution(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  if (weights_.size() < 2) throw ParameterError("degree distribution needs max_degree >= 2");
  if ((weights_.array() < 0.0).any() || !weights_.allFinite())
    throw ParameterError("degree distribution has negative or non-finite weights");
  if (weights_[0] != 0.0) throw ParameterError("degree distribution puts mass on degree 1");
  if (std::abs(weights_.sum() - 1.0) > kMassTolerance)
    throw ParameterError("degree distribution weights sum to " + std::to_string(weights_.sum()));
}

DegreeDistribution DegreeDistribution::point_mass(int degree) {
  if (degree < 2) throw ParameterError("point mass degree must be >= 2");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(degree);
  w[degree - 1] = 1.0;
  return DegreeDistribution(std::move(w));
}

DegreeDistribution DegreeDistribution::from_map(const std::map<int, double>& mass) {
  if (mass.empty()) throw ParameterError("empty degree map");
  const int top = std::max(2, mass.rbegin()->first);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(top);
  for (const auto& [k, v] : mass) {
    if (k < 1) throw ParameterError("degree must be positive");
    w[k - 1] = v;
  }
  return DegreeDistribution(std::move(w));
}

DegreeDistribution DegreeDistribution::cleaned(Eigen::VectorXd weights) {
  if (weights.size() < 2) throw ParameterError("degree distribution needs max_degree >= 2");
  weights = weights.cwiseMax(0.0);
  weights[0] = 0.0;
  weights = (weights.array() < 1e-14).select(0.0, weights);
  const double total = weights.sum();
  if (!(total > 0.0)) throw ParameterError("degree distribution has no mass");
  weights /= total;
  return DegreeDistribution(std::move(weights));
}

std::vector<int> DegreeDistribution::support() const {
  std::vector<int> s;
  for (int k = 1; k <= max_degree(); ++k)
    if (weights_[k - 1] > 0.0) s.push_back(k);
  return s;
}

double DegreeDistribution::moment(double exponent) const {
  double m = 0.0;
  for (int k = 1; k <= max_degree(); ++k) {
    const double w = weights_[k - 1];
    if (w != 0.0) m += w * std::pow(static_cast<double>(k), exponent);
  }
  return m;
}

double KronDegreeLaw::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) m += probabilities[i] * support[i];
  return m;
}

double KronDegreeLaw::total_mass() const {
  double m = 0.0;
  for (const double v : probabilities) m += v;
  return m;
}

KronDegreeLaw product_law(const DegreeDistribution& first, const DegreeDistribution& second) {
  std::map<long, double> acc;
  for (const int i : first.support())
    for (const int j : second.support())
      acc[static_cast<long>(i) * j] += first.weight(i) * second.weight(j);
  KronDegreeLaw law;
  for (const auto& [k, v] : acc) {
    law.support.push_back(k);
    law.probabilities.push_back(v);
  }
  return law;
}

KronDegreeLaw kron_degree_law(const DegreeDistribution& base) { return product_law(base, base); }

double coeff_a1(const DegreeDistribution& lambda, const DegreeDistribution& rho) {
  const double r = rho.moment(0.5);
  const double l = lambda.moment(-0.5);
  return r * r * l * l;
}

double coeff_a2(const DegreeDistribution& lambda, const DegreeDistribution& rho) {
  const double r = rho.moment(1.0);
  const double l = lambda.moment(-1.0);
  return r * r * l * l;
}

}  // namespace decov
