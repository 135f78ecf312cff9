#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

namespace decov {

/// Probability weights over integer degrees 1..max_degree. Degree 1 is kept
/// in storage but must carry zero mass.
class DegreeDistribution {
 public:
  DegreeDistribution() = default;

  /// weights[k - 1] = P(degree = k).
  explicit DegreeDistribution(Eigen::VectorXd weights);

  static DegreeDistribution point_mass(int degree);
  static DegreeDistribution from_map(const std::map<int, double>& mass);
  /// Clamps round-off negatives, drops degree-1 mass and renormalizes.
  static DegreeDistribution cleaned(Eigen::VectorXd weights);

  int max_degree() const { return static_cast<int>(weights_.size()); }
  double weight(int degree) const {
    return degree >= 1 && degree <= max_degree() ? weights_[degree - 1] : 0.0;
  }
  const Eigen::VectorXd& weights() const { return weights_; }
  std::vector<int> support() const;

  /// sum_k weights[k] * k^exponent
  double moment(double exponent) const;
  double mean() const { return moment(1.0); }

  bool operator==(const DegreeDistribution&) const = default;

 private:
  Eigen::VectorXd weights_;
};

/// Law of the product of two independent draws.
struct KronDegreeLaw {
  std::vector<long> support;  // ascending
  std::vector<double> probabilities;

  double mean() const;
  double total_mass() const;
};

KronDegreeLaw kron_degree_law(const DegreeDistribution& base);
KronDegreeLaw product_law(const DegreeDistribution& first, const DegreeDistribution& second);

inline double moments(const DegreeDistribution& dist, double exponent) {
  return dist.moment(exponent);
}

/// sum rho_i rho_i' lambda_j lambda_j' sqrt(i i' / j j'), via the moment factorization.
double coeff_a1(const DegreeDistribution& lambda, const DegreeDistribution& rho);
/// sum rho_i rho_i' lambda_j lambda_j' (i i' / j j'), via the moment factorization.
double coeff_a2(const DegreeDistribution& lambda, const DegreeDistribution& rho);

}  // namespace decov
