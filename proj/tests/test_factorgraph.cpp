#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "decov/factorgraph.hpp"
#include "helpers.hpp"

using namespace decov;

namespace {

// Direct quadruple sums, the definition the factorized forms must match.
double brute_a(const DegreeDistribution& lambda, const DegreeDistribution& rho, double power) {
  double s = 0.0;
  for (int i = 1; i <= rho.max_degree(); ++i)
    for (int i2 = 1; i2 <= rho.max_degree(); ++i2)
      for (int j = 1; j <= lambda.max_degree(); ++j)
        for (int j2 = 1; j2 <= lambda.max_degree(); ++j2)
          s += rho.weight(i) * rho.weight(i2) * lambda.weight(j) * lambda.weight(j2) *
               std::pow(double(i) * i2 / (double(j) * j2), power);
  return s;
}

}  // namespace

TEST_SUITE("factorgraph") {

TEST_CASE("DegreeDistribution: invariants are enforced") {
  CHECK_THROWS_AS(DegreeDistribution(Eigen::VectorXd::Ones(1)), ParameterError);
  CHECK_THROWS_AS(DegreeDistribution(Eigen::Vector3d(0.5, 0.5, 0.0)), ParameterError);  // degree 1
  CHECK_THROWS_AS(DegreeDistribution(Eigen::Vector3d(0.0, 0.6, 0.6)), ParameterError);  // mass
  CHECK_THROWS_AS(DegreeDistribution(Eigen::Vector3d(0.0, 1.5, -0.5)), ParameterError);
  CHECK_THROWS_AS(DegreeDistribution::point_mass(1), ParameterError);
  const DegreeDistribution d = DegreeDistribution::from_map({{2, 0.25}, {5, 0.75}});
  CHECK(d.max_degree() == 5);
  CHECK(d.support() == std::vector<int>{2, 5});
  CHECK(d.weight(1) == 0.0);
  CHECK(d.weight(9) == 0.0);
}

TEST_CASE("DegreeDistribution: cleaned drops round-off") {
  Eigen::VectorXd w(4);
  w << 1e-17, 0.5, -1e-16, 0.5;
  const DegreeDistribution d = DegreeDistribution::cleaned(w);
  CHECK(d.support() == std::vector<int>{2, 4});
}

TEST_CASE("kron_degree_law: point mass at 2") {
  const KronDegreeLaw law = kron_degree_law(DegreeDistribution::point_mass(2));
  CHECK(law.support == std::vector<long>{4});
  CHECK(law.probabilities[0] == 1.0);
}

TEST_CASE("kron_degree_law: uniform on {2,3}") {
  const KronDegreeLaw law = kron_degree_law(DegreeDistribution::from_map({{2, 0.5}, {3, 0.5}}));
  CHECK(law.support == std::vector<long>{4, 6, 9});
  CHECK(law.probabilities[0] == doctest::Approx(0.25));
  CHECK(law.probabilities[1] == doctest::Approx(0.5));
  CHECK(law.probabilities[2] == doctest::Approx(0.25));
}

TEST_CASE("kron_degree_law: rows of A (x) A have product degrees") {
  Eigen::MatrixXd a(2, 3);
  a << 1, 1, 1, 0, 1, 1;
  const Eigen::MatrixXd k = Eigen::kroneckerProduct(a, a);
  std::vector<long> degrees;
  for (Eigen::Index r = 0; r < k.rows(); ++r) degrees.push_back((k.row(r).array() != 0.0).count());
  CHECK(degrees == std::vector<long>{9, 6, 6, 4});
  // The law of A's row degrees predicts the same multiset.
  const KronDegreeLaw law = kron_degree_law(DegreeDistribution::from_map({{2, 0.5}, {3, 0.5}}));
  CHECK(law.probabilities[0] * 4 == doctest::Approx(1.0));  // one row of degree 4
  CHECK(law.probabilities[1] * 4 == doctest::Approx(2.0));  // two of degree 6
  CHECK(law.probabilities[2] * 4 == doctest::Approx(1.0));  // one of degree 9
}

TEST_CASE("kron_degree_law: unit mass and squared mean") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const DegreeDistribution d = testing::random_degree(9, 4, s);
    const KronDegreeLaw law = kron_degree_law(d);
    CHECK(law.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(law.mean() == doctest::Approx(d.mean() * d.mean()).epsilon(1e-12));
  }
}

TEST_CASE("coefficients: closed forms") {
  const DegreeDistribution l4 = DegreeDistribution::point_mass(4), r3 = DegreeDistribution::point_mass(3);
  CHECK(coeff_a1(l4, r3) == doctest::Approx(0.75));
  CHECK(coeff_a2(l4, r3) == doctest::Approx(9.0 / 16.0));
  for (int k = 2; k < 7; ++k) {
    const DegreeDistribution pk = DegreeDistribution::point_mass(k);
    CHECK(coeff_a1(pk, pk) == doctest::Approx(1.0));
    CHECK(coeff_a2(pk, pk) == doctest::Approx(1.0));
  }
}

TEST_CASE("coefficients: factorized forms match quadruple sums") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const DegreeDistribution lambda = testing::random_degree(8, 5, 2 * s);
    const DegreeDistribution rho = testing::random_degree(10, 5, 2 * s + 1);
    const double a1 = brute_a(lambda, rho, 0.5), a2 = brute_a(lambda, rho, 1.0);
    CHECK(std::abs(coeff_a1(lambda, rho) - a1) <= 1e-10 * a1);
    CHECK(std::abs(coeff_a2(lambda, rho) - a2) <= 1e-10 * a2);
  }
}

TEST_CASE("coefficients: invariant under reordering of the support") {
  // The same law built from differently ordered maps gives identical values.
  const DegreeDistribution a = DegreeDistribution::from_map({{2, 0.2}, {3, 0.3}, {7, 0.5}});
  std::map<int, double> m;
  m.emplace(7, 0.5);
  m.emplace(2, 0.2);
  m.emplace(3, 0.3);
  const DegreeDistribution b = DegreeDistribution::from_map(m);
  const DegreeDistribution rho = DegreeDistribution::point_mass(5);
  CHECK(coeff_a1(a, rho) == coeff_a1(b, rho));
  CHECK(coeff_a2(rho, a) == coeff_a2(rho, b));
}

TEST_CASE("moments") {
  CHECK(moments(DegreeDistribution::point_mass(4), -0.5) == doctest::Approx(0.5));
  CHECK(moments(DegreeDistribution::from_map({{2, 0.5}, {3, 0.5}}), 1.0) == doctest::Approx(2.5));
  for (std::uint64_t s = 0; s < 50; ++s) {
    const DegreeDistribution d = testing::random_degree(12, 6, s);
    CHECK(moments(d, 1.0) * moments(d, -1.0) >= 1.0 - 1e-12);
    double direct = 0.0;
    for (int k = 2; k <= d.max_degree(); ++k) direct += d.weight(k) * std::pow(k, 0.5);
    CHECK(moments(d, 0.5) == doctest::Approx(direct).epsilon(1e-14));
  }
}

}  // TEST_SUITE
