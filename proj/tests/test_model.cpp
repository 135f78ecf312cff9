#include <doctest.h>

#include <cmath>

#include <Eigen/Cholesky>

#include "decov/model.hpp"
#include "decov/sampler.hpp"
#include "helpers.hpp"

using namespace decov;
using testing::max_abs;

TEST_SUITE("model") {

TEST_CASE("gen_er_dag: single node has no edges") {
  const Gbn g = gen_er_dag(1, 0.7, 0.5, 3);
  CHECK(g.size() == 1);
  CHECK(g.weights(0, 0) == 0.0);
}

TEST_CASE("gen_er_dag: weights are +-1/2") {
  const Gbn g = gen_er_dag(200, 0.02, 0.5, 11);
  CHECK(g.edge_count() > 0);
  for (Eigen::Index i = 0; i < 200; ++i)
    for (Eigen::Index j = 0; j < 200; ++j) {
      const double w = g.weights(i, j);
      if (w != 0.0) CHECK(std::abs(w) == 0.5);
    }
  CHECK(g.weights.diagonal().isZero(0.0));
}

TEST_CASE("gen_er_dag: edge_prob 1 gives a complete DAG") {
  const Gbn g = gen_er_dag(4, 1.0, 0.5, 5);
  CHECK(g.edge_count() == 6);
  CHECK(topological_order(g.weights).has_value());
}

TEST_CASE("gen_er_dag: rejects bad probability") {
  CHECK_THROWS_AS(gen_er_dag(5, 1.5, 0.5, 1), ParameterError);
  CHECK_THROWS_AS(gen_er_dag(5, -0.1, 0.5, 1), ParameterError);
}

TEST_CASE("gen_er_dag: acyclic and deterministic over many seeds") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Gbn a = gen_er_dag(25, 0.2, 0.5, s);
    CHECK(topological_order(a.weights).has_value());
    CHECK(a.weights == gen_er_dag(25, 0.2, 0.5, s).weights);
  }
}

TEST_CASE("gen_er_dag: does not favour the natural node order") {
  // With a random order some edges must point from a higher to a lower index.
  const Gbn g = gen_er_dag(30, 0.3, 0.5, 2);
  bool backwards = false;
  for (Eigen::Index i = 0; i < 30; ++i)
    for (Eigen::Index j = 0; j < i; ++j) backwards = backwards || g.weights(i, j) != 0.0;
  CHECK(backwards);
}

TEST_CASE("true_covariance: empty graph is the identity") {
  const Gbn g{Eigen::MatrixXd::Zero(3, 3), 1.0};
  CHECK(max_abs(true_covariance(g), Eigen::MatrixXd::Identity(3, 3)) == 0.0);
}

TEST_CASE("true_covariance: two-node chain") {
  const double w = 0.7;
  Gbn g{Eigen::MatrixXd::Zero(2, 2), 1.0};
  g.weights(0, 1) = w;
  Eigen::Matrix2d expect;
  expect << 1, w, w, 1 + w * w;
  CHECK(max_abs(true_covariance(g), expect) < 1e-14);
}

TEST_CASE("true_covariance: cycle is a structural error") {
  Gbn g{Eigen::MatrixXd::Zero(2, 2), 1.0};
  g.weights(0, 1) = 0.5;
  g.weights(1, 0) = 0.5;
  CHECK_THROWS_AS(true_covariance(g), StructuralError);
  CHECK_THROWS_AS(simulate_sem(g, 5, 1), StructuralError);
}

TEST_CASE("true_covariance: symmetric with a Cholesky factor") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Eigen::MatrixXd sigma = true_covariance(gen_er_dag(30, 0.1, 0.5, s, 2.0));
    CHECK(sigma == sigma.transpose());
    CHECK(sigma.llt().info() == Eigen::Success);
  }
}

TEST_CASE("simulate_sem: deterministic given the seed") {
  const Gbn g = gen_er_dag(8, 0.3, 0.5, 1);
  CHECK(simulate_sem(g, 50, 9) == simulate_sem(g, 50, 9));
  CHECK(simulate_sem(g, 50, 9) != simulate_sem(g, 50, 10));
}

TEST_CASE("simulate_sem: sample covariance of independent noise tends to I") {
  const Gbn g{Eigen::MatrixXd::Zero(5, 5), 1.0};
  double prev = 1e9;
  for (const Eigen::Index n : {100, 10000, 1000000}) {
    const double err = max_abs(sample_covariance(simulate_sem(g, n, 4)), Eigen::MatrixXd::Identity(5, 5));
    CHECK(err < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("simulate_sem: Monte Carlo agreement with the true covariance") {
  const Gbn g = gen_er_dag(10, 0.3, 0.5, 21);
  const Eigen::MatrixXd emp = sample_covariance(simulate_sem(g, 100000, 3));
  CHECK(max_abs(emp, true_covariance(g)) < 5e-2);
}

TEST_CASE("simulate_sem: error shrinks with N on average over seeds") {
  const Gbn g = gen_er_dag(6, 0.4, 0.5, 8);
  const Eigen::MatrixXd sigma = true_covariance(g);
  double prev = 1e9;
  for (const Eigen::Index n : {50, 500, 5000}) {
    double avg = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) avg += max_abs(sample_covariance(simulate_sem(g, n, s)), sigma);
    avg /= 20.0;
    CHECK(avg < prev);
    prev = avg;
  }
}

TEST_CASE("measure: identity and basis vectors") {
  Eigen::SparseMatrix<double> eye(4, 4);
  eye.setIdentity();
  const SampleSet xs = Eigen::MatrixXd::Random(4, 7);
  CHECK(measure({eye, 0.0}, xs, 1) == xs);

  Eigen::MatrixXd dense(3, 4);
  dense << 1, 0, 2, 0, 0, -1, 0, 3, 4, 0, 0, 5;
  const Eigen::SparseMatrix<double> a = dense.sparseView();
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(4, 0);
  CHECK(max_abs(measure({a, 0.0}, e1, 1), dense.col(0)) == 0.0);
}

TEST_CASE("measure: dimension mismatch") {
  Eigen::SparseMatrix<double> a(3, 4);
  CHECK_THROWS_AS(measure({a, 0.0}, Eigen::MatrixXd::Zero(5, 2), 1), ParameterError);
}

TEST_CASE("measure: noise calibration") {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Random(3, 4);
  const Eigen::SparseMatrix<double> a = dense.sparseView();
  const SampleSet xs = Eigen::MatrixXd::Random(4, 200000);
  const SampleSet ys = measure({a, 0.1}, xs, 5);
  const Eigen::MatrixXd resid = ys - dense * xs;
  CHECK(max_abs(sample_covariance(resid), 0.01 * Eigen::MatrixXd::Identity(3, 3)) < 1e-3);
}

TEST_CASE("measure: exactly linear without noise") {
  const SensingMatrix a = baseline_left_regular(3, 6, 10, 2);
  const Eigen::MatrixXd x1 = Eigen::MatrixXd::Random(10, 3), x2 = Eigen::MatrixXd::Random(10, 3);
  const MeasurementSystem ms{a.entries, 0.0};
  const Eigen::MatrixXd lhs = measure(ms, 2.0 * x1 - 0.5 * x2, 0);
  const Eigen::MatrixXd rhs = 2.0 * measure(ms, x1, 0) - 0.5 * measure(ms, x2, 0);
  CHECK(max_abs(lhs, rhs) < 1e-13);
}

TEST_CASE("sample_covariance: closed forms") {
  const Eigen::Vector3d y(1, -2, 3);
  CHECK(max_abs(sample_covariance(y), y * y.transpose()) == 0.0);
  CHECK(max_abs(sample_covariance(Eigen::MatrixXd::Identity(2, 2)), 0.5 * Eigen::MatrixXd::Identity(2, 2)) == 0.0);
  // Centered flag subtracts the mean.
  Eigen::MatrixXd ys(1, 2);
  ys << 1, 3;
  CHECK(sample_covariance(ys)(0, 0) == doctest::Approx(5.0));
  CHECK(sample_covariance(ys, true)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("pipeline: measured covariance tends to A Sigma A^T + sigma^2 I") {
  const Gbn g = gen_er_dag(8, 0.3, 0.5, 13);
  const SensingMatrix a = baseline_left_regular(2, 5, 8, 4);
  const double s = 0.2;
  const SampleSet ys = measure({a.entries, s}, simulate_sem(g, 200000, 6), 7);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(a.entries);
  const Eigen::MatrixXd expect = dense * true_covariance(g) * dense.transpose() + s * s * Eigen::MatrixXd::Identity(5, 5);
  CHECK(max_abs(sample_covariance(ys), expect) < 0.1);
}

}  // TEST_SUITE
