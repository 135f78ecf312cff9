#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "decov/causal.hpp"
#include "decov/model.hpp"
#include "helpers.hpp"

using namespace decov;
using testing::max_abs;

namespace {

using Nodes = std::vector<Eigen::Index>;

Gbn chain(int p, double w) {
  Gbn g{Eigen::MatrixXd::Zero(p, p), 1.0};
  for (int i = 0; i + 1 < p; ++i) g.weights(i, i + 1) = w;
  return g;
}

GraphEstimate exact(const Gbn& g, const StructureConfig& cfg = {}) {
  const Eigen::MatrixXd sigma = true_covariance(g);
  return recover_structure(sigma, sigma.inverse(), cfg);
}

bool acyclic(const GraphEstimate& est, Eigen::Index p) {
  return topological_order(est.adjacency(p)).has_value();
}

}  // namespace

TEST_SUITE("causal") {

TEST_CASE("markov_blanket: examples") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(markov_blanket(eye, i, 1e-9).empty());
  Eigen::Matrix2d two;
  two << 2, -0.5, -0.5, 1;
  CHECK(markov_blanket(two, 0, 1e-9) == Nodes{1});
  const Eigen::MatrixXd omega = true_covariance(chain(3, 1.0)).inverse();
  CHECK(markov_blanket(omega, 1, 1e-9) == Nodes{0, 2});
  CHECK(markov_blanket(omega, 0, 1e-9) == Nodes{1});
  CHECK_THROWS_AS(markov_blanket(omega, 3, 1e-9), ParameterError);
}

TEST_CASE("regression_coeffs: examples") {
  CHECK(regression_coeffs(Eigen::MatrixXd::Identity(3, 3), 0, {1, 2}).isZero(0.0));
  const double w = 0.7;
  Eigen::Matrix2d sigma;
  sigma << 1, w, w, 1 + w * w;
  CHECK(regression_coeffs(sigma, 1, {0})[0] == doctest::Approx(w));
  CHECK(regression_coeffs(sigma, 1, {}).isZero(0.0));
  CHECK_THROWS_AS(regression_coeffs(Eigen::MatrixXd::Ones(3, 3), 0, {1, 2}), NumericError);
}

TEST_CASE("regression_coeffs: Monte Carlo least squares") {
  const Gbn g = gen_er_dag(5, 0.6, 0.5, 17);
  const SampleSet xs = simulate_sem(g, 1000000, 2);
  const Eigen::MatrixXd sigma = true_covariance(g);
  const Nodes mb{0, 1, 3, 4};
  const Eigen::VectorXd theta = regression_coeffs(sigma, 2, mb);
  const Eigen::MatrixXd design = xs(mb, Eigen::all).transpose();
  const Eigen::VectorXd fit = design.colPivHouseholderQr().solve(xs.row(2).transpose());
  for (std::size_t a = 0; a < mb.size(); ++a) CHECK(std::abs(fit[a] - theta[mb[a]]) < 1e-2);
}

TEST_CASE("find_terminal: examples") {
  // Two-node chain x0 -> x1: the child scores lower.
  const Eigen::MatrixXd sigma = true_covariance(chain(2, 0.8));
  const Eigen::MatrixXd omega = sigma.inverse();
  std::vector<Nodes> mb{{1}, {0}};
  Eigen::MatrixXd thetas(2, 2);
  thetas.col(0) = regression_coeffs(sigma, 0, mb[0]);
  thetas.col(1) = regression_coeffs(sigma, 1, mb[1]);
  CHECK(terminal_score(omega, thetas, 1, mb[1]) < terminal_score(omega, thetas, 0, mb[0]));
  CHECK(find_terminal(omega, thetas, mb, {0, 1}) == 1);

  // Empty graph: all scores 0, smallest index wins.
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  CHECK(find_terminal(eye, Eigen::MatrixXd::Zero(3, 3), {{}, {}, {}}, {2, 0, 1}) == 0);

  // A zero regression coefficient against a blanket member scores infinity.
  Eigen::MatrixXd zero_theta = Eigen::MatrixXd::Zero(2, 2);
  CHECK(std::isinf(terminal_score(omega, zero_theta, 0, mb[0])));
  CHECK_THROWS_AS(find_terminal(omega, zero_theta, mb, {0, 1}), StructuralError);
  CHECK_THROWS_AS(find_terminal(omega, thetas, mb, {}), ParameterError);
}

TEST_CASE("find_terminal: four-node chain picks the sink") {
  const Eigen::MatrixXd sigma = true_covariance(chain(4, 0.5));
  const Eigen::MatrixXd omega = sigma.inverse();
  std::vector<Nodes> mb(4);
  Eigen::MatrixXd thetas(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    mb[i] = markov_blanket(omega, i, 1e-9);
    thetas.col(i) = regression_coeffs(sigma, i, mb[i]);
  }
  CHECK(find_terminal(omega, thetas, mb, {0, 1, 2, 3}) == 3);
}

TEST_CASE("marginalize: examples") {
  CHECK(marginalize(Eigen::MatrixXd::Identity(3, 3), 1) == Eigen::MatrixXd::Identity(2, 2));
  // Dropping the sink of a chain leaves the shorter chain.
  const Eigen::MatrixXd sub = marginalize(true_covariance(chain(4, 0.6)), 3);
  CHECK(max_abs(sub, true_covariance(chain(3, 0.6))) < 1e-14);
  // Order of removal does not matter once indices are tracked.
  const Eigen::MatrixXd s = true_covariance(gen_er_dag(5, 0.5, 0.5, 3));
  CHECK(marginalize(marginalize(s, 0), 1) == marginalize(marginalize(s, 2), 0));
  CHECK_THROWS_AS(marginalize(s, 5), ParameterError);
  CHECK_THROWS_AS(marginalize(Eigen::MatrixXd::Identity(1, 1), 0), ParameterError);
}

TEST_CASE("recover_structure: empty graph has no edges") {
  const GraphEstimate est = exact(Gbn{Eigen::MatrixXd::Zero(6, 6), 1.0});
  CHECK(est.edges.empty());
  CHECK(est.order.size() == 6);
}

TEST_CASE("recover_structure: exact inputs recover random 10-node graphs") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Gbn g = gen_er_dag(10, 0.3, 0.5, s);
    const GraphEstimate est = exact(g);
    CHECK(max_abs(est.adjacency(10), g.weights) < 1e-6);
    CHECK(static_cast<long>(est.edges.size()) == g.edge_count());
  }
}

TEST_CASE("recover_structure: exact inputs up to p = 12 over 20 seeds") {
  for (std::uint64_t s = 100; s < 120; ++s) {
    const int p = 4 + static_cast<int>(s % 9);
    const Gbn g = gen_er_dag(p, 0.35, 0.5, s);
    const GraphEstimate est = exact(g);
    const Eigen::MatrixXd w = est.adjacency(p);
    CHECK(((w.array() != 0.0) == (g.weights.array() != 0.0)).all());
    CHECK(acyclic(est, p));
    Nodes sorted = est.order;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted.size() == static_cast<std::size_t>(p));
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }
}

TEST_CASE("recover_structure: CLIME recomputation on exact input") {
  const Gbn g = gen_er_dag(8, 0.3, 0.5, 5);
  StructureConfig cfg;
  cfg.recompute = PrecisionUpdate::clime;
  cfg.clime.lambda = 1e-6;
  const GraphEstimate est = exact(g, cfg);
  CHECK(((est.adjacency(8).array().abs() > 1e-3) == (g.weights.array() != 0.0)).all());
}

TEST_CASE("recover_structure: noisy input stays acyclic and deterministic") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Gbn g = gen_er_dag(15, 0.2, 0.5, s);
    const Eigen::MatrixXd sigma_hat = sample_covariance(simulate_sem(g, 300, s));
    const GraphEstimate a = recover_structure(sigma_hat, sigma_hat.inverse());
    const GraphEstimate b = recover_structure(sigma_hat, sigma_hat.inverse());
    CHECK(acyclic(a, 15));
    CHECK(a.edges == b.edges);
    CHECK(a.order == b.order);
  }
}

TEST_CASE("recover_structure: larger zero_tol never adds edges") {
  const Gbn g = gen_er_dag(12, 0.3, 0.5, 9);
  const Eigen::MatrixXd sigma_hat = sample_covariance(simulate_sem(g, 500, 9));
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (const double tol : {1e-4, 1e-2, 0.05, 0.1, 0.3, 1.0}) {
    StructureConfig cfg;
    cfg.zero_tol_abs = tol;
    const std::size_t n = recover_structure(sigma_hat, sigma_hat.inverse(), cfg).edges.size();
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("recover_structure: shape errors") {
  CHECK_THROWS_AS(recover_structure(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(2, 2)),
                  ParameterError);
  const GraphEstimate one = recover_structure(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1));
  CHECK(one.order == Nodes{0});
}

}  // TEST_SUITE
