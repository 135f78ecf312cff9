#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include <unistd.h>

#include "decov/harness.hpp"
#include "decov/io.hpp"

using namespace decov;
using nlohmann::json;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.p = 20;
  cfg.k = 5;
  cfg.samples = 800;
  cfg.seeds = {1, 2, 3};
  cfg.deltas = {2, 3};
  cfg.de_col_degree = 3;
  cfg.mu_grid = 5;
  cfg.mu_span = 1e-2;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("metric_mae: examples") {
  const Eigen::MatrixXd t = Eigen::MatrixXd::Random(5, 5);
  CHECK(metric_mae(t, t) == 0.0);
  Eigen::MatrixXd e = t;
  e(0, 1) += 0.3;
  CHECK(metric_mae(e, t) == doctest::Approx(0.3));
  // Errors outside the leading block are ignored.
  Eigen::MatrixXd far = t;
  far(4, 4) += 2.0;
  CHECK(metric_mae(far, t, 3) == 0.0);
  CHECK(metric_mae(far, t) == doctest::Approx(2.0));
  CHECK_THROWS_AS(metric_mae(t, Eigen::MatrixXd::Zero(4, 4)), ParameterError);
  CHECK_THROWS_AS(metric_mae(t, t, 6), ParameterError);
}

TEST_CASE("metric_support_pr: examples") {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(6, 6);
  truth(0, 0) = truth(1, 1) = 1.0;
  truth(2, 3) = truth(3, 2) = 0.5;
  const PrecisionRecall perfect = metric_support_pr(truth, truth);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);

  const PrecisionRecall all = metric_support_pr(Eigen::MatrixXd::Ones(6, 6), truth);
  CHECK(all.precision == doctest::Approx(4.0 / 36.0));
  CHECK(all.recall == 1.0);

  // Two false positives, one miss.
  Eigen::MatrixXd est = truth;
  est(3, 2) = 0.0;
  est(4, 5) = est(5, 4) = 0.7;
  const PrecisionRecall hand = metric_support_pr(est, truth);
  CHECK(hand.precision == doctest::Approx(3.0 / 5.0));
  CHECK(hand.recall == doctest::Approx(3.0 / 4.0));

  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(6, 6);
  CHECK(metric_support_pr(zero, zero).precision == 1.0);
  CHECK(metric_support_pr(zero, truth).precision == 0.0);
  // Entries below a tenth of the largest estimated magnitude do not count.
  Eigen::MatrixXd faint = truth;
  faint(5, 0) = 0.05;
  CHECK(metric_support_pr(faint, truth).precision == 1.0);
}

TEST_CASE("metric_edge_pr: examples") {
  Gbn g{Eigen::MatrixXd::Zero(4, 4), 1.0};
  g.weights(0, 1) = 0.5;
  g.weights(2, 3) = -0.5;
  GraphEstimate same;
  same.edges = {{0, 1, 0.5}, {2, 3, -0.5}};
  const PrecisionRecall s = metric_edge_pr(same, g);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 1.0);

  GraphEstimate reversed;
  reversed.edges = {{1, 0, 0.5}, {2, 3, -0.5}};
  const PrecisionRecall r = metric_edge_pr(reversed, g);
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 0.5);

  // Mistakes among nodes 2 and 3 vanish when only nodes < 2 count.
  GraphEstimate low_error;
  low_error.edges = {{0, 1, 0.5}, {3, 2, 0.1}};
  const PrecisionRecall hi = metric_edge_pr(low_error, g, true, 2);
  CHECK(hi.precision == 1.0);
  CHECK(hi.recall == 1.0);

  GraphEstimate outside;
  outside.edges = {{0, 9, 1.0}};
  CHECK_THROWS_AS(metric_edge_pr(outside, g), ParameterError);
}

TEST_CASE("uncompressed sanity: identity sensing") {
  Gbn g{Eigen::MatrixXd::Zero(8, 8), 1.0};
  g.weights(0, 1) = 0.5;
  g.weights(2, 3) = -0.5;
  g.weights(5, 7) = 0.5;
  Eigen::SparseMatrix<double> eye(8, 8);
  eye.setIdentity();
  const Eigen::MatrixXd sy = sample_covariance(measure({eye, 0.0}, simulate_sem(g, 200000, 3), 4));
  const MuPath path = select_mu(eye, sy, RecoveryConfig{}, 0.01);
  const Eigen::MatrixXd sigma = true_covariance(g);
  CHECK(metric_mae(path.estimate.sigma_hat, sigma) < 0.02);
  const PrecisionRecall pr = metric_support_pr(path.estimate.sigma_hat, sigma);
  CHECK(pr.precision == 1.0);
  CHECK(pr.recall == 1.0);
}

TEST_CASE("ExperimentConfig: JSON parsing") {
  const json j = {{"p", 30}, {"k", 4}, {"seeds", {7}}, {"recovery", {{"misfit_target", 0.1}}},
                  {"structure", {{"enabled", false}}}};
  const ExperimentConfig cfg = ExperimentConfig::from_json(j);
  CHECK(cfg.p == 30);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{7});
  CHECK(cfg.misfit_target == 0.1);
  CHECK_FALSE(cfg.structure);
  // Echo parses back to the same config.
  CHECK(ExperimentConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());

  CHECK_THROWS_AS(ExperimentConfig::from_json({{"p", 30}, {"misfit_target", 0.1}}), ParameterError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"recovery", {{"mu", 1}}}}), ParameterError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"seeds", json::array()}}), ParameterError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"methods", {"magic"}}}), ParameterError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"methods", {"pref"}}}), ParameterError);
}

TEST_CASE("run_experiment: report structure and aggregates") {
  const ExperimentReport rep = run_experiment(small_config());
  // de + two baselines per seed.
  REQUIRE(rep.trials.size() == 9);
  const json j = rep.to_json();
  CHECK(j.contains("config"));
  CHECK(j.contains("design"));
  CHECK_FALSE(j.contains("timings"));
  CHECK(rep.timings.contains("de"));

  for (const auto& t : rep.trials) {
    if (!t.ok) continue;
    CHECK(t.cov_mae >= 0.0);
    for (const double v : {t.cov_precision, t.cov_recall}) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(std::isnan(t.cov_mae_hh));
  }

  // Aggregates recomputed from the serialized rows match exactly.
  const json parsed = json::parse(j.dump());
  for (const std::string method : {"de", "bs2", "bs3"}) {
    for (const std::string metric : {"cov_mae", "cov_precision", "edge_recall"}) {
      std::vector<double> v;
      for (const auto& row : parsed.at("trials"))
        if (row.at("method") == method && !row.at(metric).is_null()) v.push_back(row.at(metric).get<double>());
      const json& agg = parsed.at("aggregates").at(method).at(metric);
      REQUIRE(agg.at("n").get<std::size_t>() == v.size());
      if (v.empty()) {
        CHECK(agg.at("mean").is_null());
        continue;
      }
      double mean = 0.0;
      for (const double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      CHECK(agg.at("mean").get<double>() == mean);
    }
  }
  const json& ext = parsed.at("aggregates").at("baseline").at("cov_mae");
  const std::string best = ext.at("best");
  const std::string worst = ext.at("worst");
  CHECK(parsed["aggregates"][best]["cov_mae"]["mean"].get<double>() <=
        parsed["aggregates"][worst]["cov_mae"]["mean"].get<double>());
  CHECK(rep.baseline_extreme("cov_mae", true) == best);
}

TEST_CASE("run_experiment: byte-identical reports") {
  ExperimentConfig cfg = small_config();
  cfg.seeds = {4, 5};
  const std::string a = run_experiment(cfg).to_json().dump(2);
  const std::string b = run_experiment(cfg).to_json().dump(2);
  CHECK(a == b);
}

TEST_CASE("run_experiment: disabled structure leaves edge metrics unset") {
  ExperimentConfig cfg = small_config();
  cfg.structure = false;
  cfg.seeds = {1};
  const ExperimentReport rep = run_experiment(cfg);
  for (const auto& t : rep.trials) CHECK(std::isnan(t.edge_precision));
  CHECK_FALSE(rep.value(1, "de", "edge_precision").has_value());
  CHECK(rep.value(1, "de", "cov_mae").has_value());
  const std::string csv = rep.metrics_csv();
  CHECK(csv.rfind("seed,method", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(rep.trials.size()));
}

TEST_CASE("run_experiment: preferential configuration runs") {
  ExperimentConfig cfg = small_config();
  cfg.p = 40;
  cfg.n_h = 10;
  cfg.d = 14;
  cfg.k = 8;
  cfg.seeds = {1};
  cfg.structure = false;
  cfg.methods = {"pref", "de"};
  const ExperimentReport rep = run_experiment(cfg);
  REQUIRE(rep.trials.size() == 2);
  for (const auto& t : rep.trials) {
    CHECK(t.d == 14);
    if (t.ok) CHECK(t.cov_mae_hh <= t.cov_mae);
  }
  CHECK(rep.design.contains("preferential"));
}

TEST_CASE("write_report writes the three files") {
  ExperimentConfig cfg = small_config();
  cfg.seeds = {1};
  cfg.structure = false;
  const auto dir = std::filesystem::temp_directory_path() / ("decov_h_" + std::to_string(::getpid()));
  write_report(run_experiment(cfg), dir);
  for (const char* f : {"report.json", "metrics.csv", "timings.json"}) CHECK(std::filesystem::exists(dir / f));
  CHECK(io::read_json(dir / "report.json").at("trials").size() == 3);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
