#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "decov/causal.hpp"
#include "decov/design.hpp"
#include "decov/model.hpp"
#include "decov/recovery.hpp"

namespace decov {

/// Max |est - truth| over all entries, or over the leading block x block corner.
double metric_mae(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth,
                  std::optional<Eigen::Index> block = std::nullopt);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Supports: |est_ij| > est_rel * max|est| and |truth_ij| > truth_rel * max|truth|.
/// An empty estimated support scores precision 1 if the true support is empty too, else 0.
PrecisionRecall metric_support_pr(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth,
                                  double est_rel = 0.1, double truth_rel = 1e-10,
                                  std::optional<Eigen::Index> block = std::nullopt);

/// Directed edge comparison; with restrict_to_high only edges among nodes < n_h count.
PrecisionRecall metric_edge_pr(const GraphEstimate& est, const Gbn& truth, bool restrict_to_high = false,
                               Eigen::Index n_h = 0);

struct ExperimentConfig {
  Eigen::Index p = 50;
  Eigen::Index d = 0;    // 0: rows implied by the regular design ratio
  Eigen::Index n_h = 0;  // 0: no high-priority block
  Eigen::Index samples = 5000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  double edge_factor = 1.0;  // Erdos-Renyi edge probability edge_factor / p
  double weight = 0.5;
  double noise_var = 1.0;
  double meas_noise_std = 0.0;

  double k = 10;  // design sparsity: the covariance is taken as k^2-sparse
  RegularDesignSpec design;  // p, k are filled from above
  /// Column degree of the instantiated regular design; 0 keeps the designed degrees.
  double de_col_degree = 0.0;
  /// Block sparsities left at zero are derived from k and the block sizes.
  PreferentialDesignSpec pref = [] {
    PreferentialDesignSpec s;
    s.k_hh = s.k_hl = s.k_ll = 0.0;
    return s;
  }();
  int pref_max_row_degree = 8;

  std::vector<int> deltas{2, 3, 4, 5, 6, 7, 8};
  std::vector<std::string> methods{"de", "baseline"};

  double misfit_target = 0.05;
  int mu_grid = 10;
  double mu_span = 1e-4;
  RecoveryConfig recovery{1e-2, 3000, 1e-8, true};

  bool structure = true;
  ClimeConfig clime;
  StructureConfig causal{1e-3, std::nullopt, PrecisionUpdate::clime, {}};

  std::filesystem::path out_dir;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct TrialMetrics {
  std::uint64_t seed = 0;
  std::string method;  // "de", "pref" or "bs<delta>"
  Eigen::Index d = 0;
  bool ok = true;
  std::string failed_stage;
  std::string error;
  double mu = 0.0;
  // NaN marks a metric that was not computed (stage failed, no high block,
  // structure disabled).
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
  double cov_mae = kUnset, cov_precision = kUnset, cov_recall = kUnset;
  double cov_mae_hh = kUnset, cov_precision_hh = kUnset, cov_recall_hh = kUnset;
  double edge_precision = kUnset, edge_recall = kUnset;
  double edge_precision_hh = kUnset, edge_recall_hh = kUnset;
};

struct ExperimentReport {
  nlohmann::json config;
  std::vector<TrialMetrics> trials;
  nlohmann::json design;      // design outputs used by the DE methods
  nlohmann::json aggregates;  // per method, per metric mean/std, plus baseline best/worst
  nlohmann::json timings;     // wall-clock seconds per stage (kept out of report.json)
  std::vector<std::string> metric_names() const;

  bool any_failure() const;
  /// Metric value for (seed, method), if that trial exists and computed it.
  std::optional<double> value(std::uint64_t seed, const std::string& method,
                              const std::string& metric) const;
  /// Baseline method with the best (or worst) mean for a metric.
  std::string baseline_extreme(const std::string& metric, bool best) const;

  nlohmann::json to_json() const;
  std::string metrics_csv() const;
};

double trial_metric(const TrialMetrics& t, const std::string& metric);
/// True when larger values of the metric are better.
bool metric_higher_is_better(const std::string& metric);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// report.json, metrics.csv and timings.json under dir.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace decov
