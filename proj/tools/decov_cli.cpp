// decov command line: design, sample, simulate, recover, clime, causal, experiment.
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Cholesky>
#include <json.hpp>

#include "decov/causal.hpp"
#include "decov/common.hpp"
#include "decov/de.hpp"
#include "decov/design.hpp"
#include "decov/harness.hpp"
#include "decov/io.hpp"
#include "decov/model.hpp"
#include "decov/recovery.hpp"
#include "decov/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace decov;

namespace {

constexpr int kStageFailure = 2;

// JSON goes to the file when one is given, else to stdout.
void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    io::write_json(out, j);
  }
}

DesignMode parse_mode(const std::string& s) {
  if (s == "fixed_row") return DesignMode::fixed_row;
  if (s == "fixed_col") return DesignMode::fixed_col;
  if (s == "both") return DesignMode::both;
  throw ParameterError("unknown design mode '" + s + "'");
}

struct Options {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  bool text = false;

  // design regular
  RegularDesignSpec regular;
  std::string mode = "both";
  std::string trajectory_file;
  int de_iters = 300;
  // design pref
  PreferentialDesignSpec pref;
  std::string rho_file;
  // sample
  std::string design_file;
  long d = 0, p = 0;
  std::optional<int> baseline;
  std::optional<double> norm_const;
  // simulate
  std::string gbn_file, matrix_file;
  double edge_prob = 0.02, weight = 0.5, noise_var = 1.0, meas_noise = 0.0;
  long samples = 1000;
  // recover / clime / causal
  std::string sigma_y_file, sigma_file, omega_file;
  std::optional<double> mu;
  double misfit_target = 0.05;
  double clime_lambda = 0.1;
  std::string recompute = "inverse";
};

int run_design_regular(const Options& o) {
  RegularDesignSpec spec = o.regular;
  spec.mode = parse_mode(o.mode);
  const RegularDesign design = design_regular(spec);
  emit(io::to_json(design), o.out);
  if (o.trajectory_file.empty()) return 0;

  const double p = static_cast<double>(spec.p), k = static_cast<double>(spec.k);
  const SignalPrior prior = SignalPrior::unit_power(std::min(1.0, k * k / (p * p)));
  DeParams params;
  params.beta = default_beta(p, k, spec.c0);
  params.seed = o.seed.value_or(0);
  const DeTrajectory t =
      de_trajectory(DeState::from_prior(prior), design.lambda, design.rho, prior, params, o.de_iters, 1e-10);
  io::write_trajectory_csv(o.trajectory_file, t.states);
  std::cerr << "trajectory " << t.states.size() - 1 << " steps, final E " << io::format_double(t.states.back().e)
            << (t.converged_to_zero ? " (decays to zero)" : "") << '\n';
  return 0;
}

int run_design_pref(const Options& o) {
  const json rho = io::read_json(o.rho_file);
  const PreferentialDesign design =
      design_preferential(o.pref, io::degree_from_json(rho.at("rho_h")), io::degree_from_json(rho.at("rho_l")));
  emit(io::to_json(design), o.out);
  return 0;
}

int run_sample(const Options& o) {
  const std::uint64_t seed = o.seed.value_or(0);
  SensingMatrix a;
  if (o.baseline) {
    a = baseline_left_regular(*o.baseline, o.d, o.p, seed);
  } else {
    if (o.design_file.empty()) throw ParameterError("sample: need --design or --baseline");
    const json j = io::read_json(o.design_file);
    if (j.contains("lambda_h")) {
      const long d = o.d > 0 ? o.d : std::lround(j.at("d").get<double>());
      const Eigen::Index n_h = static_cast<Eigen::Index>(o.pref.n_h), n_l = static_cast<Eigen::Index>(o.pref.n_l);
      a = sample_preferential_matrix(io::degree_from_json(j.at("lambda_h")), io::degree_from_json(j.at("lambda_l")),
                                     io::degree_from_json(j.at("rho_h")), io::degree_from_json(j.at("rho_l")), d,
                                     n_h, n_l, o.norm_const, seed);
    } else {
      const RegularDesign r{io::degree_from_json(j.at("lambda")), io::degree_from_json(j.at("rho")),
                            j.value("objective", 0.0), {}};
      const long d = o.d > 0 ? o.d : std::lround(static_cast<double>(o.p) * r.lambda.mean() / r.rho.mean());
      a = sample_sensing_matrix(r.lambda, r.rho, d, o.p, o.norm_const, seed);
    }
  }
  if (o.out.empty()) {
    io::write_matrix(std::cout, a);
  } else {
    io::write_matrix(o.out, a);
  }
  return 0;
}

int run_simulate(const Options& o) {
  if (o.out.empty()) throw ParameterError("simulate: --out directory is required");
  const std::uint64_t seed = o.seed.value_or(0);
  fs::create_directories(o.out);
  const fs::path dir = o.out;

  Gbn g = o.gbn_file.empty() ? gen_er_dag(o.p, o.edge_prob, o.weight, mix_seed(seed, 1), o.noise_var)
                             : io::gbn_from_json(io::read_json(o.gbn_file));
  io::write_json(dir / "gbn.json", io::to_json(g));
  io::write_dense_csv(dir / "sigma.csv", true_covariance(g));

  const SampleSet xs = simulate_sem(g, o.samples, mix_seed(seed, 2));
  const char* ext = o.text ? ".csv" : ".bin";
  io::write_samples(dir / (std::string("x") + ext), xs, o.text);

  if (!o.matrix_file.empty()) {
    const SensingMatrix a = io::read_matrix(o.matrix_file);
    const SampleSet ys = measure({a.entries, o.meas_noise}, xs, mix_seed(seed, 3));
    io::write_samples(dir / (std::string("y") + ext), ys, o.text);
    io::write_dense_csv(dir / "sigma_y.csv", sample_covariance(ys));
  }
  return 0;
}

int run_recover(const Options& o) {
  const SensingMatrix a = io::read_matrix(o.matrix_file);
  const Eigen::MatrixXd sigma_y = io::read_dense_csv(o.sigma_y_file);
  RecoveryConfig cfg;
  CovEstimate est;
  double mu = 0.0;
  if (o.mu) {
    cfg.mu = *o.mu;
    est = recover_covariance(a, sigma_y, cfg);
    mu = cfg.mu;
  } else {
    MuPath path = select_mu(a.entries, sigma_y, cfg, o.misfit_target);
    mu = path.grid[path.chosen];
    est = std::move(path.estimate);
  }
  if (o.out.empty()) throw ParameterError("recover: --out is required");
  io::write_dense_csv(o.out, est.sigma_hat);
  std::cerr << "mu " << io::format_double(mu) << " residual " << io::format_double(est.residual)
            << " iterations " << est.iterations << (est.converged ? "" : " (not converged)") << '\n';
  return est.converged ? 0 : kStageFailure;
}

int run_clime(const Options& o) {
  ClimeConfig cfg;
  cfg.lambda = o.clime_lambda;
  const PrecisionEstimate est = clime(io::read_dense_csv(o.sigma_file), cfg);
  if (o.out.empty()) throw ParameterError("clime: --out is required");
  io::write_dense_csv(o.out, est.omega_hat);
  std::cerr << "infeasibility " << io::format_double(est.infeasibility) << " flagged " << est.flagged.size()
            << '\n';
  return est.flagged.empty() ? 0 : kStageFailure;
}

int run_causal(const Options& o) {
  const Eigen::MatrixXd sigma = io::read_dense_csv(o.sigma_file);
  StructureConfig cfg;
  cfg.clime.lambda = o.clime_lambda;
  if (o.recompute == "clime") {
    cfg.recompute = PrecisionUpdate::clime;
  } else if (o.recompute != "inverse") {
    throw ParameterError("unknown recompute mode '" + o.recompute + "'");
  }
  Eigen::MatrixXd omega;
  if (!o.omega_file.empty()) {
    omega = io::read_dense_csv(o.omega_file);
  } else if (cfg.recompute == PrecisionUpdate::clime) {
    omega = clime(sigma, cfg.clime).omega_hat;
  } else {
    omega = sigma.ldlt().solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
  }
  emit(io::to_json(recover_structure(sigma, omega, cfg)), o.out);
  return 0;
}

int run_experiment(const Options& o) {
  if (o.config.empty()) throw ParameterError("experiment: --config is required");
  ExperimentConfig cfg = ExperimentConfig::from_json(io::read_json(o.config));
  if (o.seed) cfg.seeds = {*o.seed};
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (cfg.out_dir.empty()) throw ParameterError("experiment: no output directory (--out or out_dir)");
  fs::create_directories(cfg.out_dir);

  ExperimentReport report;
  try {
    report = run_experiment(cfg);
  } catch (const Error& e) {
    // Run-level stage (design) failed: no trials, but still leave a report behind.
    io::write_json(cfg.out_dir / "report.json",
                   {{"config", cfg.to_json()}, {"status", "failed"}, {"error", e.what()}, {"trials", json::array()}});
    throw;
  }
  write_report(report, cfg.out_dir);
  for (const auto& t : report.trials)
    if (!t.ok)
      std::cerr << "seed " << t.seed << " " << t.method << ": " << t.failed_stage << " failed: " << t.error << '\n';
  return report.any_failure() ? kStageFailure : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse sensing design and compressed covariance / structure recovery"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output file or directory");
  };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "Random seed"); };

  CLI::App* design = app.add_subcommand("design", "Optimize degree distributions");
  design->require_subcommand(1);
  CLI::App* regular = design->add_subcommand("regular", "Single-block design");
  regular->add_option("--p", o.regular.p, "Dimension")->required();
  regular->add_option("--k", o.regular.k, "Sparsity")->required();
  regular->add_option("--c0", o.regular.c0, "Threshold constant");
  regular->add_option("--dv", o.regular.d_v, "Max column degree");
  regular->add_option("--dc", o.regular.d_c, "Max row degree");
  regular->add_option("--mode", o.mode, "fixed_row, fixed_col or both");
  regular->add_option("--trajectory", o.trajectory_file, "Also write the DE trajectory CSV of the design");
  regular->add_option("--de-iters", o.de_iters, "Trajectory iteration cap");
  add_seed(regular);
  add_common(regular);

  CLI::App* pref = design->add_subcommand("pref", "Two-block preferential design");
  pref->add_option("--nh", o.pref.n_h, "High-priority dimension")->required();
  pref->add_option("--nl", o.pref.n_l, "Low-priority dimension")->required();
  pref->add_option("--khh", o.pref.k_hh, "HH sparsity")->required();
  pref->add_option("--khl", o.pref.k_hl, "HL sparsity")->required();
  pref->add_option("--kll", o.pref.k_ll, "LL sparsity")->required();
  pref->add_option("--c0", o.pref.c0, "Threshold constant");
  pref->add_option("--dvh", o.pref.d_vh, "Max high column degree");
  pref->add_option("--dvl", o.pref.d_vl, "Max low column degree");
  pref->add_option("--rho-file", o.rho_file, "JSON {rho_h, rho_l} row laws")->required()->check(CLI::ExistingFile);
  add_common(pref);

  CLI::App* sample = app.add_subcommand("sample", "Draw a sensing matrix");
  sample->add_option("--design", o.design_file, "Design JSON from `design`")->check(CLI::ExistingFile);
  sample->add_option("--baseline", o.baseline, "Draw a delta-left-regular baseline instead");
  sample->add_option("--p", o.p, "Columns (regular designs and baselines)");
  sample->add_option("--nh", o.pref.n_h, "High columns (preferential designs)");
  sample->add_option("--nl", o.pref.n_l, "Low columns (preferential designs)");
  sample->add_option("--d", o.d, "Rows; defaults to the design ratio");
  sample->add_option("--norm-const", o.norm_const, "Entry scale A in +/- A^-1/2");
  add_common(sample);
  add_seed(sample);

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate a GBN, samples and measurements");
  simulate->add_option("--gbn", o.gbn_file, "GBN JSON; random Erdos-Renyi DAG when absent")->check(CLI::ExistingFile);
  simulate->add_option("--p", o.p, "Nodes of the random DAG");
  simulate->add_option("--edge-prob", o.edge_prob, "Edge probability of the random DAG");
  simulate->add_option("--weight", o.weight, "Edge weight magnitude");
  simulate->add_option("--noise-var", o.noise_var, "SEM noise variance");
  simulate->add_option("--n", o.samples, "Number of samples");
  simulate->add_option("--matrix", o.matrix_file, "Sensing matrix; also writes y and sigma_y.csv")
      ->check(CLI::ExistingFile);
  simulate->add_option("--meas-noise", o.meas_noise, "Measurement noise std");
  simulate->add_flag("--text", o.text, "Write samples as CSV instead of binary");
  add_common(simulate);
  add_seed(simulate);

  CLI::App* recover = app.add_subcommand("recover", "L1 covariance recovery from compressed measurements");
  recover->add_option("--matrix", o.matrix_file, "Sensing matrix")->required()->check(CLI::ExistingFile);
  recover->add_option("--sigma-y", o.sigma_y_file, "Measurement covariance CSV")->required()->check(CLI::ExistingFile);
  recover->add_option("--mu", o.mu, "L1 weight; chosen on a grid when absent");
  recover->add_option("--misfit-target", o.misfit_target, "Relative misfit for the mu grid");
  add_common(recover);

  CLI::App* clime_cmd = app.add_subcommand("clime", "CLIME precision estimate");
  clime_cmd->add_option("--sigma", o.sigma_file, "Covariance CSV")->required()->check(CLI::ExistingFile);
  clime_cmd->add_option("--lambda", o.clime_lambda, "Constraint level");
  add_common(clime_cmd);

  CLI::App* causal = app.add_subcommand("causal", "GBN structure from covariance and precision");
  causal->add_option("--sigma", o.sigma_file, "Covariance CSV")->required()->check(CLI::ExistingFile);
  causal->add_option("--omega", o.omega_file, "Precision CSV; computed when absent")->check(CLI::ExistingFile);
  causal->add_option("--recompute", o.recompute, "inverse or clime");
  causal->add_option("--lambda", o.clime_lambda, "CLIME constraint level");
  add_common(causal);

  CLI::App* experiment = app.add_subcommand("experiment", "Run a seeded comparison and write a report");
  experiment->add_option("--config", o.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  experiment->add_option("--out", o.out, "Report directory");
  experiment->add_option("--seed", o.seed, "Run this single seed instead of the configured list");

  CLI11_PARSE(app, argc, argv);

  try {
    if (regular->parsed()) return run_design_regular(o);
    if (pref->parsed()) return run_design_pref(o);
    if (sample->parsed()) return run_sample(o);
    if (simulate->parsed()) return run_simulate(o);
    if (recover->parsed()) return run_recover(o);
    if (clime_cmd->parsed()) return run_clime(o);
    if (causal->parsed()) return run_causal(o);
    if (experiment->parsed()) return run_experiment(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_FAILURE;
}
