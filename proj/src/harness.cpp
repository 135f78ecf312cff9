#include "decov/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "decov/common.hpp"
#include "decov/io.hpp"
#include "decov/sampler.hpp"

namespace decov {

using nlohmann::json;

namespace {

Eigen::Index corner(const Eigen::MatrixXd& m, std::optional<Eigen::Index> block) {
  const Eigen::Index n = block.value_or(m.rows());
  if (n < 0 || n > m.rows()) throw ParameterError("metric block exceeds matrix size");
  return n;
}

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw ParameterError(std::string(what) + ": matrices must be square with equal shapes");
}

/// Two-point law on the integers around `mean`, clamped to [2, cap].
DegreeDistribution law_with_mean(double mean, int cap) {
  if (cap < 2) throw ParameterError("degree cap below 2");
  mean = std::clamp(mean, 2.0, static_cast<double>(cap));
  const int lo = static_cast<int>(std::floor(mean));
  const double frac = mean - lo;
  if (frac < 1e-12 || lo >= cap) return DegreeDistribution::point_mass(std::min(lo, cap));
  std::map<int, double> mass{{lo, 1.0 - frac}, {lo + 1, frac}};
  return DegreeDistribution::from_map(mass);
}

struct RegularPlan {
  DegreeDistribution lambda, rho;
  Eigen::Index d = 0;
};

// Instance of a regular design with d rows. Theorem 3.1's coefficients depend on
// point-mass degrees only through their ratio, so the design may be rescaled to a
// target column degree; otherwise the designed row law is kept and the column mean
// moves to balance the stub counts (or the row mean, if columns would drop below 2).
RegularPlan fit_regular(const RegularDesign& design, Eigen::Index p, Eigen::Index d, double col_degree) {
  if (col_degree > 0.0) {
    const double col = std::min(col_degree, static_cast<double>(d));
    return {law_with_mean(col, static_cast<int>(d)),
            law_with_mean(p * col / static_cast<double>(d), static_cast<int>(p)), d};
  }
  const double col_mean = d * design.rho.mean() / static_cast<double>(p);
  if (col_mean >= 2.0 && col_mean <= static_cast<double>(d))
    return {law_with_mean(col_mean, static_cast<int>(d)), design.rho, d};
  const double row_mean = p * design.lambda.mean() / static_cast<double>(d);
  return {design.lambda, law_with_mean(row_mean, static_cast<int>(p)), d};
}

struct PrefPlan {
  PreferentialDesign design;
  DegreeDistribution rho_h, rho_l;  // row laws refitted to the target d
};

PrefPlan plan_preferential(const ExperimentConfig& cfg, Eigen::Index target_d) {
  PreferentialDesignSpec spec = cfg.pref;
  spec.n_h = static_cast<int>(cfg.n_h);
  spec.n_l = static_cast<int>(cfg.p - cfg.n_h);
  const double density = cfg.k * cfg.k / double(cfg.p * cfg.p);
  if (spec.k_hh <= 0.0) spec.k_hh = density * spec.n_h * spec.n_h;
  if (spec.k_hl <= 0.0) spec.k_hl = density * spec.n_h * spec.n_l;
  if (spec.k_ll <= 0.0) spec.k_ll = density * spec.n_l * spec.n_l;

  std::optional<PreferentialDesign> best;
  for (int rh = 2; rh <= cfg.pref_max_row_degree; ++rh)
    for (int rl = 2; rl <= cfg.pref_max_row_degree; ++rl) {
      try {
        PreferentialDesign cand = design_preferential(spec, DegreeDistribution::point_mass(rh),
                                                      DegreeDistribution::point_mass(rl));
        const double gap = std::abs(cand.d - target_d);
        if (!best || gap < std::abs(best->d - target_d) - 1e-9 ||
            (gap <= std::abs(best->d - target_d) + 1e-9 && cand.objective < best->objective))
          best = std::move(cand);
      } catch (const InfeasibleError&) {
      }
    }
  if (!best) throw InfeasibleError("no preferential design is feasible for any row-degree pair");
  const double d = static_cast<double>(target_d);
  PrefPlan plan{*best, law_with_mean(spec.n_h * best->lambda_h.mean() / d, spec.n_h),
                law_with_mean(spec.n_l * best->lambda_l.mean() / d, spec.n_l)};
  return plan;
}

class StageClock {
 public:
  explicit StageClock(json& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
  void lap(const std::string& method, const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(now - start_).count();
    json& slot = sink_[method][stage];
    slot = (slot.is_number() ? slot.get<double>() : 0.0) + secs;
    start_ = now;
  }

 private:
  json& sink_;
  std::chrono::steady_clock::time_point start_;
};

const std::vector<std::string> kMetrics = {
    "cov_mae",     "cov_precision",     "cov_recall",     "cov_mae_hh",     "cov_precision_hh",
    "cov_recall_hh", "edge_precision", "edge_recall", "edge_precision_hh", "edge_recall_hh"};

json trial_json(const TrialMetrics& t) {
  json j = {{"seed", t.seed}, {"method", t.method}, {"d", t.d}, {"ok", t.ok}, {"mu", t.mu}};
  if (!t.ok) {
    j["failed_stage"] = t.failed_stage;
    j["error"] = t.error;
  }
  for (const auto& m : kMetrics) {
    const double v = trial_metric(t, m);
    j[m] = std::isfinite(v) ? json(v) : json(nullptr);
  }
  return j;
}

const char* mode_name(DesignMode m) {
  switch (m) {
    case DesignMode::fixed_row: return "fixed_row";
    case DesignMode::fixed_col: return "fixed_col";
    case DesignMode::both: return "both";
  }
  return "both";
}

DesignMode mode_from(const std::string& s) {
  if (s == "fixed_row") return DesignMode::fixed_row;
  if (s == "fixed_col") return DesignMode::fixed_col;
  if (s == "both") return DesignMode::both;
  throw ParameterError("unknown design mode '" + s + "'");
}

}  // namespace

double metric_mae(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth,
                  std::optional<Eigen::Index> block) {
  check_same_shape(est, truth, "metric_mae");
  const Eigen::Index n = corner(est, block);
  if (n == 0) return 0.0;
  return (est.topLeftCorner(n, n) - truth.topLeftCorner(n, n)).cwiseAbs().maxCoeff();
}

PrecisionRecall metric_support_pr(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth,
                                  double est_rel, double truth_rel, std::optional<Eigen::Index> block) {
  check_same_shape(est, truth, "metric_support_pr");
  const Eigen::Index n = corner(est, block);
  const double est_cut = est_rel * est.cwiseAbs().maxCoeff();
  const double truth_cut = truth_rel * truth.cwiseAbs().maxCoeff();
  long hits = 0, found = 0, actual = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool e = std::abs(est(i, j)) > est_cut;
      const bool t = std::abs(truth(i, j)) > truth_cut;
      found += e;
      actual += t;
      hits += e && t;
    }
  PrecisionRecall pr;
  pr.precision = found > 0 ? double(hits) / found : (actual == 0 ? 1.0 : 0.0);
  pr.recall = actual > 0 ? double(hits) / actual : 1.0;
  return pr;
}

PrecisionRecall metric_edge_pr(const GraphEstimate& est, const Gbn& truth, bool restrict_to_high,
                               Eigen::Index n_h) {
  const Eigen::Index p = truth.size();
  auto keep = [&](Eigen::Index a, Eigen::Index b) { return !restrict_to_high || (a < n_h && b < n_h); };
  long hits = 0, found = 0, actual = 0;
  for (const auto& e : est.edges) {
    if (e.parent < 0 || e.child < 0 || e.parent >= p || e.child >= p)
      throw ParameterError("metric_edge_pr: estimated edge outside the graph");
    if (!keep(e.parent, e.child)) continue;
    ++found;
    hits += truth.weights(e.parent, e.child) != 0.0;
  }
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      if (truth.weights(i, j) != 0.0 && keep(i, j)) ++actual;
  PrecisionRecall pr;
  pr.precision = found > 0 ? double(hits) / found : (actual == 0 ? 1.0 : 0.0);
  pr.recall = actual > 0 ? double(hits) / actual : 1.0;
  return pr;
}

double trial_metric(const TrialMetrics& t, const std::string& metric) {
  if (metric == "cov_mae") return t.cov_mae;
  if (metric == "cov_precision") return t.cov_precision;
  if (metric == "cov_recall") return t.cov_recall;
  if (metric == "cov_mae_hh") return t.cov_mae_hh;
  if (metric == "cov_precision_hh") return t.cov_precision_hh;
  if (metric == "cov_recall_hh") return t.cov_recall_hh;
  if (metric == "edge_precision") return t.edge_precision;
  if (metric == "edge_recall") return t.edge_recall;
  if (metric == "edge_precision_hh") return t.edge_precision_hh;
  if (metric == "edge_recall_hh") return t.edge_recall_hh;
  throw ParameterError("unknown metric '" + metric + "'");
}

bool metric_higher_is_better(const std::string& metric) { return metric.find("mae") == std::string::npos; }

// Config ---------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (p < 2) throw ParameterError("experiment: p must be >= 2");
  if (d < 0) throw ParameterError("experiment: d must be >= 0");
  if (n_h < 0 || n_h >= p) throw ParameterError("experiment: n_h must lie in [0, p)");
  if (samples < 1) throw ParameterError("experiment: samples must be >= 1");
  if (seeds.empty()) throw ParameterError("experiment: seeds must be nonempty");
  if (!(k >= 2.0 && k < p)) throw ParameterError("experiment: k must satisfy 2 <= k < p");
  if (!(edge_factor >= 0.0 && edge_factor <= p)) throw ParameterError("experiment: edge_factor out of range");
  for (const int delta : deltas)
    if (delta < 1) throw ParameterError("experiment: baseline deltas must be >= 1");
  for (const auto& m : methods) {
    if (m != "de" && m != "baseline" && m != "pref")
      throw ParameterError("experiment: unknown method '" + m + "'");
    if (m == "pref" && n_h == 0) throw ParameterError("experiment: method 'pref' needs n_h > 0");
  }
  recovery.validate();
}

json ExperimentConfig::to_json() const {
  return {
      {"p", p}, {"d", d}, {"n_h", n_h}, {"samples", samples}, {"seeds", seeds},
      {"edge_factor", edge_factor}, {"weight", weight}, {"noise_var", noise_var},
      {"meas_noise_std", meas_noise_std}, {"k", k}, {"de_col_degree", de_col_degree},
      {"design", {{"mode", mode_name(design.mode)}, {"c0", design.c0}, {"d_v", design.d_v}, {"d_c", design.d_c}}},
      {"pref",
       {{"k_hh", pref.k_hh}, {"k_hl", pref.k_hl}, {"k_ll", pref.k_ll}, {"c0", pref.c0},
        {"d_vh", pref.d_vh}, {"d_vl", pref.d_vl}, {"max_row_degree", pref_max_row_degree}}},
      {"deltas", deltas}, {"methods", methods},
      {"recovery",
       {{"misfit_target", misfit_target}, {"mu_grid", mu_grid}, {"mu_span", mu_span},
        {"max_iters", recovery.max_iters}, {"tol", recovery.tol}, {"symmetrize", recovery.symmetrize}}},
      {"structure",
       {{"enabled", structure}, {"clime_lambda", clime.lambda}, {"lp_max_dim", clime.lp_max_dim},
        {"zero_tol_rel", causal.zero_tol_rel},
        {"recompute", causal.recompute == PrecisionUpdate::inverse ? "inverse" : "clime"}}},
  };
}

namespace {

// A misspelled key would otherwise be silently replaced by its default.
void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ParameterError("experiment config: " + where + " must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw ParameterError("experiment config: unknown key '" + item.key() + "' in " + where);
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j, {"p", "d", "n_h", "samples", "seeds", "edge_factor", "weight", "noise_var", "meas_noise_std",
                     "k", "de_col_degree", "design", "pref", "deltas", "methods", "recovery", "structure",
                     "out_dir"},
                 "top level");
  if (j.contains("design")) reject_unknown(j.at("design"), {"mode", "c0", "d_v", "d_c"}, "design");
  if (j.contains("pref"))
    reject_unknown(j.at("pref"), {"k_hh", "k_hl", "k_ll", "c0", "d_vh", "d_vl", "max_row_degree"}, "pref");
  if (j.contains("recovery"))
    reject_unknown(j.at("recovery"), {"misfit_target", "mu_grid", "mu_span", "max_iters", "tol", "symmetrize"},
                   "recovery");
  if (j.contains("structure"))
    reject_unknown(j.at("structure"), {"enabled", "clime_lambda", "lp_max_dim", "zero_tol_rel", "recompute"},
                   "structure");
  try {
    c.p = j.value("p", c.p);
    c.d = j.value("d", c.d);
    c.n_h = j.value("n_h", c.n_h);
    c.samples = j.value("samples", c.samples);
    c.seeds = j.value("seeds", c.seeds);
    c.edge_factor = j.value("edge_factor", c.edge_factor);
    c.weight = j.value("weight", c.weight);
    c.noise_var = j.value("noise_var", c.noise_var);
    c.meas_noise_std = j.value("meas_noise_std", c.meas_noise_std);
    c.k = j.value("k", c.k);
    c.de_col_degree = j.value("de_col_degree", c.de_col_degree);
    if (j.contains("design")) {
      const json& d = j.at("design");
      c.design.mode = mode_from(d.value("mode", std::string("both")));
      c.design.c0 = d.value("c0", c.design.c0);
      c.design.d_v = d.value("d_v", c.design.d_v);
      c.design.d_c = d.value("d_c", c.design.d_c);
    }
    c.pref.k_hh = c.pref.k_hl = c.pref.k_ll = 0.0;
    if (j.contains("pref")) {
      const json& d = j.at("pref");
      c.pref.k_hh = d.value("k_hh", 0.0);
      c.pref.k_hl = d.value("k_hl", 0.0);
      c.pref.k_ll = d.value("k_ll", 0.0);
      c.pref.c0 = d.value("c0", c.pref.c0);
      c.pref.d_vh = d.value("d_vh", c.pref.d_vh);
      c.pref.d_vl = d.value("d_vl", c.pref.d_vl);
      c.pref_max_row_degree = d.value("max_row_degree", c.pref_max_row_degree);
    }
    c.deltas = j.value("deltas", c.deltas);
    if (j.contains("methods")) {
      c.methods = j.at("methods").get<std::vector<std::string>>();
    } else if (c.n_h > 0) {
      c.methods.push_back("pref");
    }
    if (j.contains("recovery")) {
      const json& r = j.at("recovery");
      c.misfit_target = r.value("misfit_target", c.misfit_target);
      c.mu_grid = r.value("mu_grid", c.mu_grid);
      c.mu_span = r.value("mu_span", c.mu_span);
      c.recovery.max_iters = r.value("max_iters", c.recovery.max_iters);
      c.recovery.tol = r.value("tol", c.recovery.tol);
      c.recovery.symmetrize = r.value("symmetrize", c.recovery.symmetrize);
    }
    if (j.contains("structure")) {
      const json& s = j.at("structure");
      c.structure = s.value("enabled", c.structure);
      c.clime.lambda = s.value("clime_lambda", c.clime.lambda);
      c.clime.lp_max_dim = s.value("lp_max_dim", c.clime.lp_max_dim);
      c.causal.zero_tol_rel = s.value("zero_tol_rel", c.causal.zero_tol_rel);
      const std::string rc = s.value("recompute", std::string("clime"));
      if (rc != "clime" && rc != "inverse") throw ParameterError("unknown recompute mode '" + rc + "'");
      c.causal.recompute = rc == "inverse" ? PrecisionUpdate::inverse : PrecisionUpdate::clime;
    }
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ParameterError(std::string("experiment config: ") + e.what());
  }
  c.causal.clime = c.clime;
  c.validate();
  return c;
}

// Report -----------------------------------------------------------------------

std::vector<std::string> ExperimentReport::metric_names() const { return kMetrics; }

bool ExperimentReport::any_failure() const {
  for (const auto& t : trials)
    if (!t.ok) return true;
  return false;
}

std::optional<double> ExperimentReport::value(std::uint64_t seed, const std::string& method,
                                              const std::string& metric) const {
  for (const auto& t : trials)
    if (t.seed == seed && t.method == method) {
      const double v = trial_metric(t, metric);
      if (std::isfinite(v)) return v;
    }
  return std::nullopt;
}

std::string ExperimentReport::baseline_extreme(const std::string& metric, bool best) const {
  const json& pick = aggregates.at("baseline").at(metric).at(best ? "best" : "worst");
  if (pick.is_null()) throw ParameterError("no baseline reports metric '" + metric + "'");
  return pick.get<std::string>();
}

json ExperimentReport::to_json() const {
  json rows = json::array();
  for (const auto& t : trials) rows.push_back(trial_json(t));
  return {{"config", config},
          {"design", design},
          {"status", any_failure() ? "partial" : "ok"},
          {"trials", rows},
          {"aggregates", aggregates}};
}

std::string ExperimentReport::metrics_csv() const {
  std::ostringstream out;
  out << "seed,method,d,ok,mu";
  for (const auto& m : kMetrics) out << ',' << m;
  out << '\n';
  for (const auto& t : trials) {
    out << t.seed << ',' << t.method << ',' << t.d << ',' << (t.ok ? 1 : 0) << ',' << io::format_double(t.mu);
    for (const auto& m : kMetrics) {
      const double v = trial_metric(t, m);
      out << ',';
      if (std::isfinite(v)) out << io::format_double(v);
    }
    out << '\n';
  }
  return out.str();
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  io::write_json(dir / "report.json", report.to_json());
  io::write_text(dir / "metrics.csv", report.metrics_csv());
  io::write_json(dir / "timings.json", report.timings);
}

// Runner -------------------------------------------------------------------------

namespace {

struct Method {
  std::string name;
  Eigen::Index d;
  std::function<SensingMatrix(std::uint64_t)> build;
};

json aggregate(const std::vector<TrialMetrics>& trials, const std::vector<std::string>& names,
               const std::vector<std::string>& baselines) {
  json agg = json::object();
  for (const auto& name : names) {
    json per = json::object();
    for (const auto& metric : kMetrics) {
      std::vector<double> v;
      for (const auto& t : trials) {
        const double x = trial_metric(t, metric);
        if (t.method == name && std::isfinite(x)) v.push_back(x);
      }
      if (v.empty()) {
        per[metric] = {{"mean", nullptr}, {"std", nullptr}, {"n", 0}};
        continue;
      }
      double mean = 0.0, var = 0.0;
      for (const double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (const double x : v) var += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
      per[metric] = {{"mean", mean}, {"std", sd}, {"n", v.size()}};
    }
    agg[name] = per;
  }
  if (!baselines.empty()) {
    json ext = json::object();
    for (const auto& metric : kMetrics) {
      const bool up = metric_higher_is_better(metric);
      // Baselines with no value for this metric take no part.
      std::string best, worst;
      double vb = 0.0, vw = 0.0;
      for (const auto& b : baselines) {
        const json& mean = agg[b][metric]["mean"];
        if (mean.is_null()) continue;
        const double v = mean.get<double>();
        if (best.empty() || (up ? v > vb : v < vb)) best = b, vb = v;
        if (worst.empty() || (up ? v < vw : v > vw)) worst = b, vw = v;
      }
      ext[metric] = best.empty() ? json{{"best", nullptr}, {"worst", nullptr}}
                                 : json{{"best", best}, {"worst", worst}};
    }
    agg["baseline"] = ext;
  }
  return agg;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  cfg.validate();
  cfg.causal.clime = cfg.clime;
  ExperimentReport report;
  report.config = cfg.to_json();
  report.design = json::object();
  report.timings = json::object();

  auto wants = [&](const std::string& m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
  };

  // Designs do not depend on the seed.
  RegularDesignSpec spec = cfg.design;
  spec.p = static_cast<double>(cfg.p);
  spec.k = cfg.k;
  const RegularDesign reg = design_regular(spec);
  const Eigen::Index d = cfg.d > 0 ? cfg.d
                                   : std::max<Eigen::Index>(2, std::lround(cfg.p * reg.objective));
  report.design["regular"] = io::to_json(reg);
  report.design["d"] = d;

  std::vector<Method> methods;
  std::vector<std::string> baselines;
  if (wants("de")) {
    const RegularPlan plan = fit_regular(reg, cfg.p, d, cfg.de_col_degree);
    report.design["regular_instance"] = {{"lambda", io::to_json(plan.lambda)}, {"rho", io::to_json(plan.rho)}};
    methods.push_back({"de", d, [plan, cfg](std::uint64_t s) {
                         return sample_sensing_matrix(plan.lambda, plan.rho, plan.d, cfg.p, std::nullopt, s);
                       }});
  }
  if (wants("pref")) {
    const PrefPlan plan = plan_preferential(cfg, d);
    report.design["preferential"] = io::to_json(plan.design);
    report.design["preferential_instance"] = {{"rho_h", io::to_json(plan.rho_h)},
                                              {"rho_l", io::to_json(plan.rho_l)}};
    methods.push_back({"pref", d, [plan, cfg, d](std::uint64_t s) {
                         return sample_preferential_matrix(plan.design.lambda_h, plan.design.lambda_l,
                                                           plan.rho_h, plan.rho_l, d, cfg.n_h,
                                                           cfg.p - cfg.n_h, std::nullopt, s);
                       }});
  }
  if (wants("baseline")) {
    for (const int delta : cfg.deltas) {
      if (delta > d) continue;
      const std::string name = "bs" + std::to_string(delta);
      baselines.push_back(name);
      methods.push_back({name, d, [delta, d, cfg](std::uint64_t s) {
                           return baseline_left_regular(delta, d, cfg.p, s);
                         }});
    }
  }

  const std::optional<Eigen::Index> hh =
      cfg.n_h > 0 ? std::optional<Eigen::Index>(cfg.n_h) : std::nullopt;

  // Seeds run on a small worker pool; results land in per-seed slots and are
  // merged in seed order, so the report does not depend on scheduling.
  struct SeedResult {
    std::vector<TrialMetrics> trials;
    json timings = json::object();
    std::exception_ptr failure;
  };
  std::vector<SeedResult> results(cfg.seeds.size());
  auto run_seed = [&](std::size_t si) {
    const std::uint64_t seed = cfg.seeds[si];
    SeedResult& out = results[si];
    StageClock clock(out.timings);
    const Gbn g = gen_er_dag(cfg.p, cfg.edge_factor / static_cast<double>(cfg.p), cfg.weight,
                             mix_seed(seed, 1), cfg.noise_var);
    const Eigen::MatrixXd sigma = true_covariance(g);
    const SampleSet xs = simulate_sem(g, cfg.samples, mix_seed(seed, 2));
    clock.lap("shared", "simulate");
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const Method& m = methods[mi];
      TrialMetrics t;
      t.seed = seed;
      t.method = m.name;
      t.d = m.d;
      std::string stage = "sample";
      try {
        const SensingMatrix a = m.build(mix_seed(seed, 100 + mi));
        clock.lap(m.name, "sample");
        stage = "measure";
        const SampleSet ys = measure({a.entries, cfg.meas_noise_std}, xs, mix_seed(seed, 3));
        const Eigen::MatrixXd sigma_y = sample_covariance(ys);
        clock.lap(m.name, "measure");
        stage = "recover";
        const MuPath path = select_mu(a.entries, sigma_y, cfg.recovery, cfg.misfit_target, cfg.mu_grid,
                                      cfg.mu_span);
        const Eigen::MatrixXd& est = path.estimate.sigma_hat;
        t.mu = path.grid[path.chosen];
        clock.lap(m.name, "recover");
        t.cov_mae = metric_mae(est, sigma);
        const PrecisionRecall cov = metric_support_pr(est, sigma);
        t.cov_precision = cov.precision;
        t.cov_recall = cov.recall;
        if (hh) {
          t.cov_mae_hh = metric_mae(est, sigma, hh);
          const PrecisionRecall c = metric_support_pr(est, sigma, 0.1, 1e-10, hh);
          t.cov_precision_hh = c.precision;
          t.cov_recall_hh = c.recall;
        }
        if (cfg.structure) {
          stage = "clime";
          const PrecisionEstimate omega = clime(est, cfg.clime);
          clock.lap(m.name, "clime");
          stage = "structure";
          const GraphEstimate graph = recover_structure(est, omega.omega_hat, cfg.causal);
          clock.lap(m.name, "structure");
          const PrecisionRecall e = metric_edge_pr(graph, g);
          t.edge_precision = e.precision;
          t.edge_recall = e.recall;
          if (hh) {
            const PrecisionRecall eh = metric_edge_pr(graph, g, true, cfg.n_h);
            t.edge_precision_hh = eh.precision;
            t.edge_recall_hh = eh.recall;
          }
        }
      } catch (const Error& e) {
        t.ok = false;
        t.failed_stage = stage;
        t.error = e.what();
      }
      out.trials.push_back(std::move(t));
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                             static_cast<unsigned>(cfg.seeds.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t si = next++; si < cfg.seeds.size(); si = next++) {
        try {
          run_seed(si);
        } catch (...) {
          results[si].failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (SeedResult& r : results) {
    if (r.failure) std::rethrow_exception(r.failure);
    for (auto& t : r.trials) report.trials.push_back(std::move(t));
    for (const auto& [method, stages] : r.timings.items())
      for (const auto& [stage, secs] : stages.items()) {
        json& slot = report.timings[method][stage];
        slot = (slot.is_number() ? slot.get<double>() : 0.0) + secs.get<double>();
      }
  }

  std::vector<std::string> names;
  for (const auto& m : methods) names.push_back(m.name);
  report.aggregates = aggregate(report.trials, names, baselines);
  return report;
}

}  // namespace decov
