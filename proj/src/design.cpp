#include "decov/design.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "decov/common.hpp"
#include "decov/lp.hpp"

namespace decov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGolden = 0.6180339887498949;

// j^exponent for degrees 2..max_degree.
Eigen::RowVectorXd degree_powers(int max_degree, double exponent) {
  Eigen::RowVectorXd row(max_degree - 1);
  for (int j = 2; j <= max_degree; ++j) row[j - 2] = std::pow(static_cast<double>(j), exponent);
  return row;
}

DegreeDistribution from_free(const Eigen::VectorXd& x, int max_degree) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(max_degree);
  w.tail(max_degree - 1) = (x.array() < 1e-12).select(0.0, x);
  return DegreeDistribution::cleaned(std::move(w));
}

// min sum j lambda_j  s.t.  sum lambda_j / sqrt(j) <= h_max, sum lambda_j / j <= m_max.
std::optional<DegreeDistribution> solve_lambda(int d_v, double h_max, double m_max) {
  const int n = d_v - 1;
  LinearProgram lp;
  lp.cost = degree_powers(d_v, 1.0).transpose();
  lp.a_eq = Eigen::MatrixXd::Ones(1, n);
  lp.b_eq = Eigen::VectorXd::Ones(1);
  lp.a_ub.resize(2, n);
  lp.a_ub.row(0) = degree_powers(d_v, -0.5);
  lp.a_ub.row(1) = degree_powers(d_v, -1.0);
  lp.b_ub = Eigen::Vector2d(h_max, m_max);
  const LpResult r = lp_solve(lp);
  if (r.status != LpStatus::optimal) return std::nullopt;
  return from_free(r.x, d_v);
}

// max sum i rho_i  s.t.  sum sqrt(i) rho_i <= rh_max, sum i rho_i <= r1_max.
std::optional<DegreeDistribution> solve_rho(int d_c, double rh_max, double r1_max) {
  const int n = d_c - 1;
  LinearProgram lp;
  lp.cost = -degree_powers(d_c, 1.0).transpose();
  lp.a_eq = Eigen::MatrixXd::Ones(1, n);
  lp.b_eq = Eigen::VectorXd::Ones(1);
  lp.a_ub.resize(2, n);
  lp.a_ub.row(0) = degree_powers(d_c, 0.5);
  lp.a_ub.row(1) = degree_powers(d_c, 1.0);
  lp.b_ub = Eigen::Vector2d(rh_max, r1_max);
  const LpResult r = lp_solve(lp);
  if (r.status != LpStatus::optimal) return std::nullopt;
  return from_free(r.x, d_c);
}

struct Candidate {
  DegreeDistribution lambda, rho;
  double objective = kInf;
};

double ratio(const DegreeDistribution& lambda, const DegreeDistribution& rho) {
  return lambda.mean() / rho.mean();
}

// Product bounds: sqrt(a1) = rh * h <= a1_root, sqrt(a2) = r1 * m <= a2_root.
struct Bounds {
  double a1_root, a2_root;
};

Bounds theorem_bounds(const RegularDesignSpec& s) {
  const double b2 = s.p * s.p / (2.0 * s.c0 * s.k * s.k * std::log(s.p / s.k));
  return {std::sqrt(s.p / s.k), std::sqrt(b2)};
}

void keep_best(std::optional<Candidate>& best, const DegreeDistribution& lambda,
               const DegreeDistribution& rho) {
  const double obj = ratio(lambda, rho);
  if (!best || obj < best->objective - 1e-15) best = Candidate{lambda, rho, obj};
}

std::optional<Candidate> alternate(const Bounds& b, const RegularDesignSpec& s,
                                   DegreeDistribution lambda, DegreeDistribution rho) {
  double obj = ratio(lambda, rho);
  for (int round = 0; round < 100; ++round) {
    const auto next_rho = solve_rho(s.d_c, b.a1_root / lambda.moment(-0.5),
                                    b.a2_root / lambda.moment(-1.0));
    if (!next_rho) break;
    const auto next_lambda = solve_lambda(s.d_v, b.a1_root / next_rho->moment(0.5),
                                          b.a2_root / next_rho->moment(1.0));
    if (!next_lambda) break;
    const double next_obj = ratio(*next_lambda, *next_rho);
    const bool improved = next_obj < obj - 1e-6;
    if (next_obj <= obj) {
      lambda = *next_lambda;
      rho = *next_rho;
      obj = next_obj;
    }
    if (!improved) break;
  }
  return Candidate{lambda, rho, obj};
}

// Row law with mean t supported on {2, d_c}; minimizes sum sqrt(i) rho_i at that mean.
DegreeDistribution chord_rho(int d_c, double t) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d_c);
  if (d_c == 2) {
    w[1] = 1.0;
  } else {
    const double hi = std::clamp((t - 2.0) / (d_c - 2.0), 0.0, 1.0);
    w[1] += 1.0 - hi;
    w[d_c - 1] += hi;
  }
  return DegreeDistribution::cleaned(std::move(w));
}

std::optional<Candidate> profile_at(const Bounds& b, const RegularDesignSpec& s, double t) {
  const DegreeDistribution rho = chord_rho(s.d_c, t);
  const auto lambda = solve_lambda(s.d_v, b.a1_root / rho.moment(0.5), b.a2_root / rho.moment(1.0));
  if (!lambda) return std::nullopt;
  return Candidate{*lambda, rho, ratio(*lambda, rho)};
}

// Scan of the row mean t over [2, d_c], then golden-section refinement.
std::optional<Candidate> profile_search(const Bounds& b, const RegularDesignSpec& s) {
  std::optional<Candidate> best;
  double best_t = 2.0;
  const double step = 1.0 / 256.0;
  const int steps = static_cast<int>(std::lround((s.d_c - 2.0) / step));
  for (int i = 0; i <= steps; ++i) {
    const double t = 2.0 + i * step;
    const auto c = profile_at(b, s, t);
    if (c && (!best || c->objective < best->objective - 1e-15)) {
      best = c;
      best_t = t;
    }
  }
  if (!best) return best;
  auto eval = [&](double t) {
    const auto c = profile_at(b, s, t);
    return c ? c->objective : kInf;
  };
  double lo = std::max(2.0, best_t - step);
  double hi = std::min<double>(s.d_c, best_t + step);
  double x1 = hi - kGolden * (hi - lo);
  double x2 = lo + kGolden * (hi - lo);
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = eval(x2);
    }
  }
  const auto refined = profile_at(b, s, f1 <= f2 ? x1 : x2);
  if (refined && refined->objective < best->objective) best = refined;
  return best;
}

[[noreturn]] void throw_regular_infeasible(const Bounds& b, const RegularDesignSpec& s) {
  // Smallest attainable sqrt(a1) and sqrt(a2) use the cheapest row law (degree 2)
  // against the densest column law (degree d_v).
  const double a1_min = std::sqrt(2.0) / std::sqrt(static_cast<double>(s.d_v));
  const double a2_min = 2.0 / s.d_v;
  std::string binding = a1_min > b.a1_root ? "a1^2 <= p^2/k^2" : "a2 <= p^2/(2 c0 k^2 log(p/k))";
  if (a1_min <= b.a1_root && a2_min <= b.a2_root) binding = "a1^2 <= p^2/k^2 with a2 bound jointly";
  throw InfeasibleError("design_regular: no degree distribution within the maximum degrees meets " +
                        binding);
}

}  // namespace

Theorem31Report check_theorem31(const DegreeDistribution& lambda, const DegreeDistribution& rho,
                                double p, double k, double c0) {
  if (!(k > 0.0 && k < p)) throw ParameterError("check_theorem31 requires 0 < k < p");
  if (!(c0 > 0.0)) throw ParameterError("check_theorem31 requires c0 > 0");
  const double a1 = coeff_a1(lambda, rho);
  Theorem31Report r;
  r.a1_sq = a1 * a1;
  r.a1_sq_bound = p * p / (k * k);
  r.a2 = coeff_a2(lambda, rho);
  r.a2_bound = p * p / (2.0 * c0 * k * k * std::log(p / k));
  return r;
}

void RegularDesignSpec::validate() const {
  if (!(k >= 2.0 && k < p)) throw ParameterError("regular design requires 2 <= k < p");
  if (!(c0 > 0.0)) throw ParameterError("regular design requires c0 > 0");
  if (d_v < 2 || d_c < 2) throw ParameterError("regular design requires d_v, d_c >= 2");
}

RegularDesign design_regular(const RegularDesignSpec& spec) {
  spec.validate();
  const Bounds b = theorem_bounds(spec);
  std::optional<Candidate> best;

  const DegreeDistribution row_point = DegreeDistribution::point_mass(spec.d_c);
  const DegreeDistribution col_point = DegreeDistribution::point_mass(spec.d_v);

  std::optional<DegreeDistribution> row_lambda;
  std::optional<DegreeDistribution> col_rho;
  if (spec.mode != DesignMode::fixed_col) {
    row_lambda = solve_lambda(spec.d_v, b.a1_root / std::sqrt(static_cast<double>(spec.d_c)),
                              b.a2_root / spec.d_c);
    if (row_lambda) keep_best(best, *row_lambda, row_point);
  }
  if (spec.mode != DesignMode::fixed_row) {
    col_rho = solve_rho(spec.d_c, b.a1_root * std::sqrt(static_cast<double>(spec.d_v)),
                        b.a2_root * spec.d_v);
    if (col_rho) keep_best(best, col_point, *col_rho);
  }
  if (spec.mode == DesignMode::both) {
    if (row_lambda)
      if (auto c = alternate(b, spec, *row_lambda, row_point)) keep_best(best, c->lambda, c->rho);
    if (col_rho)
      if (auto c = alternate(b, spec, col_point, *col_rho)) keep_best(best, c->lambda, c->rho);
    if (auto c = profile_search(b, spec)) keep_best(best, c->lambda, c->rho);
  }
  if (!best) throw_regular_infeasible(b, spec);

  RegularDesign out{best->lambda, best->rho, best->objective, {}};
  const Theorem31Report r = check_theorem31(out.lambda, out.rho, spec.p, spec.k, spec.c0);
  out.slacks["a1_sq"] = r.a1_slack();
  out.slacks["a2"] = r.a2_slack();
  return out;
}

// Preferential design --------------------------------------------------------

void PreferentialDesignSpec::validate() const {
  if (n_h < 1 || n_l < 1) throw ParameterError("preferential design requires n_h, n_l >= 1");
  const double nhh = double(n_h) * n_h, nhl = double(n_h) * n_l, nll = double(n_l) * n_l;
  if (!(k_hh > 0.0 && k_hh < nhh) || !(k_hl > 0.0 && k_hl < nhl) || !(k_ll > 0.0 && k_ll < nll))
    throw ParameterError("preferential design requires 0 < k_BB < n_BB for every block");
  if (!(c0 > 0.0)) throw ParameterError("preferential design requires c0 > 0");
  if (d_vh < 2 || d_vl < 2) throw ParameterError("preferential design requires d_vH, d_vL >= 2");
}

double PreferentialDesignSpec::beta_hh_or_default() const {
  return beta_hh > 0.0 ? beta_hh : c0 * std::log(double(n_h) * n_h / k_hh);
}
double PreferentialDesignSpec::beta_hl_or_default() const {
  return beta_hl > 0.0 ? beta_hl : c0 * std::log(double(n_h) * n_l / k_hl);
}
double PreferentialDesignSpec::beta_ll_or_default() const {
  return beta_ll > 0.0 ? beta_ll : c0 * std::log(double(n_l) * n_l / k_ll);
}

namespace {

struct PrefGeometry {
  double eps_hh, eps_hl, eps_ll;
  double q_hh, q_hl, q_ll;  // quadratic form coefficients, times the row factor
  double r1h, r1l;
};

PrefGeometry pref_geometry(const PreferentialDesignSpec& s, const DegreeDistribution& rho_h,
                           const DegreeDistribution& rho_l) {
  PrefGeometry g;
  g.eps_hh = s.k_hh / (double(s.n_h) * s.n_h);
  g.eps_hl = s.k_hl / (double(s.n_h) * s.n_l);
  g.eps_ll = s.k_ll / (double(s.n_l) * s.n_l);
  g.r1h = rho_h.mean();
  g.r1l = rho_l.mean();
  const double row = g.r1h * g.r1h + g.r1l * g.r1l;
  g.q_hh = s.beta_hh_or_default() * g.eps_hh * row;
  g.q_hl = s.beta_hl_or_default() * g.eps_hl * row;
  g.q_ll = s.beta_ll_or_default() * g.eps_ll * row;
  return g;
}

double req2_lhs(const PrefGeometry& g, double mh, double ml) {
  return g.q_hh * mh * mh + 2.0 * g.q_hl * mh * ml + g.q_ll * ml * ml;
}

enum class PrefStage { consistency, ordering, full };

// LP over (lambda_H, lambda_L) with the requirement-2 region replaced by the box
// m_H <= cap_h, m_L <= cap_l.
LpResult pref_lp(const PreferentialDesignSpec& s, const PrefGeometry& g, PrefStage stage,
                 double cap_h, double cap_l, double p) {
  const int nh = s.d_vh - 1, nl = s.d_vl - 1, n = nh + nl;
  LinearProgram lp;
  lp.cost.resize(n);
  lp.cost.head(nh) = s.n_h * degree_powers(s.d_vh, 1.0).transpose() / ((g.r1h + g.r1l) * p);
  lp.cost.tail(nl) = s.n_l * degree_powers(s.d_vl, 1.0).transpose() / ((g.r1h + g.r1l) * p);

  lp.a_eq = Eigen::MatrixXd::Zero(3, n);
  lp.a_eq.row(0).head(nh).setOnes();
  lp.a_eq.row(1).tail(nl).setOnes();
  lp.a_eq.row(2).head(nh) = s.n_h * g.r1l * degree_powers(s.d_vh, 1.0);
  lp.a_eq.row(2).tail(nl) = -s.n_l * g.r1h * degree_powers(s.d_vl, 1.0);
  lp.b_eq = Eigen::Vector3d(1.0, 1.0, 0.0);

  const int rows = stage == PrefStage::consistency ? 0 : stage == PrefStage::ordering ? 2 : 4;
  lp.a_ub = Eigen::MatrixXd::Zero(rows, n);
  lp.b_ub = Eigen::VectorXd::Zero(rows);
  if (rows >= 2) {
    lp.a_ub.row(0).head(nh) = std::sqrt(g.eps_hh) * degree_powers(s.d_vh, -0.5);
    lp.a_ub.row(0).tail(nl) = -std::sqrt(g.eps_hl) * degree_powers(s.d_vl, -0.5);
    lp.a_ub.row(1).head(nh) = std::pow(g.eps_hh, 0.25) * degree_powers(s.d_vh, -0.5);
    lp.a_ub.row(1).tail(nl) = -std::pow(g.eps_ll, 0.25) * degree_powers(s.d_vl, -0.5);
  }
  if (rows == 4) {
    lp.a_ub.row(2).head(nh) = degree_powers(s.d_vh, -1.0);
    lp.a_ub.row(3).tail(nl) = degree_powers(s.d_vl, -1.0);
    lp.b_ub[2] = cap_h;
    lp.b_ub[3] = cap_l;
  }
  return lp_solve(lp);
}

}  // namespace

SlackReport preferential_slacks(const PreferentialDesignSpec& spec, const DegreeDistribution& lambda_h,
                                const DegreeDistribution& lambda_l, const DegreeDistribution& rho_h,
                                const DegreeDistribution& rho_l) {
  const PrefGeometry g = pref_geometry(spec, rho_h, rho_l);
  const double c1h = lambda_h.mean(), c1l = lambda_l.mean();
  const double hh = lambda_h.moment(-0.5), hl = lambda_l.moment(-0.5);
  const double d_h = spec.n_h * c1h / g.r1h;
  const double d_l = spec.n_l * c1l / g.r1l;
  SlackReport r;
  // Relative mismatch of the row counts implied by each block.
  r["requirement1"] = -std::abs(d_h - d_l) / std::max(d_h, d_l);
  r["requirement2"] = 1.0 - req2_lhs(g, lambda_h.moment(-1.0), lambda_l.moment(-1.0));
  r["requirement3_hl"] = std::sqrt(g.eps_hl) * hl - std::sqrt(g.eps_hh) * hh;
  r["requirement3_ll"] = std::pow(g.eps_ll, 0.25) * hl - std::pow(g.eps_hh, 0.25) * hh;
  return r;
}

PreferentialDesign design_preferential(const PreferentialDesignSpec& spec,
                                       const DegreeDistribution& rho_h,
                                       const DegreeDistribution& rho_l) {
  spec.validate();
  const double p = double(spec.n_h) + spec.n_l;
  const PrefGeometry g = pref_geometry(spec, rho_h, rho_l);

  // The requirement-2 region {q(m_H, m_L) <= 1} is downward closed in the positive
  // quadrant, so it is the union of the boxes under its boundary points. Each box
  // gives an exact LP; scan the boundary angle and refine.
  auto solve_at = [&](double theta) -> std::optional<LpResult> {
    const double c = std::cos(theta), sn = std::sin(theta);
    const double r = 1.0 / std::sqrt(req2_lhs(g, c, sn));
    LpResult res = pref_lp(spec, g, PrefStage::full, r * c, r * sn, p);
    if (res.status != LpStatus::optimal) return std::nullopt;
    return res;
  };
  auto value_at = [&](double theta) {
    const auto r = solve_at(theta);
    return r ? r->objective : kInf;
  };

  const int grid = 256;
  const double half_pi = std::numbers::pi / 2.0;
  std::optional<LpResult> best;
  double best_theta = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double theta = half_pi * i / grid;
    auto r = solve_at(theta);
    if (r && (!best || r->objective < best->objective - 1e-15)) {
      best = r;
      best_theta = theta;
    }
  }
  if (!best) {
    const char* which = "requirement 2 (error contraction)";
    if (pref_lp(spec, g, PrefStage::consistency, 0, 0, p).status != LpStatus::optimal)
      which = "requirement 1 (row-count consistency)";
    else if (pref_lp(spec, g, PrefStage::ordering, 0, 0, p).status != LpStatus::optimal)
      which = "requirement 3 (error ordering)";
    throw InfeasibleError(std::string("design_preferential: infeasible; first violated: ") + which);
  }
  double lo = std::max(0.0, best_theta - half_pi / grid);
  double hi = std::min(half_pi, best_theta + half_pi / grid);
  double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
  double f1 = value_at(x1), f2 = value_at(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    if (f1 <= f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = value_at(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = value_at(x2);
    }
  }
  if (auto r = solve_at(f1 <= f2 ? x1 : x2); r && r->objective < best->objective) best = r;

  const int nh = spec.d_vh - 1;
  PreferentialDesign out{from_free(best->x.head(nh), spec.d_vh),
                         from_free(best->x.tail(spec.d_vl - 1), spec.d_vl), rho_h, rho_l, 0.0,
                         0.0, 0.0, {}};
  const double c1h = out.lambda_h.mean(), c1l = out.lambda_l.mean();
  out.d = (spec.n_h * c1h + spec.n_l * c1l) / (g.r1h + g.r1l);
  out.objective = out.d / p;
  out.consistency_ratio = (g.r1h / c1h) / (g.r1l / c1l);
  out.slacks = preferential_slacks(spec, out.lambda_h, out.lambda_l, rho_h, rho_l);
  return out;
}

}  // namespace decov
