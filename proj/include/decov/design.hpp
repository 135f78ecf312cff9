#pragma once

#include <map>
#include <string>

#include "decov/factorgraph.hpp"

namespace decov {

/// Named constraint slacks (bound - value); a constraint holds when its slack >= -tolerance.
using SlackReport = std::map<std::string, double>;

struct Theorem31Report {
  double a1_sq = 0.0, a1_sq_bound = 0.0;
  double a2 = 0.0, a2_bound = 0.0;

  double a1_slack() const { return a1_sq_bound - a1_sq; }
  double a2_slack() const { return a2_bound - a2; }
  bool a1_ok(double tol = 1e-9) const { return a1_slack() >= -tol; }
  bool a2_ok(double tol = 1e-9) const { return a2_slack() >= -tol; }
  bool feasible(double tol = 1e-9) const { return a1_ok(tol) && a2_ok(tol); }
};

/// a1^2 <= p^2 / k^2 and a2 <= p^2 / (2 c0 k^2 log(p / k)).
Theorem31Report check_theorem31(const DegreeDistribution& lambda, const DegreeDistribution& rho,
                                double p, double k, double c0 = 1.0);

enum class DesignMode { fixed_row, fixed_col, both };

struct RegularDesignSpec {
  double p = 100;
  double k = 10;
  double c0 = 1.0;
  int d_v = 8;
  int d_c = 8;
  DesignMode mode = DesignMode::both;

  void validate() const;
};

struct RegularDesign {
  DegreeDistribution lambda;  // column degrees
  DegreeDistribution rho;     // row degrees
  double objective = 0.0;     // d / p = mean(lambda) / mean(rho)
  SlackReport slacks;
};

RegularDesign design_regular(const RegularDesignSpec& spec);

/// Two column blocks H (first n_h) and L (last n_l). Sparsities count nonzero
/// covariance entries inside the n_h^2, n_h n_l and n_l^2 sized blocks.
struct PreferentialDesignSpec {
  int n_h = 50;
  int n_l = 150;
  double k_hh = 100, k_hl = 100, k_ll = 100;
  double c0 = 1.0;
  /// Per-block threshold weights; nonpositive entries take the default c0 log(n_BB / k_BB).
  double beta_hh = 0.0, beta_hl = 0.0, beta_ll = 0.0;
  int d_vh = 8, d_vl = 8;

  void validate() const;
  /// The high block should be the relatively denser one (k_hh / n_h > k_ll / n_l).
  bool priority_ordered() const { return k_hh * n_l > k_ll * n_h; }
  double beta_hh_or_default() const;
  double beta_hl_or_default() const;
  double beta_ll_or_default() const;
};

struct PreferentialDesign {
  DegreeDistribution lambda_h, lambda_l, rho_h, rho_l;
  double d = 0.0;          // implied number of rows
  double objective = 0.0;  // d / p
  /// (R1H / C1H) / (R1L / C1L); equals n_h / n_l when the row counts agree.
  double consistency_ratio = 0.0;
  SlackReport slacks;
};

/// Slacks of the preferential relaxations for a candidate design.
SlackReport preferential_slacks(const PreferentialDesignSpec& spec, const DegreeDistribution& lambda_h,
                                const DegreeDistribution& lambda_l, const DegreeDistribution& rho_h,
                                const DegreeDistribution& rho_l);

PreferentialDesign design_preferential(const PreferentialDesignSpec& spec,
                                       const DegreeDistribution& rho_h,
                                       const DegreeDistribution& rho_l);

}  // namespace decov
