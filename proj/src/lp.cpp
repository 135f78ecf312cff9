#include "decov/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "decov/common.hpp"

namespace decov {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-10;
constexpr int kDegenerateRun = 20;

class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : t_(Eigen::MatrixXd::Zero(rows + 1, cols + 1)) {}

  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  double& at(Eigen::Index r, Eigen::Index c) { return t_(r, c); }
  double& rhs(Eigen::Index r) { return t_(r, cols()); }
  double& reduced(Eigen::Index c) { return t_(rows(), c); }
  double value() const { return -t_(rows(), cols()); }

  std::vector<Eigen::Index> basis;

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    t_(r, c) = 1.0;
    basis[r] = c;
  }

  // Rebuild the objective row for costs c (zero past c.size()).
  void price(const Eigen::VectorXd& c) {
    t_.row(rows()).setZero();
    t_.row(rows()).head(c.size()) = c.transpose();
    for (Eigen::Index r = 0; r < rows(); ++r) {
      const Eigen::Index b = basis[r];
      const double cb = b < c.size() ? c[b] : 0.0;
      if (cb != 0.0) t_.row(rows()) -= cb * t_.row(r);
    }
  }

  // Runs simplex iterations over columns [0, allowed). Returns false when unbounded.
  bool optimize(Eigen::Index allowed, int& pivots) {
    const int cap = 200 * static_cast<int>(rows() + cols() + 10);
    int degenerate = 0;
    for (int iter = 0; iter < cap; ++iter) {
      const bool bland = degenerate >= kDegenerateRun;
      Eigen::Index enter = -1;
      double best = -kCostTol;
      for (Eigen::Index c = 0; c < allowed; ++c) {
        const double d = reduced(c);
        if (d < best) {
          enter = c;
          if (bland) break;
          best = d;
        }
      }
      if (enter < 0) return true;

      Eigen::Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < rows(); ++r) {
        const double a = at(r, enter);
        if (a <= kPivotTol) continue;
        const double q = rhs(r) / a;
        const bool better = leave < 0 || q < ratio - 1e-12 ||
                            (q <= ratio + 1e-12 && basis[r] < basis[leave]);
        if (better) {
          ratio = std::min(ratio, q);
          leave = r;
        }
      }
      if (leave < 0) return false;
      degenerate = ratio <= 1e-12 ? degenerate + 1 : 0;
      pivot(leave, enter);
      ++pivots;
    }
    throw NumericError("lp_solve: simplex iteration cap reached (cycling?)");
  }

 private:
  Eigen::MatrixXd t_;
};

}  // namespace

LpResult lp_solve(const LinearProgram& lp) {
  const Eigen::Index n = lp.cost.size();
  const Eigen::Index m_eq = lp.a_eq.rows();
  const Eigen::Index m_ub = lp.a_ub.rows();
  if ((m_eq > 0 && lp.a_eq.cols() != n) || lp.b_eq.size() != m_eq ||
      (m_ub > 0 && lp.a_ub.cols() != n) || lp.b_ub.size() != m_ub)
    throw ParameterError("lp_solve: inconsistent constraint dimensions");
  if (!lp.cost.allFinite() || !lp.a_eq.allFinite() || !lp.b_eq.allFinite() ||
      !lp.a_ub.allFinite() || !lp.b_ub.allFinite())
    throw ParameterError("lp_solve: non-finite input");

  const Eigen::Index m = m_eq + m_ub;
  const Eigen::Index slack0 = n;
  const Eigen::Index art0 = n + m_ub;
  Tableau tab(m, art0 + m);
  tab.basis.assign(m, 0);

  for (Eigen::Index r = 0; r < m; ++r) {
    const bool eq = r < m_eq;
    const Eigen::Index ur = r - m_eq;
    double b = eq ? lp.b_eq[r] : lp.b_ub[ur];
    const double sign = b < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index c = 0; c < n; ++c) tab.at(r, c) = sign * (eq ? lp.a_eq(r, c) : lp.a_ub(ur, c));
    if (!eq) tab.at(r, slack0 + ur) = sign;
    tab.rhs(r) = sign * b;
    tab.at(r, art0 + r) = 1.0;
    tab.basis[r] = art0 + r;
  }

  LpResult res;
  // Phase 1: minimize the sum of artificials.
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(art0 + m);
  phase1.tail(m).setOnes();
  tab.price(phase1);
  tab.optimize(art0 + m, res.pivots);
  double scale = 1.0;
  for (Eigen::Index r = 0; r < m; ++r) scale = std::max(scale, std::abs(tab.rhs(r)));
  if (tab.value() > 1e-9 * scale) {
    res.status = LpStatus::infeasible;
    return res;
  }
  // Drive remaining artificials out of the basis; rows with no other support are redundant.
  for (Eigen::Index r = 0; r < m; ++r) {
    if (tab.basis[r] < art0) continue;
    for (Eigen::Index c = 0; c < art0; ++c) {
      if (std::abs(tab.at(r, c)) > 1e-9) {
        tab.pivot(r, c);
        ++res.pivots;
        break;
      }
    }
  }

  // Phase 2 over original and slack columns only.
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(art0);
  phase2.head(n) = lp.cost;
  tab.price(phase2);
  if (!tab.optimize(art0, res.pivots)) {
    res.status = LpStatus::unbounded;
    return res;
  }

  res.status = LpStatus::optimal;
  res.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < m; ++r)
    if (tab.basis[r] < n) res.x[tab.basis[r]] = std::max(0.0, tab.rhs(r));
  res.objective = lp.cost.dot(res.x);
  return res;
}

}  // namespace decov
