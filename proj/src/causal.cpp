#include "decov/causal.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "decov/common.hpp"

namespace decov {

Eigen::MatrixXd GraphEstimate::adjacency(Eigen::Index p) const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(p, p);
  for (const auto& e : edges) w(e.parent, e.child) = e.weight;
  return w;
}

std::vector<Eigen::Index> markov_blanket(const Eigen::MatrixXd& omega, Eigen::Index i, double zero_tol) {
  if (omega.rows() != omega.cols()) throw ParameterError("markov_blanket: omega must be square");
  if (i < 0 || i >= omega.rows()) throw ParameterError("markov_blanket: node out of range");
  std::vector<Eigen::Index> mb;
  for (Eigen::Index j = 0; j < omega.cols(); ++j)
    if (j != i && std::abs(omega(i, j)) > zero_tol) mb.push_back(j);
  return mb;
}

Eigen::VectorXd regression_coeffs(const Eigen::MatrixXd& sigma, Eigen::Index i,
                                  const std::vector<Eigen::Index>& mb) {
  const Eigen::Index p = sigma.rows();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  if (mb.empty()) return theta;
  const Eigen::Index m = static_cast<Eigen::Index>(mb.size());
  Eigen::MatrixXd s_mm(m, m);
  Eigen::VectorXd s_mi(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    s_mi[a] = sigma(mb[a], i);
    for (Eigen::Index b = 0; b < m; ++b) s_mm(a, b) = sigma(mb[a], mb[b]);
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(s_mm);
  if (!lu.isInvertible())
    throw NumericError("regression_coeffs: covariance of the Markov blanket of node " +
                       std::to_string(i) + " is singular");
  const Eigen::VectorXd coef = lu.solve(s_mi);
  for (Eigen::Index a = 0; a < m; ++a) theta[mb[a]] = coef[a];
  return theta;
}

double terminal_score(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& thetas, Eigen::Index i,
                      const std::vector<Eigen::Index>& mb) {
  double r = 0.0;
  for (const Eigen::Index j : mb) {
    const double th = thetas(j, i);
    if (th == 0.0) return std::numeric_limits<double>::infinity();
    r = std::max(r, std::abs(omega(i, j) / th));
  }
  return r;
}

Eigen::Index find_terminal(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& thetas,
                           const std::vector<std::vector<Eigen::Index>>& blankets,
                           const std::vector<Eigen::Index>& candidates) {
  if (candidates.empty()) throw ParameterError("find_terminal: no candidates");
  Eigen::Index best = -1;
  double best_r = std::numeric_limits<double>::infinity();
  for (const Eigen::Index i : candidates) {
    const double r = terminal_score(omega, thetas, i, blankets.at(i));
    if (r < best_r || (r == best_r && best >= 0 && i < best)) {
      best_r = r;
      best = i;
    }
  }
  if (best < 0) throw StructuralError("find_terminal: every candidate has an infinite score");
  return best;
}

Eigen::MatrixXd marginalize(const Eigen::MatrixXd& sigma, Eigen::Index v) {
  const Eigen::Index p = sigma.rows();
  if (p < 2) throw ParameterError("marginalize: need at least two nodes");
  if (v < 0 || v >= p) throw ParameterError("marginalize: node out of range");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < p; ++i)
    if (i != v) keep.push_back(i);
  return sigma(keep, keep);
}

GraphEstimate recover_structure(const Eigen::MatrixXd& sigma_hat, const Eigen::MatrixXd& omega_hat,
                                const StructureConfig& cfg) {
  const Eigen::Index p = sigma_hat.rows();
  if (sigma_hat.cols() != p || omega_hat.rows() != p || omega_hat.cols() != p)
    throw ParameterError("recover_structure: sigma and omega must be square of equal size");
  if (p < 1) throw ParameterError("recover_structure: empty input");

  GraphEstimate est;
  std::vector<Eigen::Index> label(p);  // current position -> original node
  for (Eigen::Index i = 0; i < p; ++i) label[i] = i;
  Eigen::MatrixXd sigma = sigma_hat;
  Eigen::MatrixXd omega = omega_hat;

  for (int round = 0; sigma.rows() > 1; ++round) {
    const Eigen::Index n = sigma.rows();
    try {
      const double tol = cfg.zero_tol_abs.value_or(cfg.zero_tol_rel * omega.cwiseAbs().maxCoeff());
      std::vector<std::vector<Eigen::Index>> blankets(n);
      Eigen::MatrixXd thetas(n, n);
      std::vector<Eigen::Index> candidates(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        blankets[i] = markov_blanket(omega, i, tol);
        thetas.col(i) = regression_coeffs(sigma, i, blankets[i]);
        candidates[i] = i;
      }
      const Eigen::Index v = find_terminal(omega, thetas, blankets, candidates);
      for (const Eigen::Index j : blankets[v]) est.edges.push_back({label[j], label[v], thetas(j, v)});
      est.order.push_back(label[v]);
      label.erase(label.begin() + v);
      sigma = marginalize(sigma, v);
      if (cfg.recompute == PrecisionUpdate::inverse) {
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
          throw NumericError("reduced covariance is not positive definite");
        omega = ldlt.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));
        omega = 0.5 * (omega + omega.transpose()).eval();
      } else {
        omega = clime(sigma, cfg.clime).omega_hat;
      }
    } catch (const Error& e) {
      throw NumericError("recover_structure: elimination round " + std::to_string(round) + ": " +
                         e.what());
    }
  }
  est.order.push_back(label.front());
  return est;
}

}  // namespace decov
