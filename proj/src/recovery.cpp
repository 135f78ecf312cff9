#include "decov/recovery.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "decov/de.hpp"
#include "decov/lp.hpp"

namespace decov {

namespace {

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& m, double b) {
  return m.unaryExpr([b](double v) { return prox(v, b); });
}

struct LassoProblem {
  const Eigen::SparseMatrix<double>& a;
  const Eigen::MatrixXd& sigma_y;
  double mu;

  double misfit(const Eigen::MatrixXd& x) const { return (sigma_y - kron_apply(a, x)).norm(); }
  double objective(const Eigen::MatrixXd& x) const {
    const double r = misfit(x);
    return 0.5 * r * r + mu * x.cwiseAbs().sum();
  }
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& x) const {
    return kron_adjoint(a, kron_apply(a, x) - sigma_y);
  }
};

}  // namespace

void RecoveryConfig::validate() const {
  if (!(mu > 0.0)) throw ParameterError("recovery mu must be positive");
  if (!(tol > 0.0)) throw ParameterError("recovery tol must be positive");
  if (max_iters < 1) throw ParameterError("recovery max_iters must be >= 1");
}

double gram_spectral_norm(const Eigen::SparseMatrix<double>& a, int iters) {
  const Eigen::Index p = a.cols();
  Eigen::VectorXd v(p);
  for (Eigen::Index i = 0; i < p; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd w = a.transpose() * (a * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - est) <= 1e-12 * next) return next;
    est = next;
  }
  return est;
}

CovEstimate recover_covariance(const Eigen::SparseMatrix<double>& a, const Eigen::MatrixXd& sigma_y_in,
                               const RecoveryConfig& cfg, const std::optional<Eigen::MatrixXd>& warm) {
  cfg.validate();
  const Eigen::Index d = a.rows(), p = a.cols();
  if (sigma_y_in.rows() != d || sigma_y_in.cols() != d)
    throw ParameterError("recover_covariance: Sigma_Y must be d x d with d = rows(A)");
  if (!sigma_y_in.allFinite()) throw NumericError("recover_covariance: Sigma_Y is not finite");

  CovEstimate est;
  Eigen::MatrixXd sigma_y = sigma_y_in;
  if (!sigma_y.isApprox(sigma_y.transpose(), 0.0)) {
    sigma_y = 0.5 * (sigma_y_in + sigma_y_in.transpose());
    est.input_symmetrized = true;
  }

  const LassoProblem prob{a, sigma_y, cfg.mu};
  const double g = gram_spectral_norm(a);
  // The operator S -> A^T A S A^T A has norm ||A^T A||^2.
  const double lip = 1.05 * g * g;
  if (!(lip > 0.0)) {
    est.sigma_hat = Eigen::MatrixXd::Zero(p, p);
    est.residual = sigma_y.norm();
    est.converged = true;
    return est;
  }

  auto step_from = [&](const Eigen::MatrixXd& y) {
    Eigen::MatrixXd next = soft_threshold(y - prob.gradient(y) / lip, cfg.mu / lip);
    if (cfg.symmetrize) next = (0.5 * (next + next.transpose())).eval();  // eval: transpose aliases
    return next;
  };

  Eigen::MatrixXd x = warm ? *warm : Eigen::MatrixXd::Zero(p, p);
  if (x.rows() != p || x.cols() != p) throw ParameterError("recover_covariance: warm start has wrong shape");
  if (cfg.symmetrize) x = (0.5 * (x + x.transpose())).eval();
  double fx = prob.objective(x);
  est.objective_history.push_back(fx);
  Eigen::MatrixXd y = x;
  double t = 1.0;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    Eigen::MatrixXd xn = step_from(y);
    double fn = prob.objective(xn);
    if (fn > fx) {
      // Momentum overshot: restart from the last accepted iterate with a plain step.
      est.restarts.push_back(k);
      t = 1.0;
      xn = step_from(x);
      fn = prob.objective(xn);
      if (fn > fx) {
        est.iterations = k;
        est.converged = true;
        break;
      }
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    // Objective decrease alone stalls at round-off long before the iterates do.
    const double change = (xn - x).cwiseAbs().maxCoeff();
    x = std::move(xn);
    fx = fn;
    t = tn;
    est.objective_history.push_back(fx);
    est.iterations = k;
    if (change <= cfg.tol * std::max(1.0, x.cwiseAbs().maxCoeff())) {
      est.converged = true;
      break;
    }
  }
  est.sigma_hat = std::move(x);
  est.residual = prob.misfit(est.sigma_hat);
  return est;
}

MuPath select_mu(const Eigen::SparseMatrix<double>& a, const Eigen::MatrixXd& sigma_y,
                 const RecoveryConfig& base, double misfit_target, int points, double span) {
  if (points < 1) throw ParameterError("select_mu: need at least one grid point");
  if (!(span > 0.0 && span <= 1.0)) throw ParameterError("select_mu: span must lie in (0, 1]");
  const double mu_max = kron_adjoint(a, sigma_y).cwiseAbs().maxCoeff();
  const double scale = sigma_y.norm();
  MuPath path;
  if (!(mu_max > 0.0) || !(scale > 0.0)) {
    RecoveryConfig cfg = base;
    cfg.mu = 1.0;
    path.grid = {1.0};
    path.estimate = recover_covariance(a, sigma_y, cfg);
    path.misfits = {0.0};
    return path;
  }
  std::optional<Eigen::MatrixXd> warm;
  std::optional<std::size_t> pick;
  for (int i = 0; i < points; ++i) {
    const double frac = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    RecoveryConfig cfg = base;
    cfg.mu = mu_max * std::pow(span, frac);
    CovEstimate e = recover_covariance(a, sigma_y, cfg, warm);
    warm = e.sigma_hat;
    path.grid.push_back(cfg.mu);
    path.misfits.push_back(e.residual / scale);
    if (!pick && path.misfits.back() <= misfit_target) {
      pick = path.grid.size() - 1;
      path.estimate = std::move(e);
      break;
    }
    if (i == points - 1) path.estimate = std::move(e);
  }
  path.chosen = pick.value_or(path.grid.size() - 1);
  return path;
}

// CLIME ---------------------------------------------------------------------

std::optional<Eigen::VectorXd> clime_column_lp(const Eigen::MatrixXd& s, Eigen::Index i,
                                               double lambda) {
  const Eigen::Index p = s.rows();
  LinearProgram lp;
  lp.cost = Eigen::VectorXd::Ones(2 * p);
  lp.a_ub.resize(2 * p, 2 * p);
  lp.a_ub << s, -s, -s, s;
  lp.b_ub = Eigen::VectorXd::Constant(2 * p, lambda);
  lp.b_ub[i] += 1.0;
  lp.b_ub[p + i] -= 1.0;
  const LpResult r = lp_solve(lp);
  if (r.status != LpStatus::optimal) return std::nullopt;
  return Eigen::VectorXd(r.x.head(p) - r.x.tail(p));
}

namespace {

// Restricted LP on a candidate support; cheap exact polish of a first-order solution.
std::optional<Eigen::VectorXd> polish_on_support(const Eigen::MatrixXd& s, Eigen::Index i, double lambda,
                                                 const std::vector<Eigen::Index>& support) {
  const Eigen::Index p = s.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(support.size());
  if (m == 0) return std::nullopt;
  Eigen::MatrixXd sub(p, m);
  for (Eigen::Index c = 0; c < m; ++c) sub.col(c) = s.col(support[c]);
  LinearProgram lp;
  lp.cost = Eigen::VectorXd::Ones(2 * m);
  lp.a_ub.resize(2 * p, 2 * m);
  lp.a_ub << sub, -sub, -sub, sub;
  lp.b_ub = Eigen::VectorXd::Constant(2 * p, lambda);
  lp.b_ub[i] += 1.0;
  lp.b_ub[p + i] -= 1.0;
  const LpResult r = lp_solve(lp);
  if (r.status != LpStatus::optimal) return std::nullopt;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  for (Eigen::Index c = 0; c < m; ++c) theta[support[c]] = r.x[c] - r.x[m + c];
  return theta;
}

// Linearized ADMM for min ||theta||_1 s.t. ||S theta - e||_inf <= lambda.
Eigen::VectorXd clime_column_admm(const Eigen::MatrixXd& s, Eigen::Index i, double lambda,
                                  double s_norm_sq, const ClimeConfig& cfg) {
  const Eigen::Index p = s.rows();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
  e[i] = 1.0;
  const double rho = 1.0;
  const double tau = 1.01 * s_norm_sq;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd r = s * theta - z - e + u;
    const Eigen::VectorXd prev = theta;
    theta = (theta - s.transpose() * r / tau).unaryExpr([&](double v) { return prox(v, 1.0 / (rho * tau)); });
    const Eigen::VectorXd st = s * theta - e;
    z = (st + u).cwiseMax(-lambda).cwiseMin(lambda);
    u += st - z;
    const double primal = (st - z).lpNorm<Eigen::Infinity>();
    const double dual = (theta - prev).lpNorm<Eigen::Infinity>();
    if (primal < cfg.tol && dual < cfg.tol) break;
  }
  return theta;
}

}  // namespace

Eigen::MatrixXd symmetrize_min_magnitude(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ParameterError("symmetrize_min_magnitude: matrix must be square");
  Eigen::MatrixXd out = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      const double v = std::abs(m(i, j)) <= std::abs(m(j, i)) ? m(i, j) : m(j, i);
      out(i, j) = out(j, i) = v;
    }
  return out;
}

PrecisionEstimate clime(const Eigen::MatrixXd& sigma_hat, const ClimeConfig& cfg) {
  if (!(cfg.lambda > 0.0)) throw ParameterError("clime: lambda must be positive");
  const Eigen::Index p = sigma_hat.rows();
  if (sigma_hat.cols() != p || p < 1) throw ParameterError("clime: sigma_hat must be square");
  if (!sigma_hat.allFinite()) throw NumericError("clime: sigma_hat is not finite");

  PrecisionEstimate est;
  est.columns = Eigen::MatrixXd::Zero(p, p);
  const bool use_lp = p <= cfg.lp_max_dim;
  const double s_norm_sq = use_lp ? 0.0 : std::pow(sigma_hat.jacobiSvd().singularValues()[0], 2);
  Eigen::MatrixXd ridge_inv;

  for (Eigen::Index i = 0; i < p; ++i) {
    std::optional<Eigen::VectorXd> theta;
    if (use_lp) {
      theta = clime_column_lp(sigma_hat, i, cfg.lambda);
    } else {
      const Eigen::VectorXd approx = clime_column_admm(sigma_hat, i, cfg.lambda, s_norm_sq, cfg);
      std::vector<Eigen::Index> support;
      const double cut = 1e-6 * std::max(1e-300, approx.cwiseAbs().maxCoeff());
      for (Eigen::Index j = 0; j < p; ++j)
        if (std::abs(approx[j]) > cut) support.push_back(j);
      theta = polish_on_support(sigma_hat, i, cfg.lambda, support);
      // The first-order support can miss a coordinate; the full LP is the fallback.
      if (!theta) theta = clime_column_lp(sigma_hat, i, cfg.lambda);
    }
    if (!theta) {
      if (ridge_inv.size() == 0)
        ridge_inv = (sigma_hat + cfg.lambda * Eigen::MatrixXd::Identity(p, p))
                        .completeOrthogonalDecomposition()
                        .pseudoInverse();
      est.columns.col(i) = ridge_inv.col(i);
      est.flagged.push_back(static_cast<int>(i));
      continue;
    }
    est.columns.col(i) = *theta;
    Eigen::VectorXd resid = sigma_hat * *theta;
    resid[i] -= 1.0;
    est.infeasibility = std::max(est.infeasibility, resid.lpNorm<Eigen::Infinity>());
  }
  est.omega_hat = symmetrize_min_magnitude(est.columns);
  return est;
}

}  // namespace decov
