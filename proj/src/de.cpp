#include "decov/de.hpp"

#include <cmath>
#include <random>
#include <string>

#include "decov/common.hpp"
#include "decov/quadrature.hpp"

namespace decov {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

void check_state(const DeState& s, const char* where) {
  if (!finite_nonneg(s.e) || !finite_nonneg(s.v))
    throw NumericError(std::string(where) + ": invalid state E=" + std::to_string(s.e) +
                       " V=" + std::to_string(s.v));
}

void check_state(const PrefDeState& s, const char* where) {
  for (const double x : {s.e_hh, s.e_hl, s.e_ll, s.v_hh, s.v_hl, s.v_ll})
    if (!finite_nonneg(x))
      throw NumericError(std::string(where) + ": invalid preferential state component " +
                         std::to_string(x));
}

double draw_slab(const SignalPrior& prior, Rng& rng) {
  switch (prior.slab) {
    case SlabKind::gaussian:
      return std::normal_distribution<double>(0.0, prior.slab_std)(rng);
    case SlabKind::laplacian: {
      const double scale = prior.slab_std / std::sqrt(2.0);
      const double mag = std::exponential_distribution<double>(1.0)(rng) * scale;
      return std::bernoulli_distribution(0.5)(rng) ? mag : -mag;
    }
    case SlabKind::two_point:
      return std::bernoulli_distribution(0.5)(rng) ? prior.slab_std : -prior.slab_std;
  }
  return 0.0;
}

ChannelMoments monte_carlo_moments(const SignalPrior& prior, double noise_std, double threshold,
                                   const DeParams& params) {
  const int pairs = std::max(1, params.mc_samples / 2);
  std::vector<double> err(2 * static_cast<std::size_t>(pairs));
  std::vector<double> var(err.size());
  Rng rng = make_rng(params.seed, 0xDE);
  std::bernoulli_distribution nonzero(prior.sparsity);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int m = 0; m < pairs; ++m) {
    const double s = nonzero(rng) ? draw_slab(prior, rng) : 0.0;
    const double z = gauss(rng);
    // antithetic pair (z, -z) sharing the same signal draw
    for (int side = 0; side < 2; ++side) {
      const double a = s + (side == 0 ? z : -z) * noise_std;
      const double r = prox(a, threshold) - s;
      err[2 * m + side] = r * r;
      var[2 * m + side] = threshold * prox_deriv(a, threshold);
    }
  }
  const double n = static_cast<double>(err.size());
  return {pairwise_sum(err) / n, pairwise_sum(var) / n};
}

// Signal atoms (value, probability) approximating the prior.
std::vector<std::pair<double, double>> signal_atoms(const SignalPrior& prior, int nodes) {
  std::vector<std::pair<double, double>> atoms;
  if (prior.sparsity < 1.0) atoms.emplace_back(0.0, 1.0 - prior.sparsity);
  const double eps = prior.sparsity;
  switch (prior.slab) {
    case SlabKind::gaussian: {
      const QuadratureRule gh = gauss_hermite(nodes);
      for (Eigen::Index k = 0; k < gh.nodes.size(); ++k)
        atoms.emplace_back(prior.slab_std * gh.nodes[k], eps * gh.weights[k]);
      break;
    }
    case SlabKind::laplacian: {
      const QuadratureRule gl = gauss_laguerre(nodes);
      const double scale = prior.slab_std / std::sqrt(2.0);
      for (Eigen::Index k = 0; k < gl.nodes.size(); ++k) {
        atoms.emplace_back(scale * gl.nodes[k], 0.5 * eps * gl.weights[k]);
        atoms.emplace_back(-scale * gl.nodes[k], 0.5 * eps * gl.weights[k]);
      }
      break;
    }
    case SlabKind::two_point:
      atoms.emplace_back(prior.slab_std, 0.5 * eps);
      atoms.emplace_back(-prior.slab_std, 0.5 * eps);
      break;
  }
  return atoms;
}

ChannelMoments quadrature_moments(const SignalPrior& prior, double noise_std, double threshold,
                                  const DeParams& params) {
  const QuadratureRule gh = gauss_hermite(params.quadrature_nodes);
  double error = 0.0;
  double variance = 0.0;
  for (const auto& [s, ps] : signal_atoms(prior, params.quadrature_nodes)) {
    if (noise_std == 0.0) {
      const double r = prox(s, threshold) - s;
      error += ps * r * r;
      variance += ps * threshold * prox_deriv(s, threshold);
      continue;
    }
    double e = 0.0;
    double stein = 0.0;
    for (Eigen::Index k = 0; k < gh.nodes.size(); ++k) {
      const double z = gh.nodes[k];
      const double shrunk = prox(s + noise_std * z, threshold);
      e += gh.weights[k] * (shrunk - s) * (shrunk - s);
      stein += gh.weights[k] * z * shrunk;
    }
    error += ps * e;
    // Stein: E[prox'(s + sigma z)] = E[z prox(s + sigma z)] / sigma (smooth integrand).
    variance += ps * threshold * std::clamp(stein / noise_std, 0.0, 1.0);
  }
  return {error, variance};
}

struct RegularFactors {
  double lambda_half;  // sum lambda_j / sqrt(j)
  double lambda_one;   // sum lambda_j / j
  double rho_one;      // sum i rho_i
  KronDegreeLaw rho_pairs;
};

}  // namespace

void SignalPrior::validate() const {
  if (!(sparsity > 0.0 && sparsity <= 1.0))
    throw ParameterError("signal prior sparsity must lie in (0, 1]");
  if (!(slab_std > 0.0)) throw ParameterError("signal prior slab std must be positive");
}

SignalPrior SignalPrior::unit_power(double sparsity, SlabKind slab) {
  SignalPrior prior{sparsity, 1.0 / std::sqrt(sparsity), slab};
  prior.validate();
  return prior;
}

void DeParams::validate() const {
  if (!(beta > 0.0)) throw ParameterError("DE beta must be positive");
  if (!(noise_std >= 0.0)) throw ParameterError("DE noise std must be nonnegative");
  if (!(norm_const > 0.0)) throw ParameterError("DE normalization constant must be positive");
  if (mc_samples < 2) throw ParameterError("DE needs at least two Monte Carlo samples");
  if (quadrature_nodes < 1) throw ParameterError("DE quadrature needs at least one node");
  if (!(damping > 0.0 && damping <= 1.0)) throw ParameterError("DE damping must lie in (0, 1]");
}

double default_beta(double p, double k, double c0) {
  if (!(k > 0.0 && k < p)) throw ParameterError("default_beta requires 0 < k < p");
  if (!(c0 > 0.0)) throw ParameterError("default_beta requires c0 > 0");
  return 2.0 * c0 * std::log(p / k);
}

DeState DeState::from_prior(const SignalPrior& prior) {
  const double power = prior.second_moment();
  return {power, std::sqrt(power)};
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (const double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

ChannelMoments channel_moments(const SignalPrior& prior, double noise_std, double threshold,
                               const DeParams& params) {
  prior.validate();
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw NumericError("channel noise level is invalid: " + std::to_string(noise_std));
  if (!(threshold >= 0.0) || !std::isfinite(threshold))
    throw NumericError("channel threshold is invalid: " + std::to_string(threshold));
  ChannelMoments m = params.integrator == Integrator::monte_carlo
                         ? monte_carlo_moments(prior, noise_std, threshold, params)
                         : quadrature_moments(prior, noise_std, threshold, params);
  if (!std::isfinite(m.error) || !std::isfinite(m.variance))
    throw NumericError("channel moments are not finite (noise " + std::to_string(noise_std) +
                       ", threshold " + std::to_string(threshold) + ")");
  return m;
}

DeState de_step_regular(const DeState& state, const DegreeDistribution& lambda,
                        const DegreeDistribution& rho, const SignalPrior& prior,
                        const DeParams& params) {
  check_state(state, "de_step_regular");
  params.validate();
  const RegularFactors f{lambda.moment(-0.5), lambda.moment(-1.0), rho.moment(1.0),
                         kron_degree_law(rho)};
  const double noise_floor = params.norm_const * params.noise_std * params.noise_std;

  double pair_sum = 0.0;
  for (std::size_t i = 0; i < f.rho_pairs.support.size(); ++i)
    pair_sum += f.rho_pairs.probabilities[i] *
                std::sqrt(static_cast<double>(f.rho_pairs.support[i]) * state.e + noise_floor);
  const double noise = f.lambda_half * f.lambda_half * pair_sum;
  const double threshold = params.beta * f.lambda_one * f.lambda_one *
                           (f.rho_one * f.rho_one * state.v + noise_floor);

  const ChannelMoments m = channel_moments(prior, noise, threshold, params);
  DeState next{m.error, m.variance};
  check_state(next, "de_step_regular");
  return next;
}

DeTrajectory de_trajectory(const DeState& init, const DegreeDistribution& lambda,
                           const DegreeDistribution& rho, const SignalPrior& prior,
                           const DeParams& params, int max_iters, double tol) {
  if (max_iters < 1) throw ParameterError("de_trajectory: max_iters must be >= 1");
  if (!(tol > 0.0)) throw ParameterError("de_trajectory: tol must be positive");
  params.validate();
  DeTrajectory traj;
  traj.states.push_back(init);
  DeState cur = init;
  const double w = params.damping;
  for (int t = 0; t < max_iters; ++t) {
    const DeState raw = de_step_regular(cur, lambda, rho, prior, params);
    const DeState next{(1.0 - w) * cur.e + w * raw.e, (1.0 - w) * cur.v + w * raw.v};
    // Small steps along a geometric decay toward the origin are not a plateau;
    // keep going until the state itself drops below tol.
    const bool shrinking = next.e <= cur.e && next.v <= cur.v && (next.e >= tol || next.v >= tol);
    const bool settled = std::abs(next.e - cur.e) < tol && std::abs(next.v - cur.v) < tol && !shrinking;
    traj.states.push_back(next);
    cur = next;
    if (settled) {
      traj.converged = true;
      break;
    }
  }
  traj.converged_to_zero = cur.e < tol && cur.v < tol;
  return traj;
}

PrefDeState PrefDeState::from_priors(const SignalPrior& hh, const SignalPrior& hl,
                                     const SignalPrior& ll) {
  const DeState a = DeState::from_prior(hh);
  const DeState b = DeState::from_prior(hl);
  const DeState c = DeState::from_prior(ll);
  return {a.e, b.e, c.e, a.v, b.v, c.v};
}

PrefCoefficients pref_coefficients(const PrefDeState& state, const BlockDegrees& degrees,
                                   const BlockBetas& betas, const DeParams& params) {
  const double noise_floor = params.norm_const * params.noise_std * params.noise_std;

  // Check-node side: HH, HL and LL neighbour counts are products of a row's
  // high-block and low-block degrees.
  const KronDegreeLaw hh = kron_degree_law(degrees.rho_h);
  const KronDegreeLaw hl = product_law(degrees.rho_h, degrees.rho_l);
  const KronDegreeLaw ll = kron_degree_law(degrees.rho_l);
  double root_sum = 0.0;
  for (std::size_t a = 0; a < hh.support.size(); ++a)
    for (std::size_t b = 0; b < hl.support.size(); ++b)
      for (std::size_t c = 0; c < ll.support.size(); ++c) {
        const double inner = noise_floor + hh.support[a] * state.e_hh +
                             hl.support[b] * state.e_hl + ll.support[c] * state.e_ll;
        root_sum += hh.probabilities[a] * hl.probabilities[b] * ll.probabilities[c] *
                    std::sqrt(inner);
      }
  const double rh = degrees.rho_h.moment(1.0);
  const double rl = degrees.rho_l.moment(1.0);
  const double linear_sum =
      noise_floor + rh * rh * state.v_hh + rh * rl * state.v_hl + rl * rl * state.v_ll;

  // Variable-node side: 1/sqrt(l l') and 1/(l l') over the two column laws.
  const double sh = degrees.lambda_h.moment(-0.5);
  const double sl = degrees.lambda_l.moment(-0.5);
  const double ih = degrees.lambda_h.moment(-1.0);
  const double il = degrees.lambda_l.moment(-1.0);

  return {sh * sh * root_sum,
          sh * sl * root_sum,
          sl * sl * root_sum,
          betas.hh * ih * ih * linear_sum,
          betas.hl * ih * il * linear_sum,
          betas.ll * il * il * linear_sum};
}

PrefDeState de_step_preferential(const PrefDeState& state, const BlockDegrees& degrees,
                                 const BlockPriors& priors, const BlockBetas& betas,
                                 const DeParams& params) {
  check_state(state, "de_step_preferential");
  params.validate();
  if (!(betas.hh > 0.0 && betas.hl > 0.0 && betas.ll > 0.0))
    throw ParameterError("block betas must be positive");
  const PrefCoefficients b = pref_coefficients(state, degrees, betas, params);
  const ChannelMoments hh = channel_moments(priors.hh, b.noise_hh, b.threshold_hh, params);
  const ChannelMoments hl = channel_moments(priors.hl, b.noise_hl, b.threshold_hl, params);
  const ChannelMoments ll = channel_moments(priors.ll, b.noise_ll, b.threshold_ll, params);
  PrefDeState next{hh.error, hl.error, ll.error, hh.variance, hl.variance, ll.variance};
  check_state(next, "de_step_preferential");
  return next;
}

PrefDeTrajectory de_trajectory_preferential(const PrefDeState& init, const BlockDegrees& degrees,
                                            const BlockPriors& priors, const BlockBetas& betas,
                                            const DeParams& params, int max_iters, double tol) {
  if (max_iters < 1) throw ParameterError("de_trajectory_preferential: max_iters must be >= 1");
  if (!(tol > 0.0)) throw ParameterError("de_trajectory_preferential: tol must be positive");
  params.validate();
  PrefDeTrajectory traj;
  traj.states.push_back(init);
  PrefDeState cur = init;
  const double w = params.damping;
  auto blend = [w](double old, double fresh) { return (1.0 - w) * old + w * fresh; };
  for (int t = 0; t < max_iters; ++t) {
    const PrefDeState raw = de_step_preferential(cur, degrees, priors, betas, params);
    const PrefDeState next{blend(cur.e_hh, raw.e_hh), blend(cur.e_hl, raw.e_hl),
                           blend(cur.e_ll, raw.e_ll), blend(cur.v_hh, raw.v_hh),
                           blend(cur.v_hl, raw.v_hl), blend(cur.v_ll, raw.v_ll)};
    const double change = std::max({std::abs(next.e_hh - cur.e_hh), std::abs(next.e_hl - cur.e_hl),
                                    std::abs(next.e_ll - cur.e_ll), std::abs(next.v_hh - cur.v_hh),
                                    std::abs(next.v_hl - cur.v_hl), std::abs(next.v_ll - cur.v_ll)});
    const double prev_max = std::max({cur.e_hh, cur.e_hl, cur.e_ll, cur.v_hh, cur.v_hl, cur.v_ll});
    const double next_max = std::max({next.e_hh, next.e_hl, next.e_ll, next.v_hh, next.v_hl, next.v_ll});
    const bool shrinking = next_max < prev_max && next_max >= tol;
    traj.states.push_back(next);
    cur = next;
    if (change < tol && !shrinking) {
      traj.converged = true;
      break;
    }
  }
  traj.converged_to_zero = std::max({cur.e_hh, cur.e_hl, cur.e_ll, cur.v_hh, cur.v_hl, cur.v_ll}) < tol;
  return traj;
}

std::optional<std::size_t> preferential_ordering_onset(std::span<const PrefDeState> states) {
  if (states.size() < 2) return std::nullopt;
  const std::size_t steps = states.size() - 1;
  std::optional<std::size_t> onset;
  for (std::size_t t = steps; t-- > 0;) {
    const double dhh = std::abs(states[t + 1].e_hh - states[t].e_hh);
    const double dhl = std::abs(states[t + 1].e_hl - states[t].e_hl);
    const double dll = std::abs(states[t + 1].e_ll - states[t].e_ll);
    if (dhh <= dhl && dhh <= dll)
      onset = t;
    else
      break;
  }
  return onset;
}

}  // namespace decov
