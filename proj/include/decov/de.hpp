#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "decov/factorgraph.hpp"

namespace decov {

/// Soft threshold sign(a) * max(|a| - b, 0).
template <typename Scalar>
inline Scalar prox(Scalar a, Scalar b) {
  using std::abs;
  const Scalar shrunk = abs(a) - b;
  if (shrunk <= Scalar(0)) return Scalar(0);
  return a > Scalar(0) ? shrunk : -shrunk;
}

/// d/da of prox(a; b); the kink |a| == b maps to 0.
template <typename Scalar>
inline Scalar prox_deriv(Scalar a, Scalar b) {
  using std::abs;
  return abs(a) > b ? Scalar(1) : Scalar(0);
}

enum class SlabKind { gaussian, laplacian, two_point };

/// Spike-and-slab law of a covariance entry: zero w.p. 1 - sparsity, otherwise
/// a zero-mean slab draw with standard deviation slab_std.
struct SignalPrior {
  double sparsity = 1.0;
  double slab_std = 1.0;
  SlabKind slab = SlabKind::gaussian;

  void validate() const;
  double second_moment() const { return sparsity * slab_std * slab_std; }

  /// Slab scaled so that E[s^2] = 1.
  static SignalPrior unit_power(double sparsity, SlabKind slab = SlabKind::gaussian);
};

enum class Integrator { monte_carlo, quadrature };

struct DeParams {
  double beta = 1.0;
  double noise_std = 0.0;
  double norm_const = 1.0;
  int mc_samples = 100000;
  std::uint64_t seed = 0;
  Integrator integrator = Integrator::monte_carlo;
  int quadrature_nodes = 64;
  /// Relaxation weight applied by the trajectory drivers: x <- (1-w) x + w F(x).
  double damping = 0.5;

  void validate() const;
};

/// Per-entry threshold weight 2 c0 log(p / k). With this weight the variance
/// recursion is contractive near the origin exactly when a2 <= p^2 / (2 c0 k^2 log(p/k)).
double default_beta(double p, double k, double c0 = 1.0);

struct DeState {
  double e = 0.0;
  double v = 0.0;

  /// Zero estimate: E equals the prior power, V its square root.
  static DeState from_prior(const SignalPrior& prior);
};

/// E_s E_z [prox(s + noise_std z; threshold) - s]^2 and E_s E_z [threshold prox'(.)].
struct ChannelMoments {
  double error = 0.0;
  double variance = 0.0;
};

ChannelMoments channel_moments(const SignalPrior& prior, double noise_std, double threshold,
                               const DeParams& params);

/// One step of the regular recursion. With sigma = 0 the effective noise is
/// a1 sqrt(E) and the threshold beta a2 V; sigma > 0 adds A sigma^2 inside the
/// degree sums before the square root.
DeState de_step_regular(const DeState& state, const DegreeDistribution& lambda,
                        const DegreeDistribution& rho, const SignalPrior& prior,
                        const DeParams& params);

struct DeTrajectory {
  std::vector<DeState> states;  // states[0] is the initial state
  bool converged = false;
  bool converged_to_zero = false;
};

DeTrajectory de_trajectory(const DeState& init, const DegreeDistribution& lambda,
                           const DegreeDistribution& rho, const SignalPrior& prior,
                           const DeParams& params, int max_iters, double tol);

// Preferential (two-block) recursion ---------------------------------------

struct PrefDeState {
  double e_hh = 0.0, e_hl = 0.0, e_ll = 0.0;
  double v_hh = 0.0, v_hl = 0.0, v_ll = 0.0;

  static PrefDeState from_priors(const SignalPrior& hh, const SignalPrior& hl,
                                 const SignalPrior& ll);
};

/// lambda_* are column laws of the two column blocks; rho_h / rho_l give the
/// number of nonzeros each row places in the high / low column block.
struct BlockDegrees {
  DegreeDistribution lambda_h, lambda_l, rho_h, rho_l;
};

struct BlockPriors {
  SignalPrior hh, hl, ll;
};

struct BlockBetas {
  double hh = 1.0, hl = 1.0, ll = 1.0;
};

/// Effective noise (b_1) and threshold (b_2) for the three blocks.
struct PrefCoefficients {
  double noise_hh, noise_hl, noise_ll;
  double threshold_hh, threshold_hl, threshold_ll;
};

PrefCoefficients pref_coefficients(const PrefDeState& state, const BlockDegrees& degrees,
                                   const BlockBetas& betas, const DeParams& params);

PrefDeState de_step_preferential(const PrefDeState& state, const BlockDegrees& degrees,
                                 const BlockPriors& priors, const BlockBetas& betas,
                                 const DeParams& params);

struct PrefDeTrajectory {
  std::vector<PrefDeState> states;
  bool converged = false;
  bool converged_to_zero = false;
};

PrefDeTrajectory de_trajectory_preferential(const PrefDeState& init, const BlockDegrees& degrees,
                                            const BlockPriors& priors, const BlockBetas& betas,
                                            const DeParams& params, int max_iters, double tol);

/// First step t such that |dE_HH| <= |dE_HL| and |dE_HH| <= |dE_LL| holds for
/// every step from t on; nullopt if the ordering never settles.
std::optional<std::size_t> preferential_ordering_onset(std::span<const PrefDeState> states);

/// Pairwise (cascade) summation; deterministic for a fixed input order.
double pairwise_sum(std::span<const double> values);

}  // namespace decov
