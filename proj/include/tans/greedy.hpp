#pragma once

#include <array>
#include <cstdint>

#include "tans/prediction.hpp"
#include "tans/signals.hpp"

namespace tans {

/* Per-decision sampling cost: expected reconstruction distortion accumulated
 * over the skipped indices of the next increment plus a rate charge rho / T.
 * Increments are searched exhaustively over [1, t_up]; sigma_max_sq is the
 * prediction error variance charged when the regime estimate is wrong.
 */
struct CostParams {
  double rho = 1.0;
  double sigma_max_sq = 1.0;
  std::int64_t t_up = 200;
};

// Posterior over {0: low regime throughout, 1: high regime throughout,
// 2: regime switch inside the newest interval}.
struct StateEstimate {
  int theta_hat = 0;
  double p_error = 0.0;
  std::array<double, 3> posterior{};
};

// Closed two-state rate-distortion box for the estimator-driven greedy
// sampler, from a bracket [pe_low, pe_up] on the estimator error rate.
struct RdBounds {
  std::int64_t t0_low = 0, t0_up = 0;
  std::int64_t t1_low = 0, t1_up = 0;
  double d0_low = 0.0, d0_up = 0.0;
  double d1_low = 0.0, d1_up = 0.0;
  double rate_low = 0.0, rate_up = 0.0;
  double dist_low = 0.0, dist_up = 0.0;
};

// sum_{j=1}^{t-1} (1 - alpha^(2j)) + rho / t
double ar1_state_cost(double alpha, std::int64_t t, const CostParams& cost);

// Exhaustive argmin of ar1_state_cost over [1, t_up]; ties break low.
std::int64_t ar1_greedy_increment(double alpha, const CostParams& cost);

// Unique positive root of (1 - alpha^(2T)) - rho / (T (T + 1)), which is the
// sign change of the cost difference c(T+1) - c(T). Requires the low-rate
// regime (1 - alpha^2) < rho / 2 so the difference starts negative; the
// greedy argmin is floor(root) or floor(root) + 1. Bisection to 1e-9.
double ar1_root(double alpha, double rho);

// Per-index distortion of the uniform policy with increment t_star.
double ar1_greedy_distortion(double alpha, std::int64_t t_star);

/* Regime estimate from the sampling state (needs >= 2 entries). Hypotheses:
 * each regime held throughout all intervals, or exactly one switch inside
 * the newest interval at one of its interior steps; earlier intervals are
 * assumed switch-free. Gaussian interval densities times chain priors,
 * evaluated in the log domain; the switch class pools both directions
 * through the position index when more than one interval is present.
 */
StateEstimate estimate_theta(const SamplingState& state,
                             const MarkovAr1Params& params);

// Expected cost of increment t under the regime estimate: confident regimes
// pay the conditional AR distortion, estimation error pays sigma_max_sq per
// skipped index; theta_hat == 2 always pays sigma_max_sq.
double markov_cond_cost(const StateEstimate& est, std::int64_t t,
                        const MarkovAr1Params& params, const CostParams& cost);

struct GreedyStep {
  std::int64_t t = 1;
  StateEstimate estimate;
};

// Exhaustive argmin of markov_cond_cost over [1, t_up] for a given estimate;
// ties break low. A genie caller passes a zero-error estimate directly.
std::int64_t greedy_markov_increment(const StateEstimate& est,
                                     const MarkovAr1Params& params,
                                     const CostParams& cost);

// Estimate the regime, then argmin markov_cond_cost over [1, t_up].
GreedyStep greedy_markov_step(const SamplingState& state,
                              const MarkovAr1Params& params,
                              const CostParams& cost);

/* Rate-distortion box for a symmetric chain (p01 == p10): per-regime
 * increments are brackets [argmin at pe_up, argmin at pe_low], rates are the
 * half-sums of inverse increments, distortions the half-sums of per-regime
 * per-index distortions evaluated at the matching (increment, pe) corner.
 * pe_low == pe_up collapses the box to a single curve point.
 */
RdBounds markov_rd_bounds(const MarkovAr1Params& params,
                          const CostParams& cost, double pe_low,
                          double pe_up);

}  // namespace tans
