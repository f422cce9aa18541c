#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tans/greedy.hpp"
#include "tans/reconstruct.hpp"
#include "tans/signals.hpp"

namespace tans {

/* Infinite-horizon discounted control of the sampling increment for the
 * two-state source-coding model. The per-state transition weights collapse
 * the within-increment chain to "held for all T steps" versus "flipped at
 * least once", which is the regime the cost model below is valid in; the
 * t_max bound enforces it and can be overridden deliberately.
 */
struct DpConfig {
  double beta = 0.95;
  std::int64_t t_max = 2;
  double tol = 1e-10;
  std::int64_t max_iters = 1000000;
  bool override_t_max_bound = false;
};

struct PolicyTable {
  double rho = 0.0;
  double beta = 0.0;
  std::array<double, 2> j{};           // value per state label
  std::array<std::int64_t, 2> t{};     // increment per state label
  bool converged = false;
  std::int64_t iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;  // max-norm update per sweep

  std::string to_json() const;
};

// Expected Hamming cost of holding the last sample value for t - 1 skipped
// indices, first flip at step j wrong thereafter: sum_{j=1}^{t-1}
// (1-eps)^(j-1) eps (t-j), plus rho / t.
double sc_state_cost(double eps, std::int64_t t, double rho);

// Value iteration from J = 0 to the fixed point; increments are the argmins
// at the converged values, ties breaking low.
PolicyTable sc_value_iteration(const BinaryHmmParams& params, double rho,
                               const DpConfig& cfg);

// Causal fill: every index carries the most recent sample value, which is
// the most probable completion when flip probabilities are below 1/2.
Reconstruction sc_reconstruct(const SampleSet& set, std::size_t horizon);

/* One-step approximate DP for the Markov-AR regime. The quality of a
 * candidate next state is gamma times the greedy increment it would choose;
 * the default objective subtracts the discounted quality (a longer greedy
 * step ahead signals a better-predictable state), literal_cost_sign adds it
 * instead. mc_draws > 0 averages the quality over Gaussian draws around the
 * predicted next value instead of plugging in the prediction alone.
 */
struct AdpConfig {
  double beta = 0.5;
  double gamma = 0.5;
  bool literal_cost_sign = false;
  int mc_draws = 0;
  std::uint64_t mc_seed = 0;
};

struct AdpStep {
  std::int64_t t = 1;
  StateEstimate estimate;
};

AdpStep adp_step(const SamplingState& state, const MarkovAr1Params& params,
                 const CostParams& cost, const AdpConfig& cfg);

}  // namespace tans
