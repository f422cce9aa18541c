#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tans/greedy.hpp"
#include "tans/prediction.hpp"
#include "tans/signals.hpp"

namespace tans {

/* Output of a sampling run: the taken samples (times strictly increasing),
 * with the first n_init entries flagged as initialization. Rate accounting
 * and distortion windows start after the last initialization sample.
 */
struct SampleSet {
  std::vector<TimedValue> samples;
  std::size_t n_init = 0;
  std::string sampler_id;
  std::uint64_t seed = 0;
};

enum class GlpAcfMode { Model, Conditional, Estimated };

/* Configuration for predictive reconstruction.
 *
 * Model:       r(k) = alpha^|k| with the global model coefficient.
 * Conditional: per interval, estimate the hidden regime from the trailing
 *              estimator_m samples and use that regime's coefficient; a
 *              switch estimate falls back to the likelier pure regime.
 *              genie_states, when set, bypasses the estimator with the true
 *              hidden state at the interval's left sample.
 * Estimated:   empirical autocorrelation from a trailing window of samples;
 *              state entries whose lags the table cannot serve are dropped,
 *              and with no usable entry the last value is held.
 */
struct GlpReconConfig {
  std::size_t m = 2;
  GlpAcfMode mode = GlpAcfMode::Model;
  double alpha = 0.0;
  MarkovAr1Params markov{};
  std::size_t estimator_m = 10;
  const std::vector<std::int8_t>* genie_states = nullptr;
  std::int64_t window = 1024;
  std::int64_t max_lag = 64;
};

struct Reconstruction {
  std::vector<double> values;            // one entry per time index
  std::string method;
  std::vector<std::int64_t> sample_times;
  std::int64_t eval_first = 0;           // evaluation window, inclusive
  std::int64_t eval_last = 0;
};

// Causal prediction: inside (t_i, t_(i+1)) every value is predicted from at
// most m samples taken at or before t_i. Exact at sample times.
Reconstruction reconstruct_glp(const SampleSet& set, std::size_t horizon,
                               const GlpReconConfig& cfg);

// Causal two-point line: extrapolates the line through the two most recent
// samples; holds the first value until a second sample exists.
Reconstruction reconstruct_clc(const SampleSet& set, std::size_t horizon);

// Noncausal connect-the-dots: interpolates between bracketing samples and
// holds the edge values outside them.
Reconstruction reconstruct_nclc(const SampleSet& set, std::size_t horizon);

enum class DistortionMeasure { Mse, Hamming };

/* Average per-index distortion over the reconstruction's evaluation window.
 * exclude_sample_times drops sample indices from numerator and denominator
 * (they contribute zero otherwise). Hamming requires both sequences to be
 * exactly 0/1 valued on the window.
 */
double distortion(const std::vector<double>& truth, const Reconstruction& recon,
                  DistortionMeasure measure, bool exclude_sample_times);

}  // namespace tans
