#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tans/dp.hpp"
#include "tans/greedy.hpp"
#include "tans/reconstruct.hpp"
#include "tans/signals.hpp"

namespace tans {

/* Sampler specifications. Every non-uniform sampler is a pure function of
 * the sampling state (plus, for the genie, the disclosed hidden state), so
 * a decoder holding the sample values can replay the sampling times.
 */
struct UniformSamplerSpec {
  double rate = 1.0;
};

struct GreedyAr1SamplerSpec {
  double alpha = 0.9;
};

struct GreedyMarkovSamplerSpec {
  MarkovAr1Params params;
  std::size_t m = 10;   // estimator window, >= 2
  bool genie = false;   // use the true hidden state, zero error probability
};

struct ScDpSamplerSpec {
  BinaryHmmParams params;
  DpConfig dp;
};

struct AdpMarkovSamplerSpec {
  MarkovAr1Params params;
  std::size_t m = 10;
  AdpConfig adp;
};

using SamplerSpec =
    std::variant<UniformSamplerSpec, GreedyAr1SamplerSpec,
                 GreedyMarkovSamplerSpec, ScDpSamplerSpec,
                 AdpMarkovSamplerSpec>;

/* Modified uniform baseline: sample i lands at round(i / rate) (half up),
 * i >= 1, after an initialization sample at t = 0; cumulative rounding keeps
 * the long-run rate exact for non-integer periods. The first two samples
 * are initialization so every evaluated interval has two predecessors.
 */
SampleSet run_uniform_baseline(const SignalTrace& trace, double rate);

// Per-step record of an adaptive run, for estimator diagnostics.
struct StepRecord {
  std::int64_t t = 0;          // time of the decided sample
  std::int64_t increment = 1;
  StateEstimate estimate;      // meaningful for markov samplers
  int truth_theta = -1;        // regime over the state window; 2 = switch
};

struct SamplerRun {
  SampleSet set;
  std::vector<StepRecord> steps;
};

SamplerRun run_sampler_detailed(const SignalTrace& trace,
                                const SamplerSpec& sampler,
                                const CostParams& cost);
SampleSet run_sampler(const SignalTrace& trace, const SamplerSpec& sampler,
                      const CostParams& cost);

/* Decoder-side replay: recompute every sampling time from the received
 * sample values, the sampler specification, and the initialization times.
 * genie_states is the side information a genie sampler disclosed.
 */
std::vector<std::int64_t> replay_times(
    const std::vector<double>& values,
    const std::vector<std::int64_t>& init_times, const SamplerSpec& sampler,
    const CostParams& cost,
    const std::vector<std::int8_t>* genie_states = nullptr);

/* Experiment description, loadable from a TOML spec file (see the README
 * for the schema). One file describes a family of rate-distortion curves
 * over a shared signal model, cost sweep, and seed list.
 */
struct CurveSpec {
  std::string sampler;  // uniform | greedy_ar1 | greedy_markov |
                        // genie_greedy | dp_source_coding | adp_markov |
                        // analytic
  std::string recon;    // glp | clc | nclc | sc_fill (empty for analytic)
  std::string acf;      // glp only: model | conditional | estimated
  std::vector<double> rates;  // uniform sweep (replaces the rho sweep)
  double pe = 0.0;            // analytic: estimator error rate
};

struct ExperimentSpec {
  std::string model;  // ar1 | markov_ar1 | binary_hmm
  Ar1Params ar1{};
  MarkovAr1Params markov{};
  BinaryHmmParams hmm{};
  std::size_t length = 100000;
  std::vector<std::uint64_t> seeds;

  std::vector<double> rho;
  double sigma_max_sq = 1.0;
  std::int64_t t_up = 200;

  DpConfig dp{};
  AdpConfig adp{};
  std::size_t estimator_m = 10;

  DistortionMeasure measure = DistortionMeasure::Mse;
  bool exclude_sample_times = false;
  std::size_t glp_m = 2;
  std::int64_t est_window = 1024;
  std::int64_t est_max_lag = 64;

  std::string out_path = "out.csv";
  std::vector<CurveSpec> curves;
};

ExperimentSpec load_experiment_spec(const std::string& path);
ExperimentSpec parse_experiment_spec_text(const std::string& toml_text);

// One aggregated sweep point.
struct RdPointRow {
  double rho = 0.0;  // sweep parameter: rho, or requested rate for uniform
  double rate = 0.0;
  double dist = 0.0;
  double se_rate = 0.0;
  double se_dist = 0.0;
  std::string sampler;
  std::string recon;
  std::size_t seeds = 0;
  double avg_cost = 0.0;  // realized per-decision cost (manifest only)
  double se_cost = 0.0;
};

// Single-trace evaluation used by rd_point and by tests.
struct RunStats {
  double rate = 0.0;
  double dist = 0.0;
  double avg_cost = 0.0;
  std::size_t samples = 0;
};

RunStats evaluate_run(const SignalTrace& trace, const SampleSet& set,
                      const ExperimentSpec& spec, const CurveSpec& curve,
                      double rho);

// Average one sweep point over the spec's seeds. For uniform curves the
// sweep value is the requested rate, otherwise rho.
RdPointRow rd_point(const ExperimentSpec& spec, const CurveSpec& curve,
                    double sweep_value);

// Closed-form curve points for the symmetric Markov-AR regime at fixed
// estimator error rates; pe = 0 is the genie curve.
std::vector<RdPointRow> analytic_curves(const MarkovAr1Params& params,
                                        const CostParams& cost,
                                        const std::vector<double>& pe_list,
                                        const std::vector<double>& rho_list);

struct ExperimentResult {
  std::vector<RdPointRow> rows;
  std::string csv;            // exact bytes written to out_path
  std::string manifest_json;  // exact bytes written next to out_path
};

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs);

// Writes spec.out_path and out_path + ".manifest.json" (creating parent
// directories is the caller's concern).
void write_experiment_outputs(const ExperimentResult& result,
                              const ExperimentSpec& spec);

}  // namespace tans
