#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tans/harness.hpp"

using tans::CostParams;
using tans::CurveSpec;
using tans::ExperimentSpec;
using tans::SamplerSpec;
using tans::SampleSet;
using tans::SignalTrace;

namespace {

std::vector<std::int64_t> times_of(const SampleSet& set) {
  std::vector<std::int64_t> out;
  for (const auto& s : set.samples) out.push_back(s.t);
  return out;
}

// Replays a finished run on the decoder side and checks time recovery.
void check_replay(const SignalTrace& trace, const SamplerSpec& sampler,
                  const CostParams& cost,
                  const std::vector<std::int8_t>* genie = nullptr) {
  const SampleSet set = tans::run_sampler(trace, sampler, cost);
  std::vector<double> values;
  std::vector<std::int64_t> init_times;
  for (const auto& s : set.samples) values.push_back(s.value);
  for (std::size_t i = 0; i < set.n_init; ++i) {
    init_times.push_back(set.samples[i].t);
  }
  const auto replayed =
      tans::replay_times(values, init_times, sampler, cost, genie);
  CHECK(replayed == times_of(set));
}

void expect_spec_error(const std::string& text, const std::string& needle) {
  try {
    tans::parse_experiment_spec_text(text);
    FAIL("expected a spec error containing '", needle, "'");
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    CHECK_MESSAGE(what.find(needle) != std::string::npos,
                  "got '", what, "', wanted '", needle, "'");
  }
}

const char* kMinimalMarkov =
    "[signal]\n"
    "model = \"markov_ar1\"\n"
    "alpha0 = 0.1\n"
    "alpha1 = 0.95\n"
    "p = 0.01\n"
    "length = 500\n"
    "seeds = 1\n"
    "[cost]\n"
    "rho = [1.0]\n"
    "[output]\n"
    "path = \"o.csv\"\n";

}  // namespace

TEST_CASE("uniform baseline rounds the schedule and keeps the rate exact") {
  SignalTrace trace;
  trace.values.assign(14, 0.0);
  const auto set = tans::run_uniform_baseline(trace, 0.4);
  CHECK(set.n_init == 2);
  CHECK(set.sampler_id == "uniform");
  // i / 0.4 rounded half away from zero: 2.5 -> 3, 7.5 -> 8, 12.5 -> 13.
  const std::vector<std::int64_t> expect{0, 3, 5, 8, 10, 13};
  CHECK(times_of(set) == expect);
  // Post-initialization accounting: 4 samples over (3, 13].
  CHECK(static_cast<double>(set.samples.size() - set.n_init) /
            static_cast<double>(13 - 3) ==
        0.4);

  trace.values.assign(21, 0.0);
  const auto full = tans::run_uniform_baseline(trace, 1.0);
  CHECK(full.samples.size() == 21);
  const auto half = tans::run_uniform_baseline(trace, 0.5);
  const auto t_half = times_of(half);
  for (std::size_t i = 0; i < t_half.size(); ++i) {
    CHECK(t_half[i] == static_cast<std::int64_t>(2 * i));
  }

  CHECK_THROWS_AS(tans::run_uniform_baseline(trace, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(tans::run_uniform_baseline(trace, 1.5),
                  std::invalid_argument);
}

TEST_CASE("every sampler's times replay exactly from the values") {
  CostParams cost;
  cost.rho = 2.0;
  cost.t_up = 40;

  const auto ar1 = tans::gen_ar1({0.95}, 3000, 3);
  check_replay(ar1, tans::UniformSamplerSpec{0.3}, cost);
  check_replay(ar1, tans::GreedyAr1SamplerSpec{0.95}, cost);

  tans::MarkovAr1Params mparams{0.2, 0.97, 0.01, 0.01};
  const auto markov = tans::gen_markov_ar1(mparams, 3000, 4);
  tans::GreedyMarkovSamplerSpec greedy{mparams, 4, false};
  check_replay(markov, greedy, cost);
  tans::GreedyMarkovSamplerSpec genie{mparams, 4, true};
  check_replay(markov, genie, cost, &markov.hidden_states);

  tans::AdpMarkovSamplerSpec adp;
  adp.params = mparams;
  adp.m = 4;
  adp.adp.beta = 0.6;
  adp.adp.gamma = 0.5;
  check_replay(markov, adp, cost);

  tans::BinaryHmmParams hparams{0.1, 0.05};
  const auto hmm = tans::gen_binary_hmm(hparams, 3000, 5);
  tans::ScDpSamplerSpec dp;
  dp.params = hparams;
  dp.dp.beta = 0.9;
  dp.dp.t_max = 2;
  check_replay(hmm, dp, cost);

  // A genie replay cannot proceed without the disclosed states.
  const auto set = tans::run_sampler(markov, genie, cost);
  std::vector<double> values;
  for (const auto& s : set.samples) values.push_back(s.value);
  std::vector<std::int64_t> init_times;
  for (std::size_t i = 0; i < set.n_init; ++i) {
    init_times.push_back(set.samples[i].t);
  }
  CHECK_THROWS_AS(tans::replay_times(values, init_times, genie, cost),
                  std::invalid_argument);
}

TEST_CASE("run statistics follow the interval accounting") {
  SignalTrace trace;
  trace.values = {0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 4.0};
  const auto set = tans::run_uniform_baseline(trace, 0.5);
  REQUIRE(times_of(set) == std::vector<std::int64_t>{0, 2, 4, 6});

  ExperimentSpec spec;
  CurveSpec curve;
  curve.sampler = "uniform";
  curve.recon = "nclc";
  const auto stats = tans::evaluate_run(trace, set, spec, curve, 2.0);
  CHECK(stats.samples == 4);
  CHECK(stats.rate == doctest::Approx(0.5).epsilon(1e-15));
  // nclc errors on the evaluation window (3..6]: t=3 -> 1, t=5 -> 4.
  CHECK(stats.dist == doctest::Approx(5.0 / 4.0).epsilon(1e-12));
  // Intervals (2,4) and (4,6): interior error + rho / T.
  CHECK(stats.avg_cost == doctest::Approx(0.5 * ((1.0 + 1.0) + (4.0 + 1.0)))
                              .epsilon(1e-12));

  SampleSet bare;
  bare.samples = {{0, 0.0}, {2, 2.0}};
  bare.n_init = 2;
  CHECK_THROWS_AS(tans::evaluate_run(trace, bare, spec, curve, 2.0),
                  std::runtime_error);
}

TEST_CASE("a full spec file parses into the right fields") {
  const std::string text =
      "[signal]\n"
      "model = \"markov_ar1\"\n"
      "alpha0 = 0.1\n"
      "alpha1 = 0.95\n"
      "p = 0.01\n"
      "length = 4000\n"
      "seeds = [5, 6, 7]\n"
      "[cost]\n"
      "rho = [1.0, 2.0]\n"
      "sigma_max_sq = 1.5\n"
      "t_up = 30\n"
      "[sampler]\n"
      "estimator_m = 4\n"
      "[adp]\n"
      "beta = 0.6\n"
      "gamma = 0.25\n"
      "mc_draws = 2\n"
      "mc_seed = 9\n"
      "[reconstruction]\n"
      "glp_m = 3\n"
      "est_window = 512\n"
      "est_max_lag = 32\n"
      "[output]\n"
      "path = \"rd.csv\"\n"
      "[[curve]]\n"
      "sampler = \"greedy_markov\"\n"
      "recon = \"glp\"\n"
      "acf = \"conditional\"\n"
      "[[curve]]\n"
      "sampler = \"uniform\"\n"
      "recon = \"nclc\"\n"
      "rates = [0.25, 0.5]\n"
      "[[curve]]\n"
      "sampler = \"analytic\"\n"
      "pe = 0.05\n";
  const auto spec = tans::parse_experiment_spec_text(text);
  CHECK(spec.model == "markov_ar1");
  CHECK(spec.markov.alpha0 == 0.1);
  CHECK(spec.markov.alpha1 == 0.95);
  CHECK(spec.markov.p01 == 0.01);
  CHECK(spec.markov.p10 == 0.01);
  CHECK(spec.length == 4000);
  CHECK(spec.seeds == std::vector<std::uint64_t>{5, 6, 7});
  CHECK(spec.rho == std::vector<double>{1.0, 2.0});
  CHECK(spec.sigma_max_sq == 1.5);
  CHECK(spec.t_up == 30);
  CHECK(spec.estimator_m == 4);
  CHECK(spec.adp.beta == 0.6);
  CHECK(spec.adp.gamma == 0.25);
  CHECK(spec.adp.mc_draws == 2);
  CHECK(spec.adp.mc_seed == 9);
  CHECK(spec.glp_m == 3);
  CHECK(spec.est_window == 512);
  CHECK(spec.est_max_lag == 32);
  CHECK(spec.out_path == "rd.csv");
  REQUIRE(spec.curves.size() == 3);
  CHECK(spec.curves[0].sampler == "greedy_markov");
  CHECK(spec.curves[0].acf == "conditional");
  CHECK(spec.curves[1].rates == std::vector<double>{0.25, 0.5});
  CHECK(spec.curves[2].sampler == "analytic");
  CHECK(spec.curves[2].pe == 0.05);
}

TEST_CASE("seed counts expand from the base seed") {
  const std::string text = std::string(
                               "[signal]\n"
                               "model = \"ar1\"\n"
                               "alpha = 0.9\n"
                               "length = 100\n"
                               "seeds = 3\n"
                               "seed0 = 10\n"
                               "[cost]\n"
                               "rho = [1.0]\n"
                               "[output]\n"
                               "path = \"o.csv\"\n") +
                           "[[curve]]\nsampler = \"greedy_ar1\"\nrecon = \"glp\"\n";
  const auto spec = tans::parse_experiment_spec_text(text);
  CHECK(spec.seeds == std::vector<std::uint64_t>{10, 11, 12});
}

TEST_CASE("spec errors name the offending field") {
  const std::string base = kMinimalMarkov;
  expect_spec_error("[output]\npath = \"o.csv\"\n", "signal");
  expect_spec_error(base + "[[curve]]\nsampler = \"warp\"\nrecon = \"glp\"\n",
                    "curve[0].sampler");
  expect_spec_error(base + "[[curve]]\nsampler = \"greedy_markov\"\n",
                    "curve[0].recon");
  expect_spec_error(
      base + "[[curve]]\nsampler = \"greedy_markov\"\nrecon = \"glp\"\n"
             "rates = [0.5]\n",
      "curve[0].rates");
  expect_spec_error(
      base + "[[curve]]\nsampler = \"uniform\"\nrecon = \"nclc\"\n",
      "curve[0].rates");
  expect_spec_error(
      base + "[[curve]]\nsampler = \"greedy_markov\"\nrecon = \"glp\"\n"
             "pe = 0.1\n",
      "curve[0].pe");
  expect_spec_error(
      base + "[[curve]]\nsampler = \"greedy_markov\"\nrecon = \"glp\"\n"
             "acf = \"model\"\n",
      "curve[0].acf");
  expect_spec_error(
      base + "[[curve]]\nsampler = \"greedy_ar1\"\nrecon = \"glp\"\n",
      "curve[0].sampler");
  expect_spec_error(base + "[bogus]\nx = 1\n[[curve]]\n"
                           "sampler = \"greedy_markov\"\nrecon = \"glp\"\n",
                    "spec.bogus");
  expect_spec_error(base + "[[curve]]\nsampler = \"greedy_markov\"\n"
                           "recon = \"glp\"\nextra = 1\n",
                    "curve[0].extra");

  const std::string no_output =
      "[signal]\nmodel = \"ar1\"\nalpha = 0.9\nlength = 100\nseeds = 1\n"
      "[cost]\nrho = [1.0]\n"
      "[[curve]]\nsampler = \"greedy_ar1\"\nrecon = \"glp\"\n";
  expect_spec_error(no_output, "output");

  const std::string bad_measure =
      base + "[reconstruction]\nmeasure = \"hamming\"\n"
             "[[curve]]\nsampler = \"greedy_markov\"\nrecon = \"glp\"\n";
  expect_spec_error(bad_measure, "reconstruction.measure");

  const std::string asym =
      "[signal]\nmodel = \"markov_ar1\"\nalpha0 = 0.1\nalpha1 = 0.95\n"
      "p01 = 0.01\np10 = 0.02\nlength = 500\nseeds = 1\n"
      "[cost]\nrho = [1.0]\n[output]\npath = \"o.csv\"\n"
      "[[curve]]\nsampler = \"analytic\"\n";
  expect_spec_error(asym, "curve[0].sampler");

  const std::string glp_on_hmm =
      "[signal]\nmodel = \"binary_hmm\"\neps0 = 0.1\neps1 = 0.05\n"
      "length = 500\nseeds = 1\n"
      "[cost]\nrho = [1.0]\n[output]\npath = \"o.csv\"\n"
      "[[curve]]\nsampler = \"dp_source_coding\"\nrecon = \"glp\"\n";
  expect_spec_error(glp_on_hmm, "curve[0].recon");

  expect_spec_error(base.substr(0, base.find("[cost]")) +
                        "[cost]\nrho = [0.0]\n[output]\npath = \"o.csv\"\n"
                        "[[curve]]\nsampler = \"greedy_markov\"\n"
                        "recon = \"glp\"\n",
                    "cost.rho");
  expect_spec_error(base, "curve");
}

TEST_CASE("experiments aggregate deterministically across workers") {
  const std::string text =
      "[signal]\n"
      "model = \"markov_ar1\"\n"
      "alpha0 = 0.05\n"
      "alpha1 = 0.97\n"
      "p = 0.005\n"
      "length = 2000\n"
      "seeds = 2\n"
      "[cost]\n"
      "rho = [1.0, 4.0]\n"
      "t_up = 30\n"
      "[sampler]\n"
      "estimator_m = 3\n"
      "[output]\n"
      "path = \"unused.csv\"\n"
      "[[curve]]\n"
      "sampler = \"greedy_markov\"\n"
      "recon = \"glp\"\n"
      "[[curve]]\n"
      "sampler = \"uniform\"\n"
      "recon = \"nclc\"\n"
      "rates = [0.5]\n"
      "[[curve]]\n"
      "sampler = \"analytic\"\n";
  const auto spec = tans::parse_experiment_spec_text(text);
  const auto serial = tans::run_experiment(spec, 1);
  REQUIRE(serial.rows.size() == 5);  // 2 rho + 1 rate + 2 analytic
  CHECK(serial.csv.rfind(
            "rho,rate,distortion,stderr_rate,stderr_distortion,"
            "sampler,recon,seeds\n",
            0) == 0);
  CHECK(serial.rows[0].sampler == "greedy_markov");
  CHECK(serial.rows[2].sampler == "uniform");
  CHECK(serial.rows[2].rho == 0.5);  // sweep column carries the rate
  CHECK(serial.rows[3].recon == "pe=0");
  CHECK(serial.rows[0].seeds == 2);

  const auto parallel = tans::run_experiment(spec, 2);
  CHECK(parallel.csv == serial.csv);
}

TEST_CASE("analytic rows collapse to the bounds box") {
  tans::MarkovAr1Params params{0.01, 0.99, 0.001, 0.001};
  CostParams cost;
  cost.t_up = 50;
  const auto rows =
      tans::analytic_curves(params, cost, {0.0, 0.1}, {1.0, 2.0});
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    const double pe = row.recon == "pe=0" ? 0.0 : 0.1;
    CostParams c = cost;
    c.rho = row.rho;
    const auto box = tans::markov_rd_bounds(params, c, pe, pe);
    CHECK(row.rate == box.rate_low);
    CHECK(row.dist == box.dist_low);
    CHECK(row.sampler == "analytic");
  }
  CHECK(rows[0].recon == "pe=0");
  CHECK(rows[2].recon == "pe=0.1");
}

TEST_CASE("regime estimates are calibrated against the hidden chain") {
  tans::MarkovAr1Params params;
  params.alpha0 = 0.01;
  params.alpha1 = 0.99;
  params.p01 = params.p10 = 0.001;
  tans::CostParams cost;
  cost.t_up = 50;

  // Pooled over all windows the realized error exceeds the reported one
  // slightly, because a transition in an earlier window interval falls
  // outside the hypothesis class; pure-regime windows are the sharp check.
  for (double rho : {0.5, 2.0}) {
    cost.rho = rho;
    std::int64_t n = 0;
    std::int64_t wrong = 0;
    std::int64_t pure_n[2] = {0, 0};
    std::int64_t pure_wrong[2] = {0, 0};
    double reported = 0.0;
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      const auto trace = tans::gen_markov_ar1(params, 100000, seed);
      const auto run = tans::run_sampler_detailed(
          trace, tans::GreedyMarkovSamplerSpec{params, 10, false}, cost);
      for (const auto& step : run.steps) {
        ++n;
        reported += step.estimate.p_error;
        if (step.estimate.theta_hat != step.truth_theta) ++wrong;
        if (step.truth_theta == 0 || step.truth_theta == 1) {
          ++pure_n[step.truth_theta];
          if (step.estimate.theta_hat != step.truth_theta) {
            ++pure_wrong[step.truth_theta];
          }
        }
      }
    }
    // The out-of-class fraction grows with the window span, so the pooled
    // comparison is only tight while increments are short.
    if (rho <= 0.5) {
      const double realized =
          static_cast<double>(wrong) / static_cast<double>(n);
      CHECK(std::abs(realized - reported / static_cast<double>(n)) < 0.02);
    }
    for (int s = 0; s < 2; ++s) {
      CHECK(static_cast<double>(pure_wrong[s]) /
                static_cast<double>(pure_n[s]) <
            0.005);
    }
  }
}

TEST_CASE("greedy sampling rate falls as sampling gets more expensive") {
  ExperimentSpec spec;
  spec.model = "ar1";
  spec.ar1.alpha = 0.99;
  spec.length = 20000;
  spec.seeds = {1, 2, 3};
  CurveSpec curve;
  curve.sampler = "greedy_ar1";
  curve.recon = "glp";
  curve.acf = "model";
  const auto cheap = tans::rd_point(spec, curve, 0.5);
  const auto costly = tans::rd_point(spec, curve, 50.0);
  CHECK(cheap.rate > costly.rate);
  CHECK(cheap.dist < costly.dist);
}
