#include "tans/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "tans/rng.hpp"
#include "tans/toml.hpp"
#include "tans/version.hpp"

namespace tans {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Regime that generated the values inside a state window [t_first, t_last]:
// the value at index t + 1 is driven by the hidden state at t, so the
// relevant span is [t_first, t_last - 1]. Mixed states label as 2.
int window_truth(const SignalTrace& trace, std::int64_t t_first,
                 std::int64_t t_last) {
  if (trace.hidden_states.empty()) return -1;
  const std::int64_t hi = std::max(t_first, t_last - 1);
  const int first = trace.hidden_states[static_cast<std::size_t>(t_first)];
  for (std::int64_t t = t_first + 1; t <= hi; ++t) {
    if (trace.hidden_states[static_cast<std::size_t>(t)] != first) return 2;
  }
  return first;
}

StateEstimate genie_estimate(const SignalTrace& trace, std::int64_t t) {
  if (trace.hidden_states.empty()) {
    throw std::invalid_argument("genie sampler needs a trace with hidden states");
  }
  const int theta = trace.hidden_states[static_cast<std::size_t>(t)];
  StateEstimate est;
  est.theta_hat = theta;
  est.p_error = 0.0;
  est.posterior = {theta == 0 ? 1.0 : 0.0, theta == 1 ? 1.0 : 0.0, 0.0};
  return est;
}

void require_binary_value(double v) {
  if (v != 0.0 && v != 1.0) {
    throw std::invalid_argument("source-coding sampler needs a binary trace");
  }
}

// Uniform sample times for a horizon: t = 0 plus round(i / rate), i >= 1.
std::vector<std::int64_t> uniform_times(double rate, std::int64_t last_index) {
  if (!(rate > 0.0) || !(rate <= 1.0)) {
    throw std::invalid_argument("uniform rate must lie in (0, 1]");
  }
  const double period = 1.0 / rate;
  std::vector<std::int64_t> times{0};
  for (std::int64_t i = 1;; ++i) {
    const std::int64_t t = std::llround(static_cast<double>(i) * period);
    if (t > last_index) break;
    if (t > times.back()) times.push_back(t);
  }
  return times;
}

}  // namespace

SampleSet run_uniform_baseline(const SignalTrace& trace, double rate) {
  if (trace.values.size() < 2) {
    throw std::invalid_argument("trace too short to sample");
  }
  const auto last_index = static_cast<std::int64_t>(trace.values.size()) - 1;
  SampleSet set;
  set.sampler_id = "uniform";
  set.seed = trace.seed;
  for (std::int64_t t : uniform_times(rate, last_index)) {
    set.samples.push_back({t, trace.values[static_cast<std::size_t>(t)]});
  }
  set.n_init = std::min<std::size_t>(2, set.samples.size());
  return set;
}

SamplerRun run_sampler_detailed(const SignalTrace& trace,
                                const SamplerSpec& sampler,
                                const CostParams& cost) {
  if (trace.values.size() < 2) {
    throw std::invalid_argument("trace too short to sample");
  }
  const auto& values = trace.values;
  const auto last_index = static_cast<std::int64_t>(values.size()) - 1;

  SamplerRun run;
  run.set.seed = trace.seed;

  if (const auto* u = std::get_if<UniformSamplerSpec>(&sampler)) {
    run.set = run_uniform_baseline(trace, u->rate);
    return run;
  }

  if (const auto* g = std::get_if<GreedyAr1SamplerSpec>(&sampler)) {
    const std::int64_t t_star = ar1_greedy_increment(g->alpha, cost);
    run.set.sampler_id = "greedy_ar1";
    run.set.n_init = 1;
    run.set.samples.push_back({0, values[0]});
    for (std::int64_t t = t_star; t <= last_index; t += t_star) {
      run.set.samples.push_back({t, values[static_cast<std::size_t>(t)]});
      run.steps.push_back({t, t_star, StateEstimate{}, -1});
    }
    return run;
  }

  if (const auto* d = std::get_if<ScDpSamplerSpec>(&sampler)) {
    const PolicyTable policy = sc_value_iteration(d->params, cost.rho, d->dp);
    if (!policy.converged) {
      throw std::runtime_error("value iteration did not converge");
    }
    run.set.sampler_id = "dp_source_coding";
    run.set.n_init = 1;
    run.set.samples.push_back({0, values[0]});
    std::int64_t t = 0;
    while (true) {
      const double v = values[static_cast<std::size_t>(t)];
      require_binary_value(v);
      const std::int64_t inc = policy.t[v == 0.0 ? 0 : 1];
      if (t + inc > last_index) break;
      t += inc;
      run.set.samples.push_back({t, values[static_cast<std::size_t>(t)]});
      run.steps.push_back({t, inc, StateEstimate{}, -1});
    }
    return run;
  }

  // Both markov samplers share the windowed-state fold; only the increment
  // rule differs.
  const GreedyMarkovSamplerSpec* gm = std::get_if<GreedyMarkovSamplerSpec>(&sampler);
  const AdpMarkovSamplerSpec* ad = std::get_if<AdpMarkovSamplerSpec>(&sampler);
  const std::size_t m = gm ? gm->m : ad->m;
  const MarkovAr1Params& params = gm ? gm->params : ad->params;
  if (m < 2) throw std::invalid_argument("estimator window must be >= 2");
  if (values.size() <= m) {
    throw std::invalid_argument("trace too short for the estimator window");
  }

  run.set.sampler_id = gm ? (gm->genie ? "genie_greedy" : "greedy_markov")
                          : "adp_markov";
  run.set.n_init = m;
  SamplingState state(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto t = static_cast<std::int64_t>(k);
    state.push(t, values[k]);
    run.set.samples.push_back({t, values[k]});
  }

  std::int64_t t = static_cast<std::int64_t>(m) - 1;
  while (true) {
    StateEstimate est;
    std::int64_t inc = 0;
    if (gm) {
      est = gm->genie ? genie_estimate(trace, t) : estimate_theta(state, params);
      inc = greedy_markov_increment(est, params, cost);
    } else {
      const AdpStep step = adp_step(state, params, cost, ad->adp);
      est = step.estimate;
      inc = step.t;
    }
    if (t + inc > last_index) break;
    const int truth = window_truth(trace, state.entries().front().t, t);
    t += inc;
    const double v = values[static_cast<std::size_t>(t)];
    state.push(t, v);
    run.set.samples.push_back({t, v});
    run.steps.push_back({t, inc, est, truth});
  }
  return run;
}

SampleSet run_sampler(const SignalTrace& trace, const SamplerSpec& sampler,
                      const CostParams& cost) {
  return run_sampler_detailed(trace, sampler, cost).set;
}

std::vector<std::int64_t> replay_times(
    const std::vector<double>& values,
    const std::vector<std::int64_t>& init_times, const SamplerSpec& sampler,
    const CostParams& cost, const std::vector<std::int8_t>* genie_states) {
  if (init_times.empty() || init_times.size() > values.size()) {
    throw std::invalid_argument("initialization times inconsistent with values");
  }

  if (const auto* u = std::get_if<UniformSamplerSpec>(&sampler)) {
    // The schedule is a fixed function of the index, so the decoder only
    // needs the sample count.
    const double period = 1.0 / u->rate;
    if (!(u->rate > 0.0) || !(u->rate <= 1.0)) {
      throw std::invalid_argument("uniform rate must lie in (0, 1]");
    }
    std::vector<std::int64_t> times{0};
    for (std::int64_t i = 1; times.size() < values.size(); ++i) {
      const std::int64_t t = std::llround(static_cast<double>(i) * period);
      if (t > times.back()) times.push_back(t);
    }
    for (std::size_t k = 0; k < init_times.size(); ++k) {
      if (times[k] != init_times[k]) {
        throw std::invalid_argument(
            "initialization times inconsistent with sampler");
      }
    }
    return times;
  }

  if (const auto* g = std::get_if<GreedyAr1SamplerSpec>(&sampler)) {
    if (init_times.size() != 1) {
      throw std::invalid_argument("greedy_ar1 takes one initialization time");
    }
    const std::int64_t t_star = ar1_greedy_increment(g->alpha, cost);
    std::vector<std::int64_t> times = init_times;
    while (times.size() < values.size()) times.push_back(times.back() + t_star);
    return times;
  }

  if (const auto* d = std::get_if<ScDpSamplerSpec>(&sampler)) {
    if (init_times.size() != 1) {
      throw std::invalid_argument(
          "dp_source_coding takes one initialization time");
    }
    const PolicyTable policy = sc_value_iteration(d->params, cost.rho, d->dp);
    if (!policy.converged) {
      throw std::runtime_error("value iteration did not converge");
    }
    std::vector<std::int64_t> times = init_times;
    for (std::size_t k = 1; k < values.size(); ++k) {
      require_binary_value(values[k - 1]);
      times.push_back(times.back() + policy.t[values[k - 1] == 0.0 ? 0 : 1]);
    }
    return times;
  }

  const GreedyMarkovSamplerSpec* gm = std::get_if<GreedyMarkovSamplerSpec>(&sampler);
  const AdpMarkovSamplerSpec* ad = std::get_if<AdpMarkovSamplerSpec>(&sampler);
  const std::size_t m = gm ? gm->m : ad->m;
  const MarkovAr1Params& params = gm ? gm->params : ad->params;
  if (init_times.size() != m) {
    throw std::invalid_argument(
        "markov sampler needs one initialization time per window slot");
  }
  if (gm && gm->genie && genie_states == nullptr) {
    throw std::invalid_argument("genie replay needs the disclosed states");
  }

  SamplingState state(m);
  std::vector<std::int64_t> times = init_times;
  for (std::size_t k = 0; k < m; ++k) state.push(init_times[k], values[k]);
  for (std::size_t k = m; k < values.size(); ++k) {
    const std::int64_t t = state.last_time();
    std::int64_t inc = 0;
    if (gm) {
      StateEstimate est;
      if (gm->genie) {
        const int theta = (*genie_states)[static_cast<std::size_t>(t)];
        est.theta_hat = theta;
        est.p_error = 0.0;
        est.posterior = {theta == 0 ? 1.0 : 0.0, theta == 1 ? 1.0 : 0.0, 0.0};
      } else {
        est = estimate_theta(state, params);
      }
      inc = greedy_markov_increment(est, params, cost);
    } else {
      inc = adp_step(state, params, cost, ad->adp).t;
    }
    times.push_back(t + inc);
    state.push(times.back(), values[k]);
  }
  return times;
}

namespace {

Reconstruction reconstruct_for_curve(const SignalTrace& trace,
                                     const SampleSet& set,
                                     const ExperimentSpec& spec,
                                     const CurveSpec& curve) {
  const std::size_t horizon = trace.values.size();
  if (curve.recon == "clc") return reconstruct_clc(set, horizon);
  if (curve.recon == "nclc") return reconstruct_nclc(set, horizon);
  if (curve.recon == "sc_fill") return sc_reconstruct(set, horizon);
  if (curve.recon != "glp") {
    throw std::invalid_argument("unknown reconstruction: " + curve.recon);
  }

  GlpReconConfig cfg;
  cfg.m = spec.glp_m;
  cfg.estimator_m = spec.estimator_m;
  cfg.window = spec.est_window;
  cfg.max_lag = spec.est_max_lag;

  std::string acf = curve.acf;
  if (acf.empty()) acf = spec.model == "ar1" ? "model" : "conditional";
  if (acf == "model") {
    if (spec.model != "ar1") {
      throw std::invalid_argument("model autocorrelation needs an ar1 signal");
    }
    cfg.mode = GlpAcfMode::Model;
    cfg.alpha = spec.ar1.alpha;
  } else if (acf == "conditional") {
    if (spec.model != "markov_ar1") {
      throw std::invalid_argument(
          "conditional autocorrelation needs a markov_ar1 signal");
    }
    cfg.mode = GlpAcfMode::Conditional;
    cfg.markov = spec.markov;
    if (curve.sampler == "genie_greedy") cfg.genie_states = &trace.hidden_states;
  } else if (acf == "estimated") {
    cfg.mode = GlpAcfMode::Estimated;
  } else {
    throw std::invalid_argument("unknown autocorrelation mode: " + acf);
  }
  return reconstruct_glp(set, horizon, cfg);
}

}  // namespace

RunStats evaluate_run(const SignalTrace& trace, const SampleSet& set,
                      const ExperimentSpec& spec, const CurveSpec& curve,
                      double rho) {
  if (set.samples.size() <= set.n_init) {
    throw std::runtime_error("run produced no samples beyond initialization");
  }
  const Reconstruction recon = reconstruct_for_curve(trace, set, spec, curve);

  RunStats stats;
  stats.samples = set.samples.size();
  stats.dist = distortion(trace.values, recon, spec.measure,
                          spec.exclude_sample_times);

  const std::int64_t t_init_last = set.samples[set.n_init - 1].t;
  const std::int64_t t_last = set.samples.back().t;
  stats.rate = static_cast<double>(set.samples.size() - set.n_init) /
               static_cast<double>(t_last - t_init_last);

  // Realized per-decision cost: interior reconstruction error of each
  // post-initialization interval plus the sampling charge.
  double cost_sum = 0.0;
  std::size_t intervals = 0;
  for (std::size_t i = set.n_init; i < set.samples.size(); ++i) {
    const std::int64_t lo = set.samples[i - 1].t;
    const std::int64_t hi = set.samples[i].t;
    double err = 0.0;
    for (std::int64_t t = lo + 1; t < hi; ++t) {
      const double truth = trace.values[static_cast<std::size_t>(t)];
      const double guess = recon.values[static_cast<std::size_t>(t)];
      if (spec.measure == DistortionMeasure::Mse) {
        const double d = truth - guess;
        err += d * d;
      } else {
        err += truth == guess ? 0.0 : 1.0;
      }
    }
    cost_sum += err + (rho > 0.0 ? rho / static_cast<double>(hi - lo) : 0.0);
    ++intervals;
  }
  stats.avg_cost = cost_sum / static_cast<double>(intervals);
  return stats;
}

namespace {

SignalTrace make_trace(const ExperimentSpec& spec, std::uint64_t seed) {
  if (spec.model == "ar1") return gen_ar1(spec.ar1, spec.length, seed);
  if (spec.model == "markov_ar1") {
    return gen_markov_ar1(spec.markov, spec.length, seed);
  }
  if (spec.model == "binary_hmm") {
    return gen_binary_hmm(spec.hmm, spec.length, seed);
  }
  throw std::invalid_argument("unknown signal model: " + spec.model);
}

SamplerSpec make_sampler(const ExperimentSpec& spec, const CurveSpec& curve,
                         double sweep_value) {
  if (curve.sampler == "uniform") return UniformSamplerSpec{sweep_value};
  if (curve.sampler == "greedy_ar1") return GreedyAr1SamplerSpec{spec.ar1.alpha};
  if (curve.sampler == "greedy_markov") {
    return GreedyMarkovSamplerSpec{spec.markov, spec.estimator_m, false};
  }
  if (curve.sampler == "genie_greedy") {
    return GreedyMarkovSamplerSpec{spec.markov, spec.estimator_m, true};
  }
  if (curve.sampler == "dp_source_coding") {
    return ScDpSamplerSpec{spec.hmm, spec.dp};
  }
  if (curve.sampler == "adp_markov") {
    return AdpMarkovSamplerSpec{spec.markov, spec.estimator_m, spec.adp};
  }
  throw std::invalid_argument("unknown sampler: " + curve.sampler);
}

std::string curve_recon_label(const CurveSpec& curve) {
  if (curve.sampler == "analytic") return "pe=" + fmt_double(curve.pe);
  if (curve.recon == "glp" && !curve.acf.empty()) return "glp:" + curve.acf;
  return curve.recon;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  const auto n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

}  // namespace

RdPointRow rd_point(const ExperimentSpec& spec, const CurveSpec& curve,
                    double sweep_value) {
  if (spec.seeds.empty()) throw std::invalid_argument("no seeds to run");
  const bool is_uniform = curve.sampler == "uniform";
  CostParams cost;
  cost.rho = is_uniform ? 1.0 : sweep_value;  // unused by the uniform sampler
  cost.sigma_max_sq = spec.sigma_max_sq;
  cost.t_up = spec.t_up;
  const double eval_rho = is_uniform ? 0.0 : sweep_value;
  const SamplerSpec sampler = make_sampler(spec, curve, sweep_value);

  std::vector<double> rates, dists, costs;
  rates.reserve(spec.seeds.size());
  for (std::uint64_t seed : spec.seeds) {
    const SignalTrace trace = make_trace(spec, seed);
    const SampleSet set = run_sampler(trace, sampler, cost);
    const RunStats stats = evaluate_run(trace, set, spec, curve, eval_rho);
    rates.push_back(stats.rate);
    dists.push_back(stats.dist);
    costs.push_back(stats.avg_cost);
  }

  RdPointRow row;
  row.rho = sweep_value;
  const MeanSe r = mean_se(rates), d = mean_se(dists), c = mean_se(costs);
  row.rate = r.mean;
  row.se_rate = r.se;
  row.dist = d.mean;
  row.se_dist = d.se;
  row.avg_cost = c.mean;
  row.se_cost = c.se;
  row.sampler = curve.sampler;
  row.recon = curve_recon_label(curve);
  row.seeds = spec.seeds.size();
  return row;
}

std::vector<RdPointRow> analytic_curves(const MarkovAr1Params& params,
                                        const CostParams& cost,
                                        const std::vector<double>& pe_list,
                                        const std::vector<double>& rho_list) {
  std::vector<RdPointRow> rows;
  rows.reserve(pe_list.size() * rho_list.size());
  for (double pe : pe_list) {
    for (double rho : rho_list) {
      CostParams c = cost;
      c.rho = rho;
      const RdBounds b = markov_rd_bounds(params, c, pe, pe);
      RdPointRow row;
      row.rho = rho;
      row.rate = b.rate_low;
      row.dist = b.dist_low;
      row.sampler = "analytic";
      row.recon = "pe=" + fmt_double(pe);
      rows.push_back(row);
    }
  }
  return rows;
}

/* ----- spec files ----- */

namespace {

[[noreturn]] void spec_error(const std::string& path, const std::string& msg) {
  throw std::invalid_argument("spec: " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) spec_error(path + "." + it.key(), "unknown key");
  }
}

double get_num(const json& obj, const std::string& path, const char* key,
               double def, bool required = false) {
  if (!obj.contains(key)) {
    if (required) spec_error(path + "." + key, "required");
    return def;
  }
  const json& v = obj.at(key);
  if (!v.is_number()) spec_error(path + "." + key, "expected a number");
  return v.get<double>();
}

std::int64_t get_int(const json& obj, const std::string& path, const char* key,
                     std::int64_t def, bool required = false) {
  if (!obj.contains(key)) {
    if (required) spec_error(path + "." + key, "required");
    return def;
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer()) spec_error(path + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_boolean()) spec_error(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& path, const char* key,
                    const std::string& def, bool required = false) {
  if (!obj.contains(key)) {
    if (required) spec_error(path + "." + key, "required");
    return def;
  }
  const json& v = obj.at(key);
  if (!v.is_string()) spec_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_num_array(const json& obj, const std::string& path,
                                  const char* key) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  const json& v = obj.at(key);
  if (!v.is_array()) spec_error(path + "." + key, "expected an array");
  for (const json& e : v) {
    if (!e.is_number()) spec_error(path + "." + key, "expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void parse_signal(const json& sig, ExperimentSpec& spec) {
  check_keys(sig, "signal",
             {"model", "alpha", "alpha0", "alpha1", "p01", "p10", "p", "eps0",
              "eps1", "length", "seeds", "seed0"});
  spec.model = get_str(sig, "signal", "model", "", true);
  if (spec.model == "ar1") {
    spec.ar1.alpha = get_num(sig, "signal", "alpha", 0.0, true);
  } else if (spec.model == "markov_ar1") {
    spec.markov.alpha0 = get_num(sig, "signal", "alpha0", 0.0, true);
    spec.markov.alpha1 = get_num(sig, "signal", "alpha1", 0.0, true);
    if (sig.contains("p")) {
      const double p = get_num(sig, "signal", "p", 0.0);
      spec.markov.p01 = p;
      spec.markov.p10 = p;
    } else {
      spec.markov.p01 = get_num(sig, "signal", "p01", 0.0, true);
      spec.markov.p10 = get_num(sig, "signal", "p10", 0.0, true);
    }
  } else if (spec.model == "binary_hmm") {
    spec.hmm.eps0 = get_num(sig, "signal", "eps0", 0.0, true);
    spec.hmm.eps1 = get_num(sig, "signal", "eps1", 0.0, true);
  } else {
    spec_error("signal.model", "unknown model '" + spec.model + "'");
  }

  const std::int64_t length = get_int(sig, "signal", "length", 0, true);
  if (length < 2) spec_error("signal.length", "must be >= 2");
  spec.length = static_cast<std::size_t>(length);

  if (!sig.contains("seeds")) spec_error("signal.seeds", "required");
  const json& seeds = sig.at("seeds");
  if (seeds.is_number_integer()) {
    const std::int64_t n = seeds.get<std::int64_t>();
    if (n < 1) spec_error("signal.seeds", "must be >= 1");
    const auto seed0 =
        static_cast<std::uint64_t>(get_int(sig, "signal", "seed0", 1));
    for (std::int64_t i = 0; i < n; ++i) {
      spec.seeds.push_back(seed0 + static_cast<std::uint64_t>(i));
    }
  } else if (seeds.is_array() && !seeds.empty()) {
    for (const json& e : seeds) {
      if (!e.is_number_integer()) spec_error("signal.seeds", "expected integers");
      spec.seeds.push_back(e.get<std::uint64_t>());
    }
  } else {
    spec_error("signal.seeds", "expected a count or a nonempty array");
  }
}

void parse_curve(const json& c, std::size_t idx, const ExperimentSpec& spec,
                 CurveSpec& curve) {
  const std::string path = "curve[" + std::to_string(idx) + "]";
  check_keys(c, path, {"sampler", "recon", "acf", "rates", "pe"});
  curve.sampler = get_str(c, path, "sampler", "", true);

  static const std::set<std::string> samplers{
      "uniform",     "greedy_ar1",       "greedy_markov",
      "genie_greedy", "dp_source_coding", "adp_markov",
      "analytic"};
  if (samplers.count(curve.sampler) == 0) {
    spec_error(path + ".sampler", "unknown sampler '" + curve.sampler + "'");
  }

  const bool needs_markov = curve.sampler == "greedy_markov" ||
                            curve.sampler == "genie_greedy" ||
                            curve.sampler == "adp_markov" ||
                            curve.sampler == "analytic";
  if (needs_markov && spec.model != "markov_ar1") {
    spec_error(path + ".sampler", "needs a markov_ar1 signal");
  }
  if (curve.sampler == "greedy_ar1" && spec.model != "ar1") {
    spec_error(path + ".sampler", "needs an ar1 signal");
  }
  if (curve.sampler == "dp_source_coding" && spec.model != "binary_hmm") {
    spec_error(path + ".sampler", "needs a binary_hmm signal");
  }

  if (curve.sampler == "analytic") {
    if (c.contains("recon")) spec_error(path + ".recon", "not an analytic knob");
    if (spec.markov.p01 != spec.markov.p10) {
      spec_error(path + ".sampler", "analytic curves need p01 == p10");
    }
    curve.pe = get_num(c, path, "pe", 0.0);
    if (!(curve.pe >= 0.0) || !(curve.pe <= 1.0)) {
      spec_error(path + ".pe", "must lie in [0, 1]");
    }
    return;
  }
  if (c.contains("pe")) spec_error(path + ".pe", "only analytic curves take pe");

  curve.recon = get_str(c, path, "recon", "", true);
  static const std::set<std::string> recons{"glp", "clc", "nclc", "sc_fill"};
  if (recons.count(curve.recon) == 0) {
    spec_error(path + ".recon", "unknown reconstruction '" + curve.recon + "'");
  }
  if (curve.recon == "sc_fill" && spec.model != "binary_hmm") {
    spec_error(path + ".recon", "sc_fill needs a binary_hmm signal");
  }
  if (curve.recon == "glp" && spec.model == "binary_hmm") {
    spec_error(path + ".recon", "glp needs a gaussian signal");
  }

  curve.acf = get_str(c, path, "acf", "");
  if (!curve.acf.empty()) {
    if (curve.recon != "glp") {
      spec_error(path + ".acf", "only glp reconstruction takes acf");
    }
    static const std::set<std::string> acfs{"model", "conditional", "estimated"};
    if (acfs.count(curve.acf) == 0) {
      spec_error(path + ".acf", "unknown mode '" + curve.acf + "'");
    }
    if (curve.acf == "model" && spec.model != "ar1") {
      spec_error(path + ".acf", "model mode needs an ar1 signal");
    }
    if (curve.acf == "conditional" && spec.model != "markov_ar1") {
      spec_error(path + ".acf", "conditional mode needs a markov_ar1 signal");
    }
  }

  curve.rates = get_num_array(c, path, "rates");
  if (curve.sampler == "uniform") {
    if (curve.rates.empty()) spec_error(path + ".rates", "required for uniform");
    for (double r : curve.rates) {
      if (!(r > 0.0) || !(r <= 1.0)) {
        spec_error(path + ".rates", "rates must lie in (0, 1]");
      }
    }
  } else if (!curve.rates.empty()) {
    spec_error(path + ".rates", "only uniform curves take rates");
  }
}

}  // namespace

ExperimentSpec parse_experiment_spec_text(const std::string& toml_text) {
  const json root = parse_toml_text(toml_text);
  check_keys(root, "spec",
             {"signal", "cost", "sampler", "dp", "adp", "reconstruction",
              "output", "curve"});

  ExperimentSpec spec;
  if (!root.contains("signal")) spec_error("signal", "required section");
  parse_signal(root.at("signal"), spec);

  if (root.contains("cost")) {
    const json& cost = root.at("cost");
    check_keys(cost, "cost", {"rho", "sigma_max_sq", "t_up"});
    spec.rho = get_num_array(cost, "cost", "rho");
    for (double r : spec.rho) {
      if (!(r > 0.0)) spec_error("cost.rho", "values must be positive");
    }
    spec.sigma_max_sq = get_num(cost, "cost", "sigma_max_sq", 1.0);
    if (!(spec.sigma_max_sq > 0.0)) {
      spec_error("cost.sigma_max_sq", "must be positive");
    }
    spec.t_up = get_int(cost, "cost", "t_up", 200);
    if (spec.t_up < 1) spec_error("cost.t_up", "must be >= 1");
  }

  if (root.contains("sampler")) {
    const json& s = root.at("sampler");
    check_keys(s, "sampler", {"estimator_m"});
    const std::int64_t m = get_int(s, "sampler", "estimator_m", 10);
    if (m < 2) spec_error("sampler.estimator_m", "must be >= 2");
    spec.estimator_m = static_cast<std::size_t>(m);
  }

  if (root.contains("dp")) {
    const json& d = root.at("dp");
    check_keys(d, "dp", {"beta", "t_max", "tol", "max_iters", "override_t_max"});
    spec.dp.beta = get_num(d, "dp", "beta", spec.dp.beta);
    spec.dp.t_max = get_int(d, "dp", "t_max", spec.dp.t_max);
    spec.dp.tol = get_num(d, "dp", "tol", spec.dp.tol);
    spec.dp.max_iters = get_int(d, "dp", "max_iters", spec.dp.max_iters);
    spec.dp.override_t_max_bound =
        get_bool(d, "dp", "override_t_max", spec.dp.override_t_max_bound);
  }

  if (root.contains("adp")) {
    const json& a = root.at("adp");
    check_keys(a, "adp",
               {"beta", "gamma", "literal_cost_sign", "mc_draws", "mc_seed"});
    spec.adp.beta = get_num(a, "adp", "beta", spec.adp.beta);
    spec.adp.gamma = get_num(a, "adp", "gamma", spec.adp.gamma);
    spec.adp.literal_cost_sign =
        get_bool(a, "adp", "literal_cost_sign", spec.adp.literal_cost_sign);
    spec.adp.mc_draws = static_cast<int>(
        get_int(a, "adp", "mc_draws", spec.adp.mc_draws));
    spec.adp.mc_seed = static_cast<std::uint64_t>(
        get_int(a, "adp", "mc_seed", static_cast<std::int64_t>(spec.adp.mc_seed)));
  }

  if (root.contains("reconstruction")) {
    const json& r = root.at("reconstruction");
    check_keys(r, "reconstruction",
               {"measure", "exclude_sample_times", "glp_m", "est_window",
                "est_max_lag"});
    const std::string measure = get_str(r, "reconstruction", "measure", "mse");
    if (measure == "mse") {
      spec.measure = DistortionMeasure::Mse;
    } else if (measure == "hamming") {
      spec.measure = DistortionMeasure::Hamming;
    } else {
      spec_error("reconstruction.measure", "expected 'mse' or 'hamming'");
    }
    spec.exclude_sample_times =
        get_bool(r, "reconstruction", "exclude_sample_times", false);
    const std::int64_t glp_m = get_int(r, "reconstruction", "glp_m", 2);
    if (glp_m < 1) spec_error("reconstruction.glp_m", "must be >= 1");
    spec.glp_m = static_cast<std::size_t>(glp_m);
    spec.est_window = get_int(r, "reconstruction", "est_window", 1024);
    spec.est_max_lag = get_int(r, "reconstruction", "est_max_lag", 64);
  }
  if (spec.measure == DistortionMeasure::Hamming && spec.model != "binary_hmm") {
    spec_error("reconstruction.measure", "hamming needs a binary_hmm signal");
  }

  if (!root.contains("output")) spec_error("output", "required section");
  const json& out = root.at("output");
  check_keys(out, "output", {"path"});
  spec.out_path = get_str(out, "output", "path", "", true);

  if (!root.contains("curve") || !root.at("curve").is_array() ||
      root.at("curve").empty()) {
    spec_error("curve", "at least one [[curve]] required");
  }
  const json& curves = root.at("curve");
  for (std::size_t i = 0; i < curves.size(); ++i) {
    CurveSpec curve;
    parse_curve(curves[i], i, spec, curve);
    spec.curves.push_back(curve);
  }

  bool needs_rho = false;
  for (const CurveSpec& c : spec.curves) {
    needs_rho = needs_rho || c.sampler != "uniform";
  }
  if (needs_rho && spec.rho.empty()) {
    spec_error("cost.rho", "required by the non-uniform curves");
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open spec file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_spec_text(buf.str());
}

/* ----- experiment driver ----- */

namespace {

json spec_echo(const ExperimentSpec& spec) {
  json j;
  json sig;
  sig["model"] = spec.model;
  if (spec.model == "ar1") {
    sig["alpha"] = spec.ar1.alpha;
  } else if (spec.model == "markov_ar1") {
    sig["alpha0"] = spec.markov.alpha0;
    sig["alpha1"] = spec.markov.alpha1;
    sig["p01"] = spec.markov.p01;
    sig["p10"] = spec.markov.p10;
  } else {
    sig["eps0"] = spec.hmm.eps0;
    sig["eps1"] = spec.hmm.eps1;
  }
  sig["length"] = spec.length;
  sig["seeds"] = spec.seeds;
  j["signal"] = sig;
  j["cost"] = {{"rho", spec.rho},
               {"sigma_max_sq", spec.sigma_max_sq},
               {"t_up", spec.t_up}};
  j["sampler"] = {{"estimator_m", spec.estimator_m}};
  j["dp"] = {{"beta", spec.dp.beta},
             {"t_max", spec.dp.t_max},
             {"tol", spec.dp.tol},
             {"max_iters", spec.dp.max_iters},
             {"override_t_max", spec.dp.override_t_max_bound}};
  j["adp"] = {{"beta", spec.adp.beta},
              {"gamma", spec.adp.gamma},
              {"literal_cost_sign", spec.adp.literal_cost_sign},
              {"mc_draws", spec.adp.mc_draws},
              {"mc_seed", spec.adp.mc_seed}};
  j["reconstruction"] = {
      {"measure", spec.measure == DistortionMeasure::Mse ? "mse" : "hamming"},
      {"exclude_sample_times", spec.exclude_sample_times},
      {"glp_m", spec.glp_m},
      {"est_window", spec.est_window},
      {"est_max_lag", spec.est_max_lag}};
  j["output"] = {{"path", spec.out_path}};
  json curves = json::array();
  for (const CurveSpec& c : spec.curves) {
    json cj;
    cj["sampler"] = c.sampler;
    if (c.sampler == "analytic") {
      cj["pe"] = c.pe;
    } else {
      cj["recon"] = c.recon;
      if (!c.acf.empty()) cj["acf"] = c.acf;
      if (!c.rates.empty()) cj["rates"] = c.rates;
    }
    curves.push_back(cj);
  }
  j["curve"] = curves;
  return j;
}

struct PointTask {
  std::size_t curve_idx = 0;
  double sweep = 0.0;
  std::size_t row_idx = 0;
};

RdPointRow analytic_point(const ExperimentSpec& spec, const CurveSpec& curve,
                          double rho) {
  CostParams cost;
  cost.rho = rho;
  cost.sigma_max_sq = spec.sigma_max_sq;
  cost.t_up = spec.t_up;
  const RdBounds b = markov_rd_bounds(spec.markov, cost, curve.pe, curve.pe);
  RdPointRow row;
  row.rho = rho;
  row.rate = b.rate_low;
  row.dist = b.dist_low;
  row.sampler = "analytic";
  row.recon = curve_recon_label(curve);
  return row;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs) {
  if (spec.curves.empty()) throw std::invalid_argument("no curves to run");
  int n_jobs = jobs;
  if (n_jobs <= 0) n_jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (n_jobs < 1) n_jobs = 1;

  std::vector<PointTask> tasks;
  std::size_t n_rows = 0;
  for (std::size_t ci = 0; ci < spec.curves.size(); ++ci) {
    const CurveSpec& curve = spec.curves[ci];
    const std::vector<double>& sweeps =
        curve.sampler == "uniform" ? curve.rates : spec.rho;
    for (double sweep : sweeps) tasks.push_back({ci, sweep, n_rows++});
  }

  ExperimentResult result;
  result.rows.resize(n_rows);

  const auto run_task = [&](const PointTask& task) {
    const CurveSpec& curve = spec.curves[task.curve_idx];
    result.rows[task.row_idx] = curve.sampler == "analytic"
                                    ? analytic_point(spec, curve, task.sweep)
                                    : rd_point(spec, curve, task.sweep);
  };

  if (n_jobs == 1 || tasks.size() <= 1) {
    for (const PointTask& task : tasks) run_task(task);
  } else {
    // Tasks fill preallocated slots, so the output order never depends on
    // the scheduling.
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    const auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (first_error) return;
        }
        try {
          run_task(tasks[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(n_jobs), tasks.size());
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  std::string csv =
      "rho,rate,distortion,stderr_rate,stderr_distortion,sampler,recon,seeds\n";
  for (const RdPointRow& row : result.rows) {
    csv += fmt_double(row.rho);
    csv += ',';
    csv += fmt_double(row.rate);
    csv += ',';
    csv += fmt_double(row.dist);
    csv += ',';
    csv += fmt_double(row.se_rate);
    csv += ',';
    csv += fmt_double(row.se_dist);
    csv += ',';
    csv += row.sampler;
    csv += ',';
    csv += row.recon;
    csv += ',';
    csv += std::to_string(row.seeds);
    csv += '\n';
  }
  result.csv = csv;

  json manifest;
  manifest["version"] = kVersion;
  manifest["rng"] = kRngId;
  manifest["jobs"] = n_jobs;
  manifest["spec"] = spec_echo(spec);
  json points = json::array();
  for (const RdPointRow& row : result.rows) {
    points.push_back({{"rho", row.rho},
                      {"rate", row.rate},
                      {"distortion", row.dist},
                      {"stderr_rate", row.se_rate},
                      {"stderr_distortion", row.se_dist},
                      {"sampler", row.sampler},
                      {"recon", row.recon},
                      {"seeds", row.seeds},
                      {"avg_cost", row.avg_cost},
                      {"stderr_cost", row.se_cost}});
  }
  manifest["points"] = points;
  result.manifest_json = manifest.dump(2);
  result.manifest_json += '\n';
  return result;
}

void write_experiment_outputs(const ExperimentResult& result,
                              const ExperimentSpec& spec) {
  std::ofstream csv(spec.out_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + spec.out_path);
  csv << result.csv;
  csv.close();
  const std::string mpath = spec.out_path + ".manifest.json";
  std::ofstream manifest(mpath, std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot write " + mpath);
  manifest << result.manifest_json;
}

}  // namespace tans
