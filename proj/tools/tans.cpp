// Command-line front end: generate traces, run single samplers, run
// experiment specs, solve source-coding policies, emit analytical curves.
//
// Exit codes: 0 success, 1 domain/validation error, 2 usage error.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tans/dp.hpp"
#include "tans/greedy.hpp"
#include "tans/harness.hpp"
#include "tans/reconstruct.hpp"
#include "tans/rng.hpp"
#include "tans/signals.hpp"
#include "tans/version.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Primary output goes to --out or stdout; file outputs get a sidecar
// manifest that records everything needed to re-run them byte-identically.
void emit(const std::string& out_path, const std::string& data,
          const std::string& verb, const json& options) {
  if (out_path.empty()) {
    std::cout << data;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + out_path);
  f << data;
  f.close();
  json manifest;
  manifest["version"] = tans::kVersion;
  manifest["rng"] = tans::kRngId;
  manifest["verb"] = verb;
  manifest["options"] = options;
  std::ofstream m(out_path + ".manifest.json", std::ios::binary);
  if (!m) throw std::runtime_error("cannot write " + out_path + ".manifest.json");
  m << manifest.dump(2) << '\n';
}

struct ModelFlags {
  std::string model;
  double alpha = 0.0;
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double p01 = -1.0;
  double p10 = -1.0;
  double p = -1.0;  // symmetric shorthand, sets both transition rates
  double eps0 = 0.0;
  double eps1 = 0.0;
  std::int64_t len = 1000;
};

void add_model_flags(CLI::App* sub, ModelFlags& flags, bool with_model) {
  if (with_model) {
    sub->add_option("--model", flags.model,
                    "signal model: ar1 | markov_ar1 | binary_hmm");
  }
  sub->add_option("--alpha", flags.alpha, "ar1 coefficient");
  sub->add_option("--alpha0", flags.alpha0, "regime-0 coefficient");
  sub->add_option("--alpha1", flags.alpha1, "regime-1 coefficient");
  sub->add_option("--p01", flags.p01, "transition probability 0 -> 1");
  sub->add_option("--p10", flags.p10, "transition probability 1 -> 0");
  sub->add_option("--p", flags.p, "symmetric transition probability");
  sub->add_option("--eps0", flags.eps0, "flip probability out of state 0");
  sub->add_option("--eps1", flags.eps1, "flip probability out of state 1");
  sub->add_option("--len", flags.len, "trace length");
}

// Closed-form verbs take only the regime-chain parameters.
void add_markov_flags(CLI::App* sub, ModelFlags& flags) {
  sub->add_option("--alpha0", flags.alpha0, "regime-0 coefficient");
  sub->add_option("--alpha1", flags.alpha1, "regime-1 coefficient");
  sub->add_option("--p01", flags.p01, "transition probability 0 -> 1");
  sub->add_option("--p10", flags.p10, "transition probability 1 -> 0");
  sub->add_option("--p", flags.p, "symmetric transition probability");
}

tans::MarkovAr1Params markov_params(const ModelFlags& flags) {
  tans::MarkovAr1Params params;
  params.alpha0 = flags.alpha0;
  params.alpha1 = flags.alpha1;
  if (flags.p >= 0.0) {
    params.p01 = flags.p;
    params.p10 = flags.p;
  } else {
    params.p01 = flags.p01 < 0.0 ? 0.0 : flags.p01;
    params.p10 = flags.p10 < 0.0 ? 0.0 : flags.p10;
  }
  return params;
}

tans::SignalTrace build_trace(const ModelFlags& flags, std::uint64_t seed) {
  if (flags.len < 2) throw std::invalid_argument("--len must be >= 2");
  const auto length = static_cast<std::size_t>(flags.len);
  if (flags.model == "ar1") {
    return tans::gen_ar1({flags.alpha}, length, seed);
  }
  if (flags.model == "markov_ar1") {
    return tans::gen_markov_ar1(markov_params(flags), length, seed);
  }
  if (flags.model == "binary_hmm") {
    return tans::gen_binary_hmm({flags.eps0, flags.eps1}, length, seed);
  }
  throw std::invalid_argument("--model must be ar1, markov_ar1 or binary_hmm");
}

std::string trace_csv(const tans::SignalTrace& trace) {
  std::string out =
      trace.hidden_states.empty() ? "t,value\n" : "t,value,hidden_state\n";
  for (std::size_t t = 0; t < trace.values.size(); ++t) {
    out += std::to_string(t);
    out += ',';
    out += fmt(trace.values[t]);
    if (!trace.hidden_states.empty()) {
      out += ',';
      out += std::to_string(static_cast<int>(trace.hidden_states[t]));
    }
    out += '\n';
  }
  return out;
}

json trace_json(const tans::SignalTrace& trace) {
  json j;
  j["seed"] = trace.seed;
  j["values"] = trace.values;
  if (!trace.hidden_states.empty()) {
    std::vector<int> states(trace.hidden_states.begin(),
                            trace.hidden_states.end());
    j["hidden_states"] = states;
  }
  return j;
}

std::vector<double> log_spaced(double lo, double hi, std::int64_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw std::invalid_argument(
        "sweep needs 0 < rho-min < rho-max and rho-count >= 2");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  const double la = std::log(lo), lb = std::log(hi);
  for (std::int64_t i = 0; i < count; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back(std::exp(la + frac * (lb - la)));
  }
  return out;
}

std::string rows_csv(const std::vector<tans::RdPointRow>& rows) {
  std::string csv =
      "rho,rate,distortion,stderr_rate,stderr_distortion,sampler,recon,seeds\n";
  for (const auto& row : rows) {
    csv += fmt(row.rho) + ',' + fmt(row.rate) + ',' + fmt(row.dist) + ',' +
           fmt(row.se_rate) + ',' + fmt(row.se_dist) + ',' + row.sampler +
           ',' + row.recon + ',' + std::to_string(row.seeds) + '\n';
  }
  return csv;
}

json rows_json(const std::vector<tans::RdPointRow>& rows) {
  json points = json::array();
  for (const auto& row : rows) {
    points.push_back({{"rho", row.rho},
                      {"rate", row.rate},
                      {"distortion", row.dist},
                      {"stderr_rate", row.se_rate},
                      {"stderr_distortion", row.se_dist},
                      {"sampler", row.sampler},
                      {"recon", row.recon},
                      {"seeds", row.seeds}});
  }
  return points;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tans: time-stampless adaptive nonuniform sampling toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out_path;
  std::string format = "csv";
  int jobs = 0;
  app.add_option("--seed", seed, "RNG seed (env TANS_SEED)")
      ->envname("TANS_SEED");
  app.add_option("--out", out_path, "output path (default: stdout)");
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--jobs", jobs, "worker threads, 0 = available cores");

  ModelFlags gen_flags;
  auto* gen = app.add_subcommand("gen", "generate a signal trace");
  gen->fallthrough();
  add_model_flags(gen, gen_flags, true);

  ModelFlags sample_flags;
  std::string sample_trace_path;
  std::string sampler_name;
  double rate = 0.5;
  double rho = 1.0;
  double sigma_max_sq = 1.0;
  std::int64_t t_up = 200;
  std::int64_t window_m = 10;
  tans::DpConfig dp_cfg;
  tans::AdpConfig adp_cfg;
  auto* sample = app.add_subcommand("sample", "run one sampler over a trace");
  sample->fallthrough();
  add_model_flags(sample, sample_flags, true);
  sample->add_option("--trace", sample_trace_path,
                     "read the trace from a CSV file instead of generating");
  sample
      ->add_option("--sampler", sampler_name,
                   "uniform | greedy_ar1 | greedy_markov | genie_greedy | "
                   "dp_source_coding | adp_markov")
      ->required();
  sample->add_option("--rate", rate, "uniform sampling rate in (0, 1]");
  sample->add_option("--rho", rho, "rate charge weight");
  sample->add_option("--sigma-max-sq", sigma_max_sq, "estimation-error power");
  sample->add_option("--t-up", t_up, "largest admissible increment");
  sample->add_option("--m", window_m, "sampling-state window size");
  sample->add_option("--beta", dp_cfg.beta, "discount factor");
  sample->add_option("--t-max", dp_cfg.t_max, "largest policy increment");
  sample->add_option("--tol", dp_cfg.tol, "value-iteration tolerance");
  sample->add_option("--max-iters", dp_cfg.max_iters, "value-iteration cap");
  sample->add_flag("--override-t-max", dp_cfg.override_t_max_bound,
                   "accept t-max beyond the modeling bound");
  sample->add_option("--adp-beta", adp_cfg.beta, "quality discount");
  sample->add_option("--adp-gamma", adp_cfg.gamma, "quality scale");
  sample->add_flag("--literal-cost-sign", adp_cfg.literal_cost_sign,
                   "add the quality term instead of subtracting it");
  sample->add_option("--mc-draws", adp_cfg.mc_draws,
                     "average the quality over sampled next values");
  sample->add_option("--mc-seed", adp_cfg.mc_seed, "quality sampling seed");

  std::string spec_path;
  auto* run = app.add_subcommand("run", "run an experiment spec");
  run->fallthrough();
  run->add_option("--spec", spec_path, "experiment spec (TOML)")->required();

  double sd_eps0 = 0.0, sd_eps1 = 0.0, sd_rho = 1.0;
  tans::DpConfig sd_cfg;
  auto* solve = app.add_subcommand("solve-dp", "solve a source-coding policy");
  solve->fallthrough();
  solve->add_option("--eps0", sd_eps0, "flip probability out of state 0")
      ->required();
  solve->add_option("--eps1", sd_eps1, "flip probability out of state 1")
      ->required();
  solve->add_option("--rho", sd_rho, "rate charge weight")->required();
  solve->add_option("--beta", sd_cfg.beta, "discount factor");
  solve->add_option("--t-max", sd_cfg.t_max, "largest policy increment");
  solve->add_option("--tol", sd_cfg.tol, "value-iteration tolerance");
  solve->add_option("--max-iters", sd_cfg.max_iters, "value-iteration cap");
  solve->add_flag("--override-t-max", sd_cfg.override_t_max_bound,
                  "accept t-max beyond the modeling bound");

  ModelFlags bounds_flags;
  double pe_low = 0.0, pe_up = 0.0, b_rho = 1.0, b_sigma = 1.0;
  std::int64_t b_t_up = 200;
  auto* bounds = app.add_subcommand(
      "bounds", "rate-distortion box for a symmetric regime chain");
  bounds->fallthrough();
  add_markov_flags(bounds, bounds_flags);
  bounds->add_option("--rho", b_rho, "rate charge weight")->required();
  bounds->add_option("--pe-low", pe_low, "estimator error lower bound");
  bounds->add_option("--pe-up", pe_up, "estimator error upper bound");
  bounds->add_option("--sigma-max-sq", b_sigma, "estimation-error power");
  bounds->add_option("--t-up", b_t_up, "largest admissible increment");

  ModelFlags curve_flags;
  std::vector<double> pe_list;
  std::vector<double> rho_list;
  double rho_min = 0.0, rho_max = 0.0;
  std::int64_t rho_count = 0;
  double c_sigma = 1.0;
  std::int64_t c_t_up = 200;
  auto* curves = app.add_subcommand(
      "curves", "closed-form rate-distortion curves at fixed error rates");
  curves->fallthrough();
  add_markov_flags(curves, curve_flags);
  curves->add_option("--pe", pe_list, "estimator error rate (repeatable)");
  curves->add_option("--rho", rho_list, "rate charge weight (repeatable)");
  curves->add_option("--rho-min", rho_min, "log sweep start");
  curves->add_option("--rho-max", rho_max, "log sweep end");
  curves->add_option("--rho-count", rho_count, "log sweep length");
  curves->add_option("--sigma-max-sq", c_sigma, "estimation-error power");
  curves->add_option("--t-up", c_t_up, "largest admissible increment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      const tans::SignalTrace trace = build_trace(gen_flags, seed);
      json options = {{"model", gen_flags.model},
                      {"len", gen_flags.len},
                      {"seed", seed},
                      {"format", format}};
      if (format == "csv") {
        emit(out_path, trace_csv(trace), "gen", options);
      } else {
        emit(out_path, trace_json(trace).dump(2) + "\n", "gen", options);
      }
      return 0;
    }

    if (sample->parsed()) {
      tans::SignalTrace trace;
      if (!sample_trace_path.empty()) {
        trace = tans::read_trace_csv(sample_trace_path);
      } else {
        trace = build_trace(sample_flags, seed);
      }

      tans::SamplerSpec sampler = tans::UniformSamplerSpec{rate};
      const auto m = static_cast<std::size_t>(window_m);
      if (sampler_name == "uniform") {
        sampler = tans::UniformSamplerSpec{rate};
      } else if (sampler_name == "greedy_ar1") {
        sampler = tans::GreedyAr1SamplerSpec{sample_flags.alpha};
      } else if (sampler_name == "greedy_markov") {
        sampler =
            tans::GreedyMarkovSamplerSpec{markov_params(sample_flags), m, false};
      } else if (sampler_name == "genie_greedy") {
        sampler =
            tans::GreedyMarkovSamplerSpec{markov_params(sample_flags), m, true};
      } else if (sampler_name == "dp_source_coding") {
        sampler = tans::ScDpSamplerSpec{
            {sample_flags.eps0, sample_flags.eps1}, dp_cfg};
      } else if (sampler_name == "adp_markov") {
        sampler =
            tans::AdpMarkovSamplerSpec{markov_params(sample_flags), m, adp_cfg};
      } else {
        throw std::invalid_argument("unknown sampler: " + sampler_name);
      }

      const tans::CostParams cost{rho, sigma_max_sq, t_up};
      const tans::SampleSet set = tans::run_sampler(trace, sampler, cost);

      json options = {{"sampler", sampler_name}, {"seed", seed},
                      {"rho", rho},             {"m", window_m},
                      {"rate", rate},           {"format", format}};
      if (format == "csv") {
        std::string csv = "t,value\n";
        for (const auto& s : set.samples) {
          csv += std::to_string(s.t) + ',' + fmt(s.value) + '\n';
        }
        emit(out_path, csv, "sample", options);
      } else {
        json j;
        j["sampler_id"] = set.sampler_id;
        j["n_init"] = set.n_init;
        j["seed"] = set.seed;
        json samples = json::array();
        for (const auto& s : set.samples) {
          samples.push_back({{"t", s.t}, {"value", s.value}});
        }
        j["samples"] = samples;
        emit(out_path, j.dump(2) + "\n", "sample", options);
      }
      return 0;
    }

    if (run->parsed()) {
      tans::ExperimentSpec spec = tans::load_experiment_spec(spec_path);
      if (!out_path.empty()) spec.out_path = out_path;
      const tans::ExperimentResult result = tans::run_experiment(spec, jobs);
      if (format == "json") {
        // Same rows as the CSV, for tooling that prefers JSON.
        std::ofstream f(spec.out_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + spec.out_path);
        f << rows_json(result.rows).dump(2) << '\n';
        f.close();
        std::ofstream m(spec.out_path + ".manifest.json", std::ios::binary);
        if (!m) {
          throw std::runtime_error("cannot write " + spec.out_path +
                                   ".manifest.json");
        }
        m << result.manifest_json;
      } else {
        tans::write_experiment_outputs(result, spec);
      }
      std::cerr << "wrote " << spec.out_path << " and "
                << spec.out_path + ".manifest.json" << '\n';
      return 0;
    }

    if (solve->parsed()) {
      const tans::PolicyTable policy =
          tans::sc_value_iteration({sd_eps0, sd_eps1}, sd_rho, sd_cfg);
      // Policy tables have no tabular form; json is the only (and default)
      // format, and only an explicit csv request is an error.
      if (format == "csv" && app.count("--format") > 0) {
        throw std::invalid_argument("solve-dp emits json; pass --format json");
      }
      json options = {{"eps0", sd_eps0},      {"eps1", sd_eps1},
                      {"rho", sd_rho},        {"beta", sd_cfg.beta},
                      {"t_max", sd_cfg.t_max}, {"tol", sd_cfg.tol}};
      emit(out_path, policy.to_json() + "\n", "solve-dp", options);
      return 0;
    }

    if (bounds->parsed()) {
      const tans::CostParams cost{b_rho, b_sigma, b_t_up};
      const tans::RdBounds b = tans::markov_rd_bounds(
          markov_params(bounds_flags), cost, pe_low, pe_up);
      json j = {{"t0_low", b.t0_low},     {"t0_up", b.t0_up},
                {"t1_low", b.t1_low},     {"t1_up", b.t1_up},
                {"d0_low", b.d0_low},     {"d0_up", b.d0_up},
                {"d1_low", b.d1_low},     {"d1_up", b.d1_up},
                {"rate_low", b.rate_low}, {"rate_up", b.rate_up},
                {"dist_low", b.dist_low}, {"dist_up", b.dist_up}};
      json options = {{"rho", b_rho}, {"pe_low", pe_low}, {"pe_up", pe_up}};
      emit(out_path, j.dump(2) + "\n", "bounds", options);
      return 0;
    }

    if (curves->parsed()) {
      if (pe_list.empty()) pe_list.push_back(0.0);
      std::vector<double> rhos = rho_list;
      if (rhos.empty()) rhos = log_spaced(rho_min, rho_max, rho_count);
      const tans::CostParams cost{1.0, c_sigma, c_t_up};
      const auto rows = tans::analytic_curves(markov_params(curve_flags), cost,
                                              pe_list, rhos);
      json options = {{"pe", pe_list}, {"rho", rhos}, {"format", format}};
      if (format == "csv") {
        emit(out_path, rows_csv(rows), "curves", options);
      } else {
        emit(out_path, rows_json(rows).dump(2) + "\n", "curves", options);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
