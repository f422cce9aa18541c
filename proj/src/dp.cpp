#include "tans/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "tans/rng.hpp"

namespace tans {

namespace {

void check_eps(double eps, const char* name) {
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw std::invalid_argument(std::string(name) +
                                " must lie strictly inside (0, 1)");
  }
}

}  // namespace

double sc_state_cost(double eps, std::int64_t t, double rho) {
  check_eps(eps, "eps");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (t < 1) throw std::invalid_argument("increment must be >= 1");
  double sum = 0.0;
  double hold = 1.0;  // (1 - eps)^(j-1)
  for (std::int64_t j = 1; j < t; ++j) {
    sum += hold * eps * static_cast<double>(t - j);
    hold *= 1.0 - eps;
  }
  return sum + rho / static_cast<double>(t);
}

PolicyTable sc_value_iteration(const BinaryHmmParams& params, double rho,
                               const DpConfig& cfg) {
  check_eps(params.eps0, "eps0");
  check_eps(params.eps1, "eps1");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(cfg.beta > 0.0) || !(cfg.beta < 1.0)) {
    throw std::invalid_argument("beta must lie strictly inside (0, 1)");
  }
  if (cfg.t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");

  const double inv_eps = std::min(1.0 / params.eps0, 1.0 / params.eps1);
  const std::int64_t bound = static_cast<std::int64_t>(0.2 * inv_eps);
  if (cfg.t_max > bound && !cfg.override_t_max_bound) {
    throw std::invalid_argument(
        "t_max " + std::to_string(cfg.t_max) +
        " exceeds the cost model's validity bound " + std::to_string(bound) +
        "; set override_t_max_bound to proceed deliberately");
  }

  const double eps[2] = {params.eps0, params.eps1};
  std::vector<std::array<double, 2>> c(cfg.t_max + 1);
  std::vector<std::array<double, 2>> stay(cfg.t_max + 1);
  for (std::int64_t t = 1; t <= cfg.t_max; ++t) {
    for (int s = 0; s < 2; ++s) {
      c[t][s] = sc_state_cost(eps[s], t, rho);
      stay[t][s] = std::pow(1.0 - eps[s], static_cast<double>(t));
    }
  }

  PolicyTable table;
  table.rho = rho;
  table.beta = cfg.beta;
  std::array<double, 2> j{0.0, 0.0};
  for (std::int64_t it = 0; it < cfg.max_iters; ++it) {
    std::array<double, 2> next{};
    for (int s = 0; s < 2; ++s) {
      double best = std::numeric_limits<double>::infinity();
      for (std::int64_t t = 1; t <= cfg.t_max; ++t) {
        const double v = c[t][s] + cfg.beta * (stay[t][s] * j[s] +
                                               (1.0 - stay[t][s]) * j[1 - s]);
        if (v < best) best = v;
      }
      next[s] = best;
    }
    const double residual =
        std::max(std::abs(next[0] - j[0]), std::abs(next[1] - j[1]));
    table.residual_history.push_back(residual);
    j = next;
    ++table.iterations;
    if (residual < cfg.tol) {
      table.converged = true;
      table.residual = residual;
      break;
    }
    table.residual = residual;
  }

  table.j = j;
  for (int s = 0; s < 2; ++s) {
    std::int64_t best_t = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t t = 1; t <= cfg.t_max; ++t) {
      const double v = c[t][s] + cfg.beta * (stay[t][s] * j[s] +
                                             (1.0 - stay[t][s]) * j[1 - s]);
      if (v < best) {
        best = v;
        best_t = t;
      }
    }
    table.t[s] = best_t;
  }
  return table;
}

std::string PolicyTable::to_json() const {
  nlohmann::json doc;
  doc["rho"] = rho;
  doc["beta"] = beta;
  doc["J"] = {j[0], j[1]};
  doc["T"] = {t[0], t[1]};
  doc["iterations"] = iterations;
  doc["residual"] = residual;
  doc["converged"] = converged;
  return doc.dump(2);
}

Reconstruction sc_reconstruct(const SampleSet& set, std::size_t horizon) {
  Reconstruction recon = reconstruct_nclc(set, horizon);  // validates set
  recon.method = "sc_fill";
  const auto& samples = set.samples;
  for (std::int64_t t = 0; t < samples.front().t; ++t) {
    recon.values[t] = samples.front().value;
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::int64_t t_end = i + 1 < samples.size()
                                   ? samples[i + 1].t
                                   : static_cast<std::int64_t>(horizon);
    for (std::int64_t t = samples[i].t; t < t_end; ++t) {
      recon.values[t] = samples[i].value;
    }
  }
  return recon;
}

AdpStep adp_step(const SamplingState& state, const MarkovAr1Params& params,
                 const CostParams& cost, const AdpConfig& cfg) {
  if (!(cfg.beta >= 0.0) || !(cfg.beta < 1.0)) {
    throw std::invalid_argument("beta must lie in [0, 1)");
  }
  if (!(cfg.gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (cfg.mc_draws < 0) throw std::invalid_argument("mc_draws must be >= 0");

  AdpStep step;
  step.estimate = estimate_theta(state, params);
  const bool use_quality = cfg.beta > 0.0 && cfg.gamma > 0.0;

  int regime = step.estimate.theta_hat;
  if (regime == 2) {
    regime = step.estimate.posterior[1] > step.estimate.posterior[0] ? 1 : 0;
  }
  const AutocorrFn acf = AutocorrFn::conditional_ar(
      regime == 1 ? params.alpha1 : params.alpha0);

  std::int64_t best_t = 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t t = 1; t <= cost.t_up; ++t) {
    double total = markov_cond_cost(step.estimate, t, params, cost);
    if (use_quality) {
      const GlpPrediction pred = glp_predict(state, t, acf);
      const std::int64_t t_next = state.last_time() + t;
      auto quality_at = [&](double value) {
        SamplingState next = state;
        next.push(t_next, value);
        return cfg.gamma * static_cast<double>(
                               greedy_markov_step(next, params, cost).t);
      };
      double quality;
      if (cfg.mc_draws == 0) {
        quality = quality_at(pred.value);
      } else {
        Rng rng(mix_seed(cfg.mc_seed,
                         static_cast<std::uint64_t>(t_next) * 1000003ULL +
                             static_cast<std::uint64_t>(t)));
        const double sd = std::sqrt(pred.err_variance);
        double acc = 0.0;
        for (int d = 0; d < cfg.mc_draws; ++d) {
          acc += quality_at(pred.value + sd * rng.gaussian());
        }
        quality = acc / static_cast<double>(cfg.mc_draws);
      }
      total += cfg.literal_cost_sign ? cfg.beta * quality
                                     : -cfg.beta * quality;
    }
    if (total < best) {
      best = total;
      best_t = t;
    }
  }
  step.t = best_t;
  return step;
}

}  // namespace tans
