#include "tans/greedy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tans {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie strictly inside (0, 1)");
  }
}

void check_cost(const CostParams& cost) {
  if (!(cost.rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(cost.sigma_max_sq > 0.0)) {
    throw std::invalid_argument("sigma_max_sq must be positive");
  }
  if (cost.t_up < 1) throw std::invalid_argument("t_up must be >= 1");
}

// sum_{j=1}^{t-1} (1 - alpha^(2j)), accumulated in index order so that the
// incremental scans below reproduce it bit for bit.
double distortion_sum(double alpha, std::int64_t t) {
  const double a2 = alpha * alpha;
  double apow = a2;
  double sum = 0.0;
  for (std::int64_t j = 1; j < t; ++j) {
    sum += 1.0 - apow;
    apow *= a2;
  }
  return sum;
}

// Shared cost expression; keeping one definition makes the exhaustive
// argmins bit-identical to pointwise evaluation.
double cost_value(int theta_hat, double pe, double dist_sum, std::int64_t t,
                  const CostParams& cost) {
  if (theta_hat == 2) {
    return static_cast<double>(t - 1) * cost.sigma_max_sq +
           cost.rho / static_cast<double>(t);
  }
  return (1.0 - pe) * dist_sum +
         pe * static_cast<double>(t - 1) * cost.sigma_max_sq +
         cost.rho / static_cast<double>(t);
}

// Argmin over [1, t_up] of the single-regime cost at error rate pe.
std::int64_t scan_argmin(double alpha, double pe, const CostParams& cost) {
  const double a2 = alpha * alpha;
  double apow = a2;
  double dist = 0.0;
  std::int64_t best_t = 1;
  double best = cost_value(0, pe, 0.0, 1, cost);
  for (std::int64_t t = 2; t <= cost.t_up; ++t) {
    dist += 1.0 - apow;
    apow *= a2;
    const double c = cost_value(0, pe, dist, t, cost);
    if (c < best) {
      best = c;
      best_t = t;
    }
  }
  return best_t;
}

double log_gauss(double x, double mean, double var) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

double log_sum_exp(const std::vector<double>& terms) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : terms) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : terms) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

}  // namespace

double ar1_state_cost(double alpha, std::int64_t t, const CostParams& cost) {
  check_alpha(alpha);
  check_cost(cost);
  if (t < 1 || t > cost.t_up) {
    throw std::invalid_argument("increment must lie in [1, t_up]");
  }
  return distortion_sum(alpha, t) + cost.rho / static_cast<double>(t);
}

std::int64_t ar1_greedy_increment(double alpha, const CostParams& cost) {
  check_alpha(alpha);
  check_cost(cost);
  // pe = 0 makes cost_value collapse to distortion_sum + rho / t.
  return scan_argmin(alpha, 0.0, cost);
}

double ar1_root(double alpha, double rho) {
  check_alpha(alpha);
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!((1.0 - alpha * alpha) < rho / 2.0)) {
    throw std::domain_error(
        "root characterization requires (1 - alpha^2) < rho / 2");
  }
  const auto h = [&](double t) {
    return (1.0 - std::pow(alpha, 2.0 * t)) - rho / (t * (t + 1.0));
  };
  double lo = 1.0;  // h(1) < 0 by the precondition above
  double hi = 2.0;
  while (h(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e18) throw std::runtime_error("root bracket not found");
  }
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) <= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double ar1_greedy_distortion(double alpha, std::int64_t t_star) {
  check_alpha(alpha);
  if (t_star < 1) throw std::invalid_argument("t_star must be >= 1");
  return distortion_sum(alpha, t_star) / static_cast<double>(t_star);
}

StateEstimate estimate_theta(const SamplingState& state,
                             const MarkovAr1Params& params) {
  check_alpha(params.alpha0);
  check_alpha(params.alpha1);
  if (!(params.p01 > 0.0) || !(params.p01 < 1.0) || !(params.p10 > 0.0) ||
      !(params.p10 < 1.0)) {
    throw std::invalid_argument("transition probabilities must lie in (0, 1)");
  }
  const auto& e = state.entries();
  if (e.size() < 2) {
    throw std::invalid_argument("regime estimate needs at least 2 samples");
  }
  const std::size_t m = e.size();
  const double alpha[2] = {params.alpha0, params.alpha1};
  const double log_stay[2] = {std::log1p(-params.p01),
                              std::log1p(-params.p10)};
  const std::int64_t t_last = e[m - 1].t - e[m - 2].t;
  const double x_prev = e[m - 2].value;
  const double x_last = e[m - 1].value;

  // Log prior + log likelihood of all intervals up to (excluding) the last,
  // assuming regime s throughout.
  const auto earlier = [&](int s) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 2 < m; ++k) {
      const std::int64_t dt = e[k + 1].t - e[k].t;
      const double ap = std::pow(alpha[s], static_cast<double>(dt));
      acc += static_cast<double>(dt) * log_stay[s] +
             log_gauss(e[k + 1].value, ap * e[k].value, 1.0 - ap * ap);
    }
    return acc;
  };
  const double earlier_lp[2] = {earlier(0), earlier(1)};

  // Pure-regime hypotheses extend the same regime across the last interval.
  double class_lp[3];
  for (int s = 0; s < 2; ++s) {
    const double ap = std::pow(alpha[s], static_cast<double>(t_last));
    class_lp[s] = earlier_lp[s] + static_cast<double>(t_last) * log_stay[s] +
                  log_gauss(x_last, ap * x_prev, 1.0 - ap * ap);
  }

  // Switch hypotheses: j steps in the pre-switch regime, then one
  // transition, then t_last - 1 - j stay steps in the other regime. Each
  // position is weighted by its single-transition path probability; paths
  // with two or more transitions are O(p^2) and outside the hypothesis
  // class. With a single interval both directions coincide under j <->
  // t_last - j, so only one family is enumerated; extra intervals pin the
  // pre-switch regime and both families appear.
  const double log_switch[2] = {std::log(params.p01), std::log(params.p10)};
  std::vector<double> switch_terms;
  const auto add_switch_family = [&](int s) {
    const int o = 1 - s;
    for (std::int64_t j = 1; j < t_last; ++j) {
      const double ap = std::pow(alpha[s], static_cast<double>(j)) *
                        std::pow(alpha[o], static_cast<double>(t_last - j));
      const double prior = static_cast<double>(j) * log_stay[s] +
                           log_switch[s] +
                           static_cast<double>(t_last - 1 - j) * log_stay[o];
      switch_terms.push_back(earlier_lp[s] + prior +
                             log_gauss(x_last, ap * x_prev, 1.0 - ap * ap));
    }
  };
  add_switch_family(0);
  if (m > 2) add_switch_family(1);
  class_lp[2] = log_sum_exp(switch_terms);

  const double norm = log_sum_exp({class_lp[0], class_lp[1], class_lp[2]});
  StateEstimate est;
  for (int c = 0; c < 3; ++c) {
    est.posterior[c] = std::isfinite(class_lp[c] - norm)
                           ? std::exp(class_lp[c] - norm)
                           : 0.0;
  }
  est.theta_hat = 0;
  for (int c = 1; c < 3; ++c) {
    if (est.posterior[c] > est.posterior[est.theta_hat]) est.theta_hat = c;
  }
  est.p_error = 1.0 - est.posterior[est.theta_hat];
  return est;
}

double markov_cond_cost(const StateEstimate& est, std::int64_t t,
                        const MarkovAr1Params& params,
                        const CostParams& cost) {
  check_cost(cost);
  if (t < 1 || t > cost.t_up) {
    throw std::invalid_argument("increment must lie in [1, t_up]");
  }
  if (est.theta_hat < 0 || est.theta_hat > 2) {
    throw std::invalid_argument("theta_hat must be 0, 1, or 2");
  }
  const double alpha = est.theta_hat == 1 ? params.alpha1 : params.alpha0;
  const double dist = est.theta_hat == 2 ? 0.0 : distortion_sum(alpha, t);
  return cost_value(est.theta_hat, est.p_error, dist, t, cost);
}

std::int64_t greedy_markov_increment(const StateEstimate& est,
                                     const MarkovAr1Params& params,
                                     const CostParams& cost) {
  check_cost(cost);
  if (est.theta_hat == 2) {
    std::int64_t best_t = 1;
    double best = cost_value(2, 0.0, 0.0, 1, cost);
    for (std::int64_t t = 2; t <= cost.t_up; ++t) {
      const double c = cost_value(2, 0.0, 0.0, t, cost);
      if (c < best) {
        best = c;
        best_t = t;
      }
    }
    return best_t;
  }
  const double alpha = est.theta_hat == 1 ? params.alpha1 : params.alpha0;
  const double pe = est.p_error;
  const double a2 = alpha * alpha;
  double apow = a2;
  double dist = 0.0;
  std::int64_t best_t = 1;
  double best = cost_value(est.theta_hat, pe, 0.0, 1, cost);
  for (std::int64_t t = 2; t <= cost.t_up; ++t) {
    dist += 1.0 - apow;
    apow *= a2;
    const double c = cost_value(est.theta_hat, pe, dist, t, cost);
    if (c < best) {
      best = c;
      best_t = t;
    }
  }
  return best_t;
}

GreedyStep greedy_markov_step(const SamplingState& state,
                              const MarkovAr1Params& params,
                              const CostParams& cost) {
  GreedyStep step;
  step.estimate = estimate_theta(state, params);
  step.t = greedy_markov_increment(step.estimate, params, cost);
  return step;
}

RdBounds markov_rd_bounds(const MarkovAr1Params& params,
                          const CostParams& cost, double pe_low,
                          double pe_up) {
  check_alpha(params.alpha0);
  check_alpha(params.alpha1);
  check_cost(cost);
  if (params.p01 != params.p10) {
    throw std::invalid_argument(
        "rate-distortion bounds require a symmetric chain (p01 == p10)");
  }
  if (!(pe_low >= 0.0) || !(pe_up <= 1.0) || !(pe_low <= pe_up)) {
    throw std::invalid_argument("need 0 <= pe_low <= pe_up <= 1");
  }

  const double alpha[2] = {params.alpha0, params.alpha1};
  std::int64_t t_low[2], t_up[2];
  double d_low[2], d_up[2];
  for (int s = 0; s < 2; ++s) {
    // Larger error rate never lengthens the optimal increment, but when rho
    // sits at an exact cost tie (rho = t(t+1) with alpha near zero makes
    // neighboring increments equal to within rounding) the two scans can
    // resolve the tie in opposite directions. Widen the bracket to cover
    // both candidates; the box only gets looser.
    t_low[s] = scan_argmin(alpha[s], pe_up, cost);
    t_up[s] = scan_argmin(alpha[s], pe_low, cost);
    if (t_low[s] > t_up[s]) {
      std::swap(t_low[s], t_up[s]);
    }
    d_low[s] = ((1.0 - pe_low) * distortion_sum(alpha[s], t_low[s]) +
                pe_low * static_cast<double>(t_low[s] - 1) *
                    cost.sigma_max_sq) /
               static_cast<double>(t_low[s]);
    d_up[s] = ((1.0 - pe_up) * distortion_sum(alpha[s], t_up[s]) +
               pe_up * static_cast<double>(t_up[s] - 1) * cost.sigma_max_sq) /
              static_cast<double>(t_up[s]);
  }

  RdBounds b;
  b.t0_low = t_low[0];
  b.t0_up = t_up[0];
  b.t1_low = t_low[1];
  b.t1_up = t_up[1];
  b.d0_low = d_low[0];
  b.d0_up = d_up[0];
  b.d1_low = d_low[1];
  b.d1_up = d_up[1];
  b.rate_low = 0.5 / static_cast<double>(t_up[0]) +
               0.5 / static_cast<double>(t_up[1]);
  b.rate_up = 0.5 / static_cast<double>(t_low[0]) +
              0.5 / static_cast<double>(t_low[1]);
  b.dist_low = 0.5 * (d_low[0] + d_low[1]);
  b.dist_up = 0.5 * (d_up[0] + d_up[1]);
  return b;
}

}  // namespace tans
