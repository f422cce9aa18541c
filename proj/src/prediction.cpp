#include "tans/prediction.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace tans {

SamplingState::SamplingState(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("state capacity must be >= 1");
  entries_.reserve(capacity);
}

void SamplingState::push(std::int64_t t, double value) {
  if (!entries_.empty() && t <= entries_.back().t) {
    throw std::invalid_argument("sample times must be strictly increasing");
  }
  if (entries_.size() == capacity_) entries_.erase(entries_.begin());
  entries_.push_back({t, value});
}

std::int64_t SamplingState::last_time() const {
  if (entries_.empty()) throw std::logic_error("empty sampling state");
  return entries_.back().t;
}

double SamplingState::last_value() const {
  if (entries_.empty()) throw std::logic_error("empty sampling state");
  return entries_.back().value;
}

AutocorrFn AutocorrFn::model_ar1(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie strictly inside (0, 1)");
  }
  return AutocorrFn(Kind::ModelAr1, alpha);
}

AutocorrFn AutocorrFn::conditional_ar(double alpha_theta) {
  if (!(alpha_theta > 0.0) || !(alpha_theta < 1.0)) {
    throw std::invalid_argument("alpha must lie strictly inside (0, 1)");
  }
  return AutocorrFn(Kind::ConditionalAr, alpha_theta);
}

AutocorrFn AutocorrFn::estimated(std::vector<double> values,
                                 std::vector<char> available) {
  if (values.empty() || values.size() != available.size()) {
    throw std::invalid_argument("estimated table and availability mismatch");
  }
  AutocorrFn fn(Kind::Estimated, 0.0);
  fn.values_ = std::move(values);
  fn.available_ = std::move(available);
  return fn;
}

bool AutocorrFn::has(std::int64_t lag) const {
  const std::int64_t k = std::llabs(lag);
  if (kind_ != Kind::Estimated) return true;
  return k < static_cast<std::int64_t>(values_.size()) && available_[k];
}

double AutocorrFn::at(std::int64_t lag) const {
  const std::int64_t k = std::llabs(lag);
  if (kind_ != Kind::Estimated) {
    return k == 0 ? 1.0 : std::pow(alpha_, static_cast<double>(k));
  }
  if (!has(k)) {
    throw std::out_of_range("autocorrelation unavailable at lag " +
                            std::to_string(k));
  }
  return values_[k];
}

std::int64_t AutocorrFn::max_lag() const {
  if (kind_ != Kind::Estimated) return -1;
  return static_cast<std::int64_t>(values_.size()) - 1;
}

namespace {

constexpr double kRcondFloor = 1e-12;
constexpr double kResidualTol = 1e-9;
constexpr double kLoading = 1e-10;
constexpr double kClampTol = 1e-8;

}  // namespace

GlpSolution glp_solve(const SamplingState& state, std::int64_t horizon,
                      const AutocorrFn& acf) {
  if (state.size() < 1) throw std::invalid_argument("empty sampling state");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");

  const auto& entries = state.entries();
  const std::size_t m = entries.size();
  const std::int64_t t_pred = entries.back().t + horizon;

  GlpSolution sol;
  sol.lags.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    sol.lags[k] = t_pred - entries[m - 1 - k].t;  // most recent first
  }

  std::vector<double> corr(m * m);
  std::vector<double> rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    rhs[i] = acf.at(sol.lags[i]);
    for (std::size_t j = 0; j < m; ++j) {
      corr[i * m + j] = acf.at(sol.lags[i] - sol.lags[j]);
    }
  }
  const double r0 = acf.at(0);

  // One solve attempt at the given diagonal loading; m <= 2 is closed form
  // (the hot path in reconstruction), larger systems go through LU.
  std::vector<double> w(m, 0.0);
  const auto solve_once = [&](double loading) -> bool {
    if (m == 1) {
      const double d = corr[0] + loading;
      if (d == 0.0) return false;
      w[0] = rhs[0] / d;
    } else if (m == 2) {
      const double a = corr[0] + loading;
      const double b = corr[1];
      const double c = corr[2];
      const double d = corr[3] + loading;
      const double det = a * d - b * c;
      const double scale =
          std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
      if (!(std::abs(det) > kRcondFloor * scale * scale)) return false;
      w[0] = (rhs[0] * d - b * rhs[1]) / det;
      w[1] = (a * rhs[1] - rhs[0] * c) / det;
    } else {
      Eigen::MatrixXd mat(m, m);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) mat(i, j) = corr[i * m + j];
      }
      mat.diagonal().array() += loading;
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(mat);
      Eigen::VectorXd x =
          lu.solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), m));
      if (!x.allFinite() || lu.rcond() < kRcondFloor) return false;
      for (std::size_t i = 0; i < m; ++i) w[i] = x(i);
    }
    // The solution must satisfy the system it was solved from.
    double resid = 0.0;
    double rhs_scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      double row = loading * w[i];
      for (std::size_t j = 0; j < m; ++j) row += corr[i * m + j] * w[j];
      resid = std::max(resid, std::abs(row - rhs[i]));
      rhs_scale = std::max(rhs_scale, std::abs(rhs[i]));
    }
    bool finite = true;
    for (double v : w) finite = finite && std::isfinite(v);
    return finite && resid <= kResidualTol * rhs_scale;
  };

  if (!solve_once(0.0)) {
    sol.regularized = true;
    if (!solve_once(kLoading * r0)) {
      bool finite = true;
      for (double v : w) finite = finite && std::isfinite(v);
      if (!finite) {
        throw std::runtime_error("prediction system unsolvable after loading");
      }
    }
  }

  sol.weights = w;
  double err = r0;
  for (std::size_t i = 0; i < m; ++i) err -= rhs[i] * w[i];
  if (err < 0.0 || err > r0) {
    const double excess = err < 0.0 ? -err : err - r0;
    if (excess > kClampTol * std::max(1.0, r0)) {
      throw std::runtime_error(
          "prediction error variance left [0, r(0)] by " +
          std::to_string(excess));
    }
    err = std::clamp(err, 0.0, r0);
  }
  sol.err_variance = err;
  return sol;
}

GlpPrediction glp_predict(const SamplingState& state, std::int64_t horizon,
                          const AutocorrFn& acf) {
  const GlpSolution sol = glp_solve(state, horizon, acf);
  const auto& entries = state.entries();
  const std::size_t m = entries.size();
  double value = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    value += sol.weights[k] * entries[m - 1 - k].value;
  }
  return {value, sol.err_variance};
}

AutocorrFn acf_update_gradient(const AutocorrFn& table,
                               const TimedValue& new_sample,
                               const std::vector<TimedValue>& window,
                               double gamma) {
  if (table.kind() != AutocorrFn::Kind::Estimated) {
    throw std::invalid_argument("gradient update needs an estimated table");
  }
  if (!(gamma > 0.0) || !(gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1]");
  }
  std::vector<double> values = table.table();
  std::vector<char> available = table.availability();
  const std::int64_t max_lag = static_cast<std::int64_t>(values.size()) - 1;

  auto apply = [&](std::int64_t lag, double product) {
    if (lag < 0 || lag > max_lag) return;
    if (available[lag]) {
      values[lag] += gamma * (product - values[lag]);
    } else {
      values[lag] = product;  // first observation seeds the estimate
      available[lag] = 1;
    }
  };

  apply(0, new_sample.value * new_sample.value);
  for (const auto& past : window) {
    if (past.t >= new_sample.t) {
      throw std::invalid_argument("window must precede the new sample");
    }
    apply(new_sample.t - past.t, new_sample.value * past.value);
  }
  return AutocorrFn::estimated(std::move(values), std::move(available));
}

AutocorrFn acf_estimate_window(const std::vector<TimedValue>& samples,
                               std::int64_t window, std::int64_t max_lag) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (max_lag < 0) throw std::invalid_argument("max_lag must be >= 0");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].t <= samples[i - 1].t) {
      throw std::invalid_argument("sample times must be strictly increasing");
    }
  }

  const std::int64_t t_end = samples.back().t;
  const std::int64_t t_begin = t_end - window + 1;
  std::vector<double> sums(max_lag + 1, 0.0);
  std::vector<std::int64_t> counts(max_lag + 1, 0);

  std::size_t first = 0;
  while (first < samples.size() && samples[first].t < t_begin) ++first;
  for (std::size_t i = first; i < samples.size(); ++i) {
    for (std::size_t j = first; j <= i; ++j) {
      const std::int64_t lag = samples[i].t - samples[j].t;
      if (lag > max_lag) continue;
      sums[lag] += samples[i].value * samples[j].value;
      ++counts[lag];
    }
  }

  std::vector<double> values(max_lag + 1, 0.0);
  std::vector<char> available(max_lag + 1, 0);
  for (std::int64_t k = 0; k <= max_lag; ++k) {
    if (counts[k] > 0) {
      values[k] = sums[k] / static_cast<double>(counts[k]);
      available[k] = 1;
    }
  }
  return AutocorrFn::estimated(std::move(values), std::move(available));
}

}  // namespace tans
