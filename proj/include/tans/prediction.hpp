#pragma once

#include <cstdint>
#include <vector>

namespace tans {

struct TimedValue {
  std::int64_t t = 0;
  double value = 0.0;
};

/* Window of the m most recent (time, value) pairs, oldest first.
 * Pushing beyond capacity drops the oldest entry; times must be strictly
 * increasing. This is the only state a sampling function may depend on,
 * which is what lets the decoder recompute sampling times from values.
 */
class SamplingState {
 public:
  explicit SamplingState(std::size_t capacity);

  void push(std::int64_t t, double value);
  const std::vector<TimedValue>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::int64_t last_time() const;
  double last_value() const;

 private:
  std::size_t capacity_;
  std::vector<TimedValue> entries_;
};

/* Autocorrelation lookup r(k) on integer lags, symmetric in k.
 *
 * model_ar1 / conditional_ar:  r(k) = alpha^|k|  (unit power). The two kinds
 * are distinguished only by origin: conditional_ar carries the coefficient of
 * an estimated hidden regime rather than a global model.
 * estimated: a finite table produced by one of the estimators below; lags
 * with no observed products are unavailable and at() refuses them.
 */
class AutocorrFn {
 public:
  enum class Kind { ModelAr1, ConditionalAr, Estimated };

  static AutocorrFn model_ar1(double alpha);
  static AutocorrFn conditional_ar(double alpha_theta);
  static AutocorrFn estimated(std::vector<double> values,
                              std::vector<char> available);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  bool has(std::int64_t lag) const;
  double at(std::int64_t lag) const;
  // Largest lag the table covers; model kinds cover every lag.
  std::int64_t max_lag() const;
  const std::vector<double>& table() const { return values_; }
  const std::vector<char>& availability() const { return available_; }

 private:
  AutocorrFn(Kind kind, double alpha) : kind_(kind), alpha_(alpha) {}
  Kind kind_;
  double alpha_;
  std::vector<double> values_;
  std::vector<char> available_;
};

struct GlpSolution {
  std::vector<double> weights;      // aligned with lags
  std::vector<std::int64_t> lags;   // tau_k = prediction time - sample time,
                                    // most recent sample first
  double err_variance = 0.0;        // r(0) - p.w, clamped to [0, r(0)]
  bool regularized = false;         // diagonal loading was applied
};

struct GlpPrediction {
  double value = 0.0;
  double err_variance = 0.0;
};

/* Optimal linear predictor of X(last_time + horizon) from the state's
 * samples: solves R w = p where R_ij = r(tau_i - tau_j), p_k = r(tau_k).
 * Near-singular systems (reciprocal condition below 1e-12, or a solve whose
 * residual fails a 1e-9 scaled check) are re-solved with diagonal loading
 * 1e-10 * r(0) and flagged. An err_variance clamp larger than
 * 1e-8 * max(1, r(0)) means the system was inconsistent and is an error.
 */
GlpSolution glp_solve(const SamplingState& state, std::int64_t horizon,
                      const AutocorrFn& acf);
GlpPrediction glp_predict(const SamplingState& state, std::int64_t horizon,
                          const AutocorrFn& acf);

/* Streaming autocorrelation estimate: for each lag j covered by the table
 * and observable from the window (a sample exists at new_sample.t - j),
 *   r(j) := r(j) + gamma * (X(t) X(t-j) - r(j));
 * a lag seen for the first time is initialized to the product itself.
 */
AutocorrFn acf_update_gradient(const AutocorrFn& table,
                               const TimedValue& new_sample,
                               const std::vector<TimedValue>& window,
                               double gamma);

/* Windowed empirical estimate over the last `window` time indices ending at
 * the newest sample: r(j) = mean of X(t) X(t-j) over in-window pairs.
 * Lags with no pairs are unavailable.
 */
AutocorrFn acf_estimate_window(const std::vector<TimedValue>& samples,
                               std::int64_t window, std::int64_t max_lag);

}  // namespace tans
