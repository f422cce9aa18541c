#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tans/prediction.hpp"
#include "tans/rng.hpp"
#include "tans/signals.hpp"

using tans::AutocorrFn;
using tans::SamplingState;
using tans::TimedValue;

TEST_CASE("sampling state keeps the m most recent entries") {
  SamplingState state(3);
  state.push(0, 1.0);
  state.push(2, 2.0);
  state.push(5, 3.0);
  state.push(9, 4.0);
  REQUIRE(state.size() == 3);
  CHECK(state.entries().front().t == 2);
  CHECK(state.last_time() == 9);
  CHECK(state.last_value() == 4.0);
  CHECK_THROWS_AS(state.push(9, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(state.push(4, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(SamplingState(0), std::invalid_argument);
}

TEST_CASE("model autocorrelation is alpha to the absolute lag") {
  const auto acf = AutocorrFn::model_ar1(0.9);
  CHECK(acf.at(0) == 1.0);
  CHECK(acf.at(3) == doctest::Approx(std::pow(0.9, 3)));
  CHECK(acf.at(-3) == acf.at(3));
  CHECK(acf.max_lag() == -1);
  CHECK(acf.has(1000000));
  CHECK_THROWS_AS(AutocorrFn::model_ar1(1.0), std::invalid_argument);
  CHECK_THROWS_AS(AutocorrFn::conditional_ar(0.0), std::invalid_argument);
}

TEST_CASE("estimated autocorrelation exposes only available lags") {
  auto acf = AutocorrFn::estimated({1.0, 0.5, 0.1}, {1, 1, 1});
  CHECK(acf.at(2) == 0.1);
  CHECK(acf.at(-2) == 0.1);
  CHECK(acf.max_lag() == 2);
  CHECK_THROWS_AS(acf.at(3), std::out_of_range);
  auto gappy = AutocorrFn::estimated({1.0, 0.5, 0.1}, {1, 0, 1});
  CHECK(gappy.has(2));
  CHECK(!gappy.has(1));
  CHECK_THROWS_AS(gappy.at(1), std::out_of_range);
  CHECK_THROWS_AS(AutocorrFn::estimated({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(AutocorrFn::estimated({1.0}, {1, 1}), std::invalid_argument);
}

TEST_CASE("two-tap solution matches the hand-solved normal equations") {
  // r(0)=1, r(1)=0.5, r(2)=0.1; samples at t=0,1 predicting t=2 give taps
  // at lags 1 and 2. R = [[1,.5],[.5,1]], p = [.5,.1]:
  // w = (0.6, -0.2), err = 0.72.
  const auto acf = AutocorrFn::estimated({1.0, 0.5, 0.1}, {1, 1, 1});
  SamplingState state(2);
  state.push(0, 2.0);
  state.push(1, -1.0);
  const auto sol = tans::glp_solve(state, 1, acf);
  REQUIRE(sol.weights.size() == 2);
  CHECK(sol.lags[0] == 1);
  CHECK(sol.lags[1] == 2);
  CHECK(sol.weights[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(sol.weights[1] == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(sol.err_variance == doctest::Approx(0.72).epsilon(1e-12));
  CHECK(!sol.regularized);

  const auto pred = tans::glp_predict(state, 1, acf);
  CHECK(pred.value == doctest::Approx(0.6 * -1.0 + -0.2 * 2.0).epsilon(1e-12));
  CHECK(pred.err_variance == doctest::Approx(0.72).epsilon(1e-12));
}

TEST_CASE("single-tap ar1 prediction is the closed form") {
  const double alpha = 0.95;
  const auto acf = AutocorrFn::model_ar1(alpha);
  for (std::int64_t gap : {1, 2, 5, 17}) {
    SamplingState state(1);
    state.push(10, 0.7);
    const auto sol = tans::glp_solve(state, gap, acf);
    const double ag = std::pow(alpha, static_cast<double>(gap));
    CHECK(sol.weights[0] == doctest::Approx(ag).epsilon(1e-12));
    CHECK(sol.err_variance == doctest::Approx(1.0 - ag * ag).epsilon(1e-12));
  }
  SamplingState state(1);
  state.push(0, 1.0);
  CHECK_THROWS_AS(tans::glp_solve(state, 0, acf), std::invalid_argument);
}

TEST_CASE("ar1 model weights put everything on the newest sample") {
  // The AR(1) correlation structure is Markov: older taps get zero weight.
  const auto acf = AutocorrFn::model_ar1(0.9);
  SamplingState state(3);
  state.push(0, 0.3);
  state.push(4, -0.1);
  state.push(7, 0.8);
  const auto sol = tans::glp_solve(state, 2, acf);
  CHECK(sol.weights[0] == doctest::Approx(std::pow(0.9, 2)).epsilon(1e-9));
  CHECK(sol.weights[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.weights[2] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("prediction error grows with the gap") {
  const auto acf = AutocorrFn::model_ar1(0.9);
  double prev = -1.0;
  for (std::int64_t gap = 1; gap <= 30; ++gap) {
    SamplingState state(1);
    state.push(0, 1.0);
    const auto sol = tans::glp_solve(state, gap, acf);
    CHECK(sol.err_variance > prev);
    prev = sol.err_variance;
  }
}

TEST_CASE("error variance stays within [0, r0]") {
  tans::Rng rng(31);
  const auto acf = AutocorrFn::model_ar1(0.99);
  for (int rep = 0; rep < 200; ++rep) {
    SamplingState state(4);
    std::int64_t t = 0;
    for (int k = 0; k < 4; ++k) {
      t += 1 + static_cast<std::int64_t>(rng.uniform() * 6);
      state.push(t, rng.gaussian());
    }
    const auto gap = 1 + static_cast<std::int64_t>(rng.uniform() * 8);
    const auto sol = tans::glp_solve(state, gap, acf);
    REQUIRE(sol.err_variance >= 0.0);
    REQUIRE(sol.err_variance <= 1.0 + 1e-12);
  }
}

TEST_CASE("prediction residuals are orthogonal to the observations") {
  // E[X(t_{i-k}) e(t)] = 0 for every tap: the defining property of the
  // optimal weights, checked by Monte Carlo on real AR(1) data.
  const double alpha = 0.9;
  const std::size_t m = 3;
  const auto acf = AutocorrFn::model_ar1(alpha);
  const auto trace = tans::gen_ar1({alpha}, 120000, 77);

  std::vector<double> cross(m, 0.0), cross_sq(m, 0.0);
  std::size_t n = 0;
  const std::int64_t spacing = 3;
  for (std::int64_t t = static_cast<std::int64_t>(m) * spacing + 2;
       t + 1 < static_cast<std::int64_t>(trace.values.size());
       t += spacing + 2) {
    SamplingState state(m);
    for (std::int64_t k = static_cast<std::int64_t>(m); k >= 1; --k) {
      const std::int64_t ts = t - k * spacing;
      state.push(ts, trace.values[static_cast<std::size_t>(ts)]);
    }
    const auto pred = tans::glp_predict(state, spacing, acf);
    const double err = trace.values[static_cast<std::size_t>(t)] - pred.value;
    const auto& entries = state.entries();
    for (std::size_t k = 0; k < m; ++k) {
      const double prod = entries[m - 1 - k].value * err;
      cross[k] += prod;
      cross_sq[k] += prod * prod;
    }
    ++n;
  }
  REQUIRE(n > 5000);
  for (std::size_t k = 0; k < m; ++k) {
    const double mean = cross[k] / static_cast<double>(n);
    const double var = cross_sq[k] / static_cast<double>(n) - mean * mean;
    const double se = std::sqrt(var / static_cast<double>(n));
    CHECK(std::abs(mean) < 3.0 * se);
  }
}

TEST_CASE("reported error variance matches realized squared error") {
  const double alpha = 0.95;
  const auto acf = AutocorrFn::model_ar1(alpha);
  const auto trace = tans::gen_ar1({alpha}, 100000, 55);
  double sq = 0.0, sq2 = 0.0, predicted_var = 0.0;
  std::size_t n = 0;
  for (std::int64_t t = 12; t < static_cast<std::int64_t>(trace.values.size());
       t += 9) {
    SamplingState state(2);
    state.push(t - 5, trace.values[static_cast<std::size_t>(t - 5)]);
    state.push(t - 2, trace.values[static_cast<std::size_t>(t - 2)]);
    const auto pred = tans::glp_predict(state, 2, acf);
    const double err = trace.values[static_cast<std::size_t>(t)] - pred.value;
    sq += err * err;
    sq2 += err * err * err * err;
    predicted_var += pred.err_variance;
    ++n;
  }
  const double mean = sq / static_cast<double>(n);
  const double se = std::sqrt(
      (sq2 / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
  CHECK(std::abs(mean - predicted_var / static_cast<double>(n)) < 3.0 * se);
}

TEST_CASE("a singular system takes the regularized path") {
  // Perfectly correlated acf: R is all ones and has no unique solution.
  const auto acf = AutocorrFn::estimated({1.0, 1.0, 1.0}, {1, 1, 1});
  SamplingState state(2);
  state.push(0, 0.5);
  state.push(1, 0.5);
  const auto sol = tans::glp_solve(state, 1, acf);
  CHECK(sol.regularized);
  for (double w : sol.weights) CHECK(std::isfinite(w));
  CHECK(sol.err_variance == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("an inconsistent acf table is rejected") {
  // Not positive semidefinite: the implied error variance is -15.2, far
  // outside [0, r(0)], which the clamp refuses to hide.
  const auto acf = AutocorrFn::estimated({1.0, 0.9, -0.9}, {1, 1, 1});
  SamplingState state(2);
  state.push(0, 1.0);
  state.push(1, 1.0);
  CHECK_THROWS_AS(tans::glp_solve(state, 1, acf), std::runtime_error);
}

TEST_CASE("gradient acf update follows the exponential recursion") {
  const auto table = AutocorrFn::estimated({1.0, 0.5}, {1, 1});
  const std::vector<TimedValue> window{{0, 2.0}, {1, 1.0}};
  const auto updated =
      tans::acf_update_gradient(table, {2, 0.8}, window, 0.1);
  // lag 0 from the new sample itself, lag 1 against t=1; lag 2 (against
  // t=0) exceeds the table and is dropped.
  CHECK(updated.at(0) == doctest::Approx(1.0 + 0.1 * (0.64 - 1.0)));
  CHECK(updated.at(1) == doctest::Approx(0.5 + 0.1 * (0.8 * 1.0 - 0.5)));
  CHECK(updated.max_lag() == 1);

  const auto seeded = AutocorrFn::estimated({1.0, 0.0}, {1, 0});
  const auto after =
      tans::acf_update_gradient(seeded, {2, 0.8}, {{1, 1.0}}, 0.1);
  CHECK(after.has(1));
  CHECK(after.at(1) == doctest::Approx(0.8));  // first observation seeds

  CHECK_THROWS_AS(tans::acf_update_gradient(table, {2, 0.8}, window, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(tans::acf_update_gradient(table, {1, 0.8}, window, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(tans::acf_update_gradient(AutocorrFn::model_ar1(0.9),
                                            {2, 0.8}, window, 0.1),
                  std::invalid_argument);
}

TEST_CASE("windowed acf estimate averages in-window products") {
  const std::vector<TimedValue> samples{{0, 1.0}, {1, -1.0}, {3, 2.0}};
  const auto acf = tans::acf_estimate_window(samples, 4, 3);
  CHECK(acf.at(0) == doctest::Approx((1.0 + 1.0 + 4.0) / 3.0));
  CHECK(acf.at(1) == doctest::Approx(1.0 * -1.0));
  CHECK(acf.at(2) == doctest::Approx(-1.0 * 2.0));
  CHECK(acf.at(3) == doctest::Approx(1.0 * 2.0));

  // Shrinking the window to the last 3 indices drops the t=0 sample and
  // with it every odd lag.
  const auto tail = tans::acf_estimate_window(samples, 3, 3);
  CHECK(tail.at(0) == doctest::Approx((1.0 + 4.0) / 2.0));
  CHECK(tail.at(2) == doctest::Approx(-2.0));
  CHECK(!tail.has(1));
  CHECK(!tail.has(3));

  CHECK_THROWS_AS(tans::acf_estimate_window({}, 4, 3), std::invalid_argument);
  CHECK_THROWS_AS(tans::acf_estimate_window(samples, 0, 3),
                  std::invalid_argument);
}
