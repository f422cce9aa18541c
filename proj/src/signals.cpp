#include "tans/signals.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "tans/rng.hpp"

namespace tans {

namespace {

void check_unit_interval(double v, const char* name) {
  if (!(v > 0.0) || !(v < 1.0)) {
    throw std::invalid_argument(std::string(name) +
                                " must lie strictly inside (0, 1)");
  }
}

void check_length(std::size_t length) {
  if (length < 1) throw std::invalid_argument("length must be at least 1");
}

// Shortest decimal form that round-trips; keeps trace files byte-stable.
std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

SignalTrace gen_ar1(const Ar1Params& params, std::size_t length,
                    std::uint64_t seed) {
  check_unit_interval(params.alpha, "alpha");
  check_length(length);
  Rng rng(seed);
  SignalTrace trace;
  trace.seed = seed;
  trace.values.resize(length);
  trace.values[0] = rng.gaussian();
  const double noise_sd = std::sqrt(1.0 - params.alpha * params.alpha);
  for (std::size_t t = 1; t < length; ++t) {
    trace.values[t] = params.alpha * trace.values[t - 1] + noise_sd * rng.gaussian();
  }
  return trace;
}

SignalTrace gen_markov_ar1(const MarkovAr1Params& params, std::size_t length,
                           std::uint64_t seed) {
  check_unit_interval(params.alpha0, "alpha0");
  check_unit_interval(params.alpha1, "alpha1");
  check_unit_interval(params.p01, "p01");
  check_unit_interval(params.p10, "p10");
  check_length(length);
  Rng rng(seed);
  SignalTrace trace;
  trace.seed = seed;
  trace.values.resize(length);
  trace.hidden_states.resize(length);

  // Stationary start: P(state = 1) = p01 / (p01 + p10).
  const double pi1 = params.p01 / (params.p01 + params.p10);
  std::int8_t state = rng.uniform() < pi1 ? 1 : 0;
  trace.hidden_states[0] = state;
  trace.values[0] = rng.gaussian();

  const double sd[2] = {std::sqrt(1.0 - params.alpha0 * params.alpha0),
                        std::sqrt(1.0 - params.alpha1 * params.alpha1)};
  const double alpha[2] = {params.alpha0, params.alpha1};
  // Draw order per step: value innovation first, then chain transition.
  for (std::size_t t = 1; t < length; ++t) {
    trace.values[t] =
        alpha[state] * trace.values[t - 1] + sd[state] * rng.gaussian();
    const double flip = state == 0 ? params.p01 : params.p10;
    if (rng.uniform() < flip) state = static_cast<std::int8_t>(1 - state);
    trace.hidden_states[t] = state;
  }
  return trace;
}

SignalTrace gen_binary_hmm(const BinaryHmmParams& params, std::size_t length,
                           std::uint64_t seed) {
  check_unit_interval(params.eps0, "eps0");
  check_unit_interval(params.eps1, "eps1");
  check_length(length);
  Rng rng(seed);
  SignalTrace trace;
  trace.seed = seed;
  trace.values.resize(length);
  trace.hidden_states.resize(length);

  const double pi1 = params.eps0 / (params.eps0 + params.eps1);
  std::int8_t state = rng.uniform() < pi1 ? 1 : 0;
  trace.hidden_states[0] = state;
  trace.values[0] = state;
  for (std::size_t t = 1; t < length; ++t) {
    const double flip = state == 0 ? params.eps0 : params.eps1;
    if (rng.uniform() < flip) state = static_cast<std::int8_t>(1 - state);
    trace.hidden_states[t] = state;
    trace.values[t] = state;
  }
  return trace;
}

void write_trace_csv(const SignalTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const bool has_hidden = !trace.hidden_states.empty();
  out << (has_hidden ? "t,value,hidden_state\n" : "t,value\n");
  for (std::size_t t = 0; t < trace.values.size(); ++t) {
    out << t << ',' << format_double(trace.values[t]);
    if (has_hidden) out << ',' << static_cast<int>(trace.hidden_states[t]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

SignalTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) ||
      (line.rfind("t,value,hidden_state", 0) != 0 &&
       line.rfind("t,value", 0) != 0)) {
    throw std::runtime_error("missing trace header in " + path);
  }
  SignalTrace trace;
  std::size_t expected_t = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string t_str, value_str, hidden_str;
    std::getline(row, t_str, ',');
    std::getline(row, value_str, ',');
    std::getline(row, hidden_str, ',');
    if (std::stoull(t_str) != expected_t) {
      throw std::runtime_error("non-contiguous time index in " + path);
    }
    ++expected_t;
    trace.values.push_back(std::stod(value_str));
    if (!hidden_str.empty()) {
      trace.hidden_states.push_back(
          static_cast<std::int8_t>(std::stoi(hidden_str)));
    }
  }
  if (!trace.hidden_states.empty() &&
      trace.hidden_states.size() != trace.values.size()) {
    throw std::runtime_error("ragged hidden_state column in " + path);
  }
  return trace;
}

}  // namespace tans
