#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tans {

/* Signal models.
 *
 * All real-valued models are kept at unit power so that squared-error
 * distortion is directly comparable across regimes:
 *
 *   ar1:        X(t+1) = alpha X(t) + Z(t+1),  Z ~ N(0, 1 - alpha^2)
 *   markov_ar1: X(t+1) = alpha_s X(t) + Z_s(t+1), s the hidden two-state
 *               chain at time t, per-state noise 1 - alpha_s^2
 *   binary_hmm: two-state chain observed directly; values are 0/1
 *
 * Initial conditions are stationary: X(0) ~ N(0,1) and the hidden chain
 * starts from its stationary distribution.
 */

struct Ar1Params {
  double alpha = 0.0;
};

struct MarkovAr1Params {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double p01 = 0.0;  // transition probability state 0 -> 1 per step
  double p10 = 0.0;  // transition probability state 1 -> 0 per step
};

struct BinaryHmmParams {
  double eps0 = 0.0;  // flip probability out of state 0
  double eps1 = 0.0;  // flip probability out of state 1
};

struct SignalTrace {
  std::vector<double> values;
  std::vector<std::int8_t> hidden_states;  // empty for plain ar1
  std::uint64_t seed = 0;
};

SignalTrace gen_ar1(const Ar1Params& params, std::size_t length,
                    std::uint64_t seed);
SignalTrace gen_markov_ar1(const MarkovAr1Params& params, std::size_t length,
                           std::uint64_t seed);
SignalTrace gen_binary_hmm(const BinaryHmmParams& params, std::size_t length,
                           std::uint64_t seed);

// CSV with header "t,value,hidden_state"; hidden_state column is empty for
// traces without hidden states. Round-trips exactly (shortest decimal form).
void write_trace_csv(const SignalTrace& trace, const std::string& path);
SignalTrace read_trace_csv(const std::string& path);

}  // namespace tans
