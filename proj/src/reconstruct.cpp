#include "tans/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tans {

namespace {

void check_set(const SampleSet& set, std::size_t horizon) {
  if (set.samples.empty()) throw std::invalid_argument("empty sample set");
  if (set.n_init < 1 || set.n_init > set.samples.size()) {
    throw std::invalid_argument("n_init must lie in [1, #samples]");
  }
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    if (i > 0 && set.samples[i].t <= set.samples[i - 1].t) {
      throw std::invalid_argument("sample times must be strictly increasing");
    }
  }
  if (set.samples.front().t < 0 ||
      set.samples.back().t >= static_cast<std::int64_t>(horizon)) {
    throw std::invalid_argument("sample times must lie inside [0, horizon)");
  }
}

Reconstruction make_base(const SampleSet& set, std::size_t horizon,
                         std::string method) {
  Reconstruction recon;
  recon.method = std::move(method);
  recon.values.assign(horizon, 0.0);
  recon.sample_times.reserve(set.samples.size());
  for (const auto& s : set.samples) recon.sample_times.push_back(s.t);
  recon.eval_first = set.samples[set.n_init - 1].t + 1;
  recon.eval_last = set.samples.back().t;
  return recon;
}

// Regime coefficient for one interval of a conditional reconstruction.
double conditional_alpha(const SampleSet& set, std::size_t left_index,
                         const GlpReconConfig& cfg) {
  const auto& samples = set.samples;
  if (cfg.genie_states != nullptr) {
    const std::int64_t t = samples[left_index].t;
    if (t >= static_cast<std::int64_t>(cfg.genie_states->size())) {
      throw std::invalid_argument("genie states shorter than sample range");
    }
    return (*cfg.genie_states)[t] == 1 ? cfg.markov.alpha1 : cfg.markov.alpha0;
  }
  const std::size_t est_m = std::max<std::size_t>(cfg.estimator_m, 2);
  if (left_index == 0) return cfg.markov.alpha0;  // no estimate possible yet
  SamplingState est_state(est_m);
  const std::size_t first = left_index + 1 > est_m ? left_index + 1 - est_m : 0;
  for (std::size_t k = first; k <= left_index; ++k) {
    est_state.push(samples[k].t, samples[k].value);
  }
  const StateEstimate est = estimate_theta(est_state, cfg.markov);
  int regime = est.theta_hat;
  if (regime == 2) {
    regime = est.posterior[1] > est.posterior[0] ? 1 : 0;
  }
  return regime == 1 ? cfg.markov.alpha1 : cfg.markov.alpha0;
}

}  // namespace

Reconstruction reconstruct_glp(const SampleSet& set, std::size_t horizon,
                               const GlpReconConfig& cfg) {
  check_set(set, horizon);
  if (cfg.m < 1) throw std::invalid_argument("m must be >= 1");
  if (cfg.mode == GlpAcfMode::Model &&
      (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0))) {
    throw std::invalid_argument("model mode needs alpha in (0, 1)");
  }

  Reconstruction recon = make_base(set, horizon, "glp");
  const auto& samples = set.samples;

  // Head: nothing to predict from; hold the first value (outside the
  // evaluation window by construction).
  for (std::int64_t t = 0; t < samples.front().t; ++t) {
    recon.values[t] = samples.front().value;
  }

  for (std::size_t i = 0; i < samples.size(); ++i) {
    recon.values[samples[i].t] = samples[i].value;
    const std::int64_t t_end = i + 1 < samples.size()
                                   ? samples[i + 1].t
                                   : static_cast<std::int64_t>(horizon);
    if (samples[i].t + 1 >= t_end) continue;

    // Per-interval autocorrelation.
    AutocorrFn acf = AutocorrFn::model_ar1(0.5);
    switch (cfg.mode) {
      case GlpAcfMode::Model:
        acf = AutocorrFn::model_ar1(cfg.alpha);
        break;
      case GlpAcfMode::Conditional:
        acf = AutocorrFn::conditional_ar(conditional_alpha(set, i, cfg));
        break;
      case GlpAcfMode::Estimated: {
        const std::int64_t t_begin = samples[i].t - cfg.window + 1;
        std::size_t first = i;
        while (first > 0 && samples[first - 1].t >= t_begin) --first;
        std::vector<TimedValue> past(samples.begin() + first,
                                     samples.begin() + i + 1);
        acf = acf_estimate_window(past, cfg.window, cfg.max_lag);
        break;
      }
    }

    // Predictor state: up to m samples ending at the interval's left edge.
    // In estimated mode, drop entries whose lags the table cannot serve.
    const std::size_t avail = i + 1;
    for (std::int64_t t = samples[i].t + 1; t < t_end; ++t) {
      std::size_t m_use = std::min<std::size_t>(cfg.m, avail);
      GlpPrediction pred{samples[i].value, 0.0};
      bool solved = false;
      while (m_use >= 1) {
        if (cfg.mode == GlpAcfMode::Estimated) {
          bool ok = true;
          for (std::size_t a = i + 1 - m_use; a <= i && ok; ++a) {
            if (!acf.has(t - samples[a].t)) ok = false;
            for (std::size_t b = i + 1 - m_use; b < a && ok; ++b) {
              if (!acf.has(samples[a].t - samples[b].t)) ok = false;
            }
          }
          if (!ok) {
            --m_use;
            continue;
          }
        }
        SamplingState state(m_use);
        for (std::size_t k = i + 1 - m_use; k <= i; ++k) {
          state.push(samples[k].t, samples[k].value);
        }
        if (cfg.mode == GlpAcfMode::Estimated) {
          // Empirical tables need not be consistent; shrink on failure.
          try {
            pred = glp_predict(state, t - samples[i].t, acf);
            solved = true;
            break;
          } catch (const std::exception&) {
            --m_use;
            continue;
          }
        }
        pred = glp_predict(state, t - samples[i].t, acf);
        solved = true;
        break;
      }
      recon.values[t] = solved ? pred.value : samples[i].value;
    }
  }
  return recon;
}

Reconstruction reconstruct_clc(const SampleSet& set, std::size_t horizon) {
  check_set(set, horizon);
  Reconstruction recon = make_base(set, horizon, "clc");
  const auto& samples = set.samples;

  // Hold the first value until a second sample exists.
  const std::int64_t hold_until =
      samples.size() > 1 ? samples[1].t : static_cast<std::int64_t>(horizon);
  for (std::int64_t t = 0; t < hold_until; ++t) {
    recon.values[t] = samples.front().value;
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    recon.values[samples[i].t] = samples[i].value;
    const std::int64_t t_end = i + 1 < samples.size()
                                   ? samples[i + 1].t
                                   : static_cast<std::int64_t>(horizon);
    const auto& a = samples[i - 1];
    const auto& b = samples[i];
    const double slope =
        (b.value - a.value) / static_cast<double>(b.t - a.t);
    for (std::int64_t t = b.t + 1; t < t_end; ++t) {
      recon.values[t] = b.value + slope * static_cast<double>(t - b.t);
    }
  }
  return recon;
}

Reconstruction reconstruct_nclc(const SampleSet& set, std::size_t horizon) {
  check_set(set, horizon);
  Reconstruction recon = make_base(set, horizon, "nclc");
  const auto& samples = set.samples;

  for (std::int64_t t = 0; t < samples.front().t; ++t) {
    recon.values[t] = samples.front().value;
  }
  recon.values[samples.front().t] = samples.front().value;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const auto& a = samples[i - 1];
    const auto& b = samples[i];
    const double slope =
        (b.value - a.value) / static_cast<double>(b.t - a.t);
    for (std::int64_t t = a.t + 1; t < b.t; ++t) {
      recon.values[t] = a.value + slope * static_cast<double>(t - a.t);
    }
    recon.values[b.t] = b.value;
  }
  for (std::int64_t t = samples.back().t + 1;
       t < static_cast<std::int64_t>(horizon); ++t) {
    recon.values[t] = samples.back().value;
  }
  return recon;
}

double distortion(const std::vector<double>& truth,
                  const Reconstruction& recon, DistortionMeasure measure,
                  bool exclude_sample_times) {
  if (truth.size() != recon.values.size()) {
    throw std::invalid_argument("truth and reconstruction lengths differ");
  }
  if (recon.eval_first > recon.eval_last) {
    throw std::invalid_argument("empty evaluation window");
  }
  std::vector<char> is_sample;
  if (exclude_sample_times) {
    is_sample.assign(truth.size(), 0);
    for (std::int64_t t : recon.sample_times) is_sample[t] = 1;
  }

  double sum = 0.0;
  std::int64_t count = 0;
  for (std::int64_t t = recon.eval_first; t <= recon.eval_last; ++t) {
    if (exclude_sample_times && is_sample[t]) continue;
    if (measure == DistortionMeasure::Hamming) {
      const bool truth_binary = truth[t] == 0.0 || truth[t] == 1.0;
      const bool recon_binary =
          recon.values[t] == 0.0 || recon.values[t] == 1.0;
      if (!truth_binary || !recon_binary) {
        throw std::invalid_argument(
            "hamming distortion needs 0/1-valued sequences");
      }
      sum += truth[t] != recon.values[t] ? 1.0 : 0.0;
    } else {
      const double d = truth[t] - recon.values[t];
      sum += d * d;
    }
    ++count;
  }
  if (count == 0) throw std::invalid_argument("empty evaluation window");
  return sum / static_cast<double>(count);
}

}  // namespace tans
