// SPDX-License-Identifier: Apache-2.0
//
// cvdiv: diversity-assisted Earth-to-satellite CV quantum link simulation
// Copyright (C) 2026 The cvdiv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Parametric fading channels and the ensemble statistics that feed the
// averaged covariance-matrix formulas.

#include "cvdiv/gaussian.hpp"
#include "cvdiv/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvdiv {

/// Default excess noise referred to the transmitter, SNU.
inline constexpr double kDefaultExcessNoiseTx = 0.03;

/// One subchannel draw: transmissivity and excess noise at the receiver.
struct ChannelRealization {
  double transmissivity = 1.0;
  double excess_noise = 0.0;
};

/// Noise at the receiver scales with the draw: eps = T * eps_tx.
inline ChannelRealization realization_from_tx_noise(double transmissivity, double eps_tx) {
  return {transmissivity, transmissivity * eps_tx};
}

/// Lossy channel as the transmitted arm of B(sqrt T) against a thermal
/// environment of variance 1 + eps / (1 - T); the environment is traced out.
/// Single-mode variance map: V -> T V + (1 - T) + eps.
inline GaussianState apply_lossy_channel(const GaussianState& s, std::size_t mode, double transmissivity,
                                         double eps) {
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0))
    throw std::domain_error("apply_lossy_channel: transmissivity must lie in [0, 1]");
  if (!(eps >= 0.0)) throw std::domain_error("apply_lossy_channel: excess noise must be >= 0");
  if (mode >= s.n_modes()) throw std::invalid_argument("apply_lossy_channel: mode out of range");
  if (transmissivity >= 1.0 - 1e-12) {
    if (eps > 0.0)
      throw std::domain_error("apply_lossy_channel: T = 1 with eps > 0 makes the environment variance singular");
    return s;
  }
  const double env_variance = 1.0 + eps / (1.0 - transmissivity);
  const GaussianState joint = direct_sum(s, make_thermal(env_variance));
  const std::size_t env = joint.n_modes() - 1;
  const GaussianState mixed = apply_beam_splitter(joint, mode, env, std::sqrt(transmissivity));
  return trace_out(mixed, {env});
}

/// Log-normal loss in dB, parameterized by the mean and standard deviation
/// of the loss itself (not of its logarithm).
struct LogNormalLossModel {
  double mean_db = 3.0;
  double stddev_db = 1.0;

  void validate() const {
    if (!(mean_db > 0.0) || !std::isfinite(mean_db))
      throw std::domain_error("LogNormalLossModel: mean loss must be > 0 dB");
    if (!(stddev_db >= 0.0) || !std::isfinite(stddev_db))
      throw std::domain_error("LogNormalLossModel: fading strength must be >= 0 dB");
  }

  /// ln(loss) ~ N(ln(mu^2 / sqrt(mu^2 + sigma^2)), ln(1 + sigma^2 / mu^2)).
  double log_mean() const {
    return std::log(mean_db * mean_db / std::sqrt(mean_db * mean_db + stddev_db * stddev_db));
  }
  double log_variance() const { return std::log1p(stddev_db * stddev_db / (mean_db * mean_db)); }

  double sample_loss_db(RandomStream& rng) const {
    validate();
    return std::exp(rng.normal(log_mean(), std::sqrt(log_variance())));
  }
};

inline double db_to_transmissivity(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }
inline double transmissivity_to_db(double t) { return -10.0 * std::log10(t); }

/// One log-normal draw; attach eps = T * eps_tx.
inline ChannelRealization sample_lognormal_T(const LogNormalLossModel& model, RandomStream& rng,
                                             double eps_tx = kDefaultExcessNoiseTx) {
  return realization_from_tx_noise(db_to_transmissivity(model.sample_loss_db(rng)), eps_tx);
}

/// Ensemble statistics; every analytic formula consumes these.
struct ChannelStatistics {
  double mean_T = 1.0;
  double mean_sqrtT = 1.0;
  double var_sqrtT = 0.0;
  double mean_eps = 0.0;
  std::size_t n_samples = 0;

  /// <sqrt T>^2.
  double T_eff() const { return mean_sqrtT * mean_sqrtT; }
};

/// Population moments of a transmissivity sample.
inline ChannelStatistics compute_stats(std::span<const double> samples, double eps_tx = kDefaultExcessNoiseTx) {
  if (samples.empty()) throw std::invalid_argument("compute_stats: empty sample");
  double sum_t = 0.0, sum_s = 0.0;
  for (double t : samples) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("compute_stats: transmissivity outside [0, 1]");
    sum_t += t;
    sum_s += std::sqrt(t);
  }
  const double n = static_cast<double>(samples.size());
  ChannelStatistics st;
  st.mean_T = sum_t / n;
  st.mean_sqrtT = sum_s / n;
  double acc = 0.0;
  for (double t : samples) {
    const double d = std::sqrt(t) - st.mean_sqrtT;
    acc += d * d;
  }
  st.var_sqrtT = acc / n;
  st.mean_eps = st.mean_T * eps_tx;
  st.n_samples = samples.size();
  return st;
}

/// Exact moments of the log-normal law by quadrature over the underlying
/// normal variable (trapezoid rule).
inline ChannelStatistics lognormal_moments(const LogNormalLossModel& model, double eps_tx = kDefaultExcessNoiseTx) {
  model.validate();
  const double m = model.log_mean();
  const double s = std::sqrt(model.log_variance());
  ChannelStatistics st;
  if (s == 0.0) {
    const double t = db_to_transmissivity(model.mean_db);
    st.mean_T = t;
    st.mean_sqrtT = std::sqrt(t);
  } else {
    constexpr int kNodes = 4001;
    constexpr double kHalfWidth = 12.0;
    const double h = 2.0 * kHalfWidth / (kNodes - 1);
    double e_t = 0.0, e_s = 0.0, norm = 0.0;
    for (int i = 0; i < kNodes; ++i) {
      const double z = -kHalfWidth + h * i;
      const double w = std::exp(-0.5 * z * z);
      const double t = db_to_transmissivity(std::exp(m + s * z));
      e_t += w * t;
      e_s += w * std::sqrt(t);
      norm += w;
    }
    st.mean_T = e_t / norm;
    st.mean_sqrtT = e_s / norm;
  }
  st.var_sqrtT = std::max(0.0, st.mean_T - st.mean_sqrtT * st.mean_sqrtT);
  st.mean_eps = st.mean_T * eps_tx;
  return st;
}

struct LossStatisticsDb {
  double mean_db = 0.0;
  double stddev_db = 0.0;
  double min_db = 0.0;
  double max_db = 0.0;
};

class ZeroTransmissivityError : public std::domain_error {
 public:
  explicit ZeroTransmissivityError(std::size_t count)
      : std::domain_error("loss_statistics_dB: " + std::to_string(count) +
                          " sample(s) with zero transmissivity (infinite loss)"),
        count_(count) {}
  std::size_t count() const { return count_; }

 private:
  std::size_t count_;
};

/// Mean and population standard deviation of -10 log10 T.
inline LossStatisticsDb loss_statistics_dB(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("loss_statistics_dB: empty sample");
  std::size_t zeros = 0;
  for (double t : samples) {
    if (!(t <= 1.0) || t < 0.0) throw std::domain_error("loss_statistics_dB: transmissivity outside (0, 1]");
    if (t == 0.0) ++zeros;
  }
  if (zeros > 0) throw ZeroTransmissivityError(zeros);
  LossStatisticsDb out;
  out.min_db = std::numeric_limits<double>::infinity();
  out.max_db = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double t : samples) {
    const double l = transmissivity_to_db(t);
    sum += l;
    out.min_db = std::min(out.min_db, l);
    out.max_db = std::max(out.max_db, l);
  }
  out.mean_db = sum / static_cast<double>(samples.size());
  double acc = 0.0;
  for (double t : samples) {
    const double d = transmissivity_to_db(t) - out.mean_db;
    acc += d * d;
  }
  out.stddev_db = std::sqrt(acc / static_cast<double>(samples.size()));
  return out;
}

/// Transmissivity samples from a simulation or a file.
struct EmpiricalChannel {
  std::vector<double> samples;
  double eps_tx = kDefaultExcessNoiseTx;

  void validate() const {
    if (samples.empty()) throw std::invalid_argument("EmpiricalChannel: no samples");
    for (double t : samples)
      if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("EmpiricalChannel: sample outside [0, 1]");
  }
  ChannelStatistics stats() const { return compute_stats(samples, eps_tx); }
};

/// Joint sampler over M subchannels for one realization index. The result
/// depends only on (M, realization, seed). Subchannels are i.i.d. in all
/// built-in samplers.
class ChannelSampler {
 public:
  using Fn = std::function<std::vector<ChannelRealization>(std::size_t, std::uint64_t, std::uint64_t)>;

  ChannelSampler(std::string label, Fn fn) : label_(std::move(label)), fn_(std::move(fn)) {}

  std::vector<ChannelRealization> operator()(std::size_t m, std::uint64_t realization, std::uint64_t seed) const {
    return fn_(m, realization, seed);
  }
  const std::string& label() const { return label_; }

 private:
  std::string label_;
  Fn fn_;
};

inline ChannelSampler lognormal_sampler(LogNormalLossModel model, double eps_tx = kDefaultExcessNoiseTx) {
  model.validate();
  return {"lognormal", [model, eps_tx](std::size_t m, std::uint64_t r, std::uint64_t seed) {
            std::vector<ChannelRealization> out;
            out.reserve(m);
            for (std::size_t j = 0; j < m; ++j) {
              RandomStream rng(seed, StreamKind::channel, static_cast<std::uint32_t>(j), r);
              out.push_back(sample_lognormal_T(model, rng, eps_tx));
            }
            return out;
          }};
}

/// i.i.d. resampling (with replacement) from one empirical ensemble.
inline ChannelSampler empirical_sampler(EmpiricalChannel channel) {
  channel.validate();
  return {"empirical", [ch = std::move(channel)](std::size_t m, std::uint64_t r, std::uint64_t seed) {
            std::vector<ChannelRealization> out;
            out.reserve(m);
            for (std::size_t j = 0; j < m; ++j) {
              RandomStream rng(seed, StreamKind::resample, static_cast<std::uint32_t>(j), r);
              out.push_back(realization_from_tx_noise(ch.samples[rng.below(ch.samples.size())], ch.eps_tx));
            }
            return out;
          }};
}

/// Per-subchannel columns; realization r reads row r modulo the column length.
inline ChannelSampler column_sampler(std::vector<std::vector<double>> columns, double eps_tx) {
  if (columns.empty()) throw std::invalid_argument("column_sampler: no columns");
  for (const auto& c : columns) EmpiricalChannel{c, eps_tx}.validate();
  return {"empirical", [cols = std::move(columns), eps_tx](std::size_t m, std::uint64_t r, std::uint64_t) {
            if (m > cols.size())
              throw std::invalid_argument("column_sampler: requested " + std::to_string(m) +
                                          " subchannels but only " + std::to_string(cols.size()) +
                                          " columns are available");
            std::vector<ChannelRealization> out;
            out.reserve(m);
            for (std::size_t j = 0; j < m; ++j)
              out.push_back(realization_from_tx_noise(cols[j][r % cols[j].size()], eps_tx));
            return out;
          }};
}

/// Same realization on every subchannel, every draw.
inline ChannelSampler fixed_sampler(ChannelRealization realization) {
  return {"fixed", [realization](std::size_t m, std::uint64_t, std::uint64_t) {
            return std::vector<ChannelRealization>(m, realization);
          }};
}

}  // namespace cvdiv
