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

// Coherent-state transfer over M diversity subchannels: modulation
// alphabets, per-draw fidelity and its Monte Carlo average.

#include "cvdiv/channel.hpp"
#include "cvdiv/combining.hpp"
#include "cvdiv/errors.hpp"
#include "cvdiv/gaussian.hpp"
#include "cvdiv/parallel.hpp"
#include "cvdiv/random.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cvdiv {

enum class ModulationKind { classical_bpsk, quantum_gaussian };

struct ModulationScheme {
  ModulationKind kind = ModulationKind::quantum_gaussian;
  double alpha = 10.0;  // BPSK amplitude
  double p0 = 0.5;      // probability of -alpha
  double v_mod = 4.0;   // Gaussian modulation variance, SNU

  static ModulationScheme bpsk(double alpha, double p0 = 0.5) {
    return {ModulationKind::classical_bpsk, alpha, p0, 0.0};
  }
  static ModulationScheme gaussian(double v_mod) { return {ModulationKind::quantum_gaussian, 0.0, 0.5, v_mod}; }

  void validate() const {
    if (kind == ModulationKind::classical_bpsk) {
      if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::domain_error("ModulationScheme: alpha must be > 0");
      if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::domain_error("ModulationScheme: P0 must lie in [0, 1]");
    } else if (!(v_mod > 0.0) || !std::isfinite(v_mod)) {
      throw std::domain_error("ModulationScheme: V_mod must be > 0");
    }
  }
  std::string name() const { return kind == ModulationKind::classical_bpsk ? "bpsk" : "gaussian"; }
  double parameter() const { return kind == ModulationKind::classical_bpsk ? alpha : v_mod; }
};

/// BPSK: -alpha with probability P0, else +alpha. Gaussian: Re and Im
/// i.i.d. N(0, V_mod / 8), so E|alpha|^2 = V_mod / 4.
inline CoherentAmplitude sample_alpha(const ModulationScheme& scheme, RandomStream& rng) {
  if (scheme.kind == ModulationKind::classical_bpsk)
    return {rng.uniform() < scheme.p0 ? -scheme.alpha : scheme.alpha, 0.0};
  const double sd = std::sqrt(scheme.v_mod / 8.0);
  const double re = rng.normal(0.0, sd);
  const double im = rng.normal(0.0, sd);
  return {re, im};
}

/// Amplitude gain X and noise term Y of the combined output for one draw:
///   X = sum w_j sqrt(T_j),  Y = 2 + sum w_j^2 eps_j.
struct OutputMoments {
  double x = 1.0;
  double y = 2.0;
};

inline OutputMoments output_moments(std::span<const ChannelRealization> draws, const CombinerTree& tree) {
  if (draws.size() != tree.M()) throw std::invalid_argument("output_moments: need one realization per subchannel");
  const std::vector<double> w = combine_weights(tree);
  OutputMoments om{0.0, 2.0};
  for (std::size_t j = 0; j < draws.size(); ++j) {
    om.x += w[j] * std::sqrt(draws[j].transmissivity);
    om.y += w[j] * w[j] * draws[j].excess_noise;
  }
  return om;
}

/// Each subchannel sends |alpha_tar / sqrt M>; the target is
/// |alpha_tar / mean_sqrtT>.
inline double fidelity_from_moments(const OutputMoments& om, std::size_t m, CoherentAmplitude alpha_tar,
                                    double mean_sqrtT) {
  if (!(mean_sqrtT > 0.0)) throw std::domain_error("fidelity: mean sqrt(T) must be > 0");
  const double k = om.x / std::sqrt(static_cast<double>(m)) - 1.0 / mean_sqrtT;
  const double dist2 = k * k * alpha_tar.norm_sq();
  return (2.0 / om.y) * std::exp(-2.0 * dist2 / om.y);
}

inline double fidelity_closed_form(std::span<const ChannelRealization> draws, const CombinerTree& tree,
                                   CoherentAmplitude alpha_tar, double mean_sqrtT) {
  return fidelity_from_moments(output_moments(draws, tree), tree.M(), alpha_tar, mean_sqrtT);
}

/// Characteristic-function overlap (1/pi) \int chi_out(xi) chi_target(-xi) d^2 xi
/// on a 2D trapezoid grid. chi_out is composed port by port through the
/// network using chi(xi) -> chi_r(eta xi) chi_m(sqrt(1-eta^2) xi).
inline double fidelity_cf_oracle(std::span<const ChannelRealization> draws, const CombinerTree& tree,
                                 CoherentAmplitude alpha_tar, double mean_sqrtT) {
  using cplx = std::complex<double>;
  using Cf = std::function<cplx(cplx)>;
  if (!(mean_sqrtT > 0.0)) throw std::domain_error("fidelity_cf_oracle: mean sqrt(T) must be > 0");
  const std::size_t m = tree.M();
  if (draws.size() != m) throw std::invalid_argument("fidelity_cf_oracle: need one realization per subchannel");

  const cplx a_tx = cplx(alpha_tar.re, alpha_tar.im) / std::sqrt(static_cast<double>(m));
  std::vector<Cf> port(m);
  double max_eps = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double st = std::sqrt(draws[j].transmissivity), eps = draws[j].excess_noise;
    max_eps = std::max(max_eps, eps);
    port[j] = [st, eps, a_tx](cplx xi) {
      return std::exp(-(1.0 + eps) * std::norm(xi) / 2.0 + st * (xi * std::conj(a_tx) - std::conj(xi) * a_tx));
    };
  }
  for (const auto& s : tree.steps()) {
    const double eta = tree.etas()[s.eta_index], r = std::sqrt(1.0 - eta * eta);
    port[s.retained] = [fr = port[s.retained], fm = port[s.merged], eta, r](cplx xi) {
      return fr(eta * xi) * fm(r * xi);
    };
  }
  const Cf& chi_out = port[tree.output_port()];
  const cplx target = cplx(alpha_tar.re, alpha_tar.im) / mean_sqrtT;
  auto chi_target = [target](cplx xi) {
    return std::exp(-std::norm(xi) / 2.0 + (xi * std::conj(target) - std::conj(xi) * target));
  };

  // Envelope exp(-k |xi|^2) with 1 <= k <= 1 + max_eps / 2; oscillation
  // frequency at most 2 (|alpha_tar| + |target|).
  const double k_max = 1.0 + max_eps / 2.0;
  const double omega = 2.0 * (std::sqrt(alpha_tar.norm_sq()) + std::abs(target));
  const double h = 2.0 * std::numbers::pi / (omega + 11.0 * std::sqrt(k_max));
  const double radius = std::sqrt(23.0);
  const long n = static_cast<long>(std::ceil(radius / h));
  // f(-xi) = conj f(xi): sum the half plane and take twice the real part.
  double sum = 0.5 * std::real(chi_out(0.0) * chi_target(0.0));
  for (long i = 0; i <= n; ++i) {
    for (long j = (i == 0 ? 1 : -n); j <= n; ++j) {
      const cplx xi(h * static_cast<double>(i), h * static_cast<double>(j));
      sum += std::real(chi_out(xi) * chi_target(-xi));
    }
  }
  const double f = 2.0 * sum * h * h / std::numbers::pi;
  if (!std::isfinite(f)) throw NumericError("fidelity_cf_oracle: integral did not converge");
  return f;
}

struct FidelitySampling {
  std::size_t n_channel = 3000;
  std::size_t n_alpha = 200;
  std::uint64_t seed = 1;
};

struct FidelityResult {
  std::string label;
  std::size_t M = 1;
  ModulationScheme scheme;
  double f_avg = 0.0;
  double standard_error = 0.0;
  std::size_t n_channel = 0;
  std::size_t n_alpha = 0;
  std::uint64_t seed = 0;
  double mean_sqrtT = 1.0;
};

/// Channel draw i uses sampler(M, i, seed) and the alphabet stream
/// (seed, i). The standard error is over the n_channel per-draw means.
inline FidelityResult average_fidelity(const ModulationScheme& scheme, const ChannelSampler& sampler,
                                       const CombinerTree& tree, double mean_sqrtT, const FidelitySampling& smp,
                                       unsigned threads = 1) {
  scheme.validate();
  if (smp.n_channel == 0 || smp.n_alpha == 0)
    throw std::invalid_argument("average_fidelity: sample counts must be >= 1");
  if (!(mean_sqrtT > 0.0)) throw std::domain_error("average_fidelity: mean sqrt(T) must be > 0");
  std::vector<double> per_draw(smp.n_channel);
  parallel_for(smp.n_channel, threads, [&](std::size_t i) {
    const auto draws = sampler(tree.M(), i, smp.seed);
    const OutputMoments om = output_moments(draws, tree);
    RandomStream rng(smp.seed, StreamKind::alphabet, 0, i);
    double acc = 0.0;
    for (std::size_t k = 0; k < smp.n_alpha; ++k)
      acc += fidelity_from_moments(om, tree.M(), sample_alpha(scheme, rng), mean_sqrtT);
    per_draw[i] = acc / static_cast<double>(smp.n_alpha);
  });
  FidelityResult out;
  out.M = tree.M();
  out.scheme = scheme;
  out.n_channel = smp.n_channel;
  out.n_alpha = smp.n_alpha;
  out.seed = smp.seed;
  out.mean_sqrtT = mean_sqrtT;
  const double n = static_cast<double>(smp.n_channel);
  double sum = 0.0;
  for (double f : per_draw) sum += f;
  out.f_avg = sum / n;
  if (smp.n_channel > 1) {
    double var = 0.0;
    for (double f : per_draw) var += (f - out.f_avg) * (f - out.f_avg);
    out.standard_error = std::sqrt(var / (n - 1.0) / n);
  }
  return out;
}

struct FidelitySweep {
  std::string label;
  std::optional<ChannelSampler> sampler;
  double mean_sqrtT = 1.0;
  std::vector<std::size_t> m;
  std::vector<ModulationScheme> schemes;
  FidelitySampling sampling;
  TreeLayout layout = TreeLayout::balanced;
};

/// Rows ordered M-major, then scheme, as listed.
inline std::vector<FidelityResult> sweep_fidelity(const FidelitySweep& sw, unsigned threads = 1) {
  std::vector<FidelityResult> rows;
  if (sw.m.empty() || sw.schemes.empty()) return rows;
  if (!sw.sampler) throw std::invalid_argument("sweep_fidelity: no channel sampler");
  for (std::size_t m : sw.m) {
    const CombinerTree tree = equal_weight_tree(m, sw.layout);
    for (const auto& sc : sw.schemes) {
      rows.push_back(average_fidelity(sc, *sw.sampler, tree, sw.mean_sqrtT, sw.sampling, threads));
      rows.back().label = sw.label;
    }
  }
  return rows;
}

}  // namespace cvdiv
