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

// Two-mode covariance matrices of the distributed TMSV state and the
// entanglement measures evaluated on them.

#include "cvdiv/channel.hpp"
#include "cvdiv/combining.hpp"
#include "cvdiv/errors.hpp"
#include "cvdiv/gaussian.hpp"
#include "cvdiv/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cvdiv {

/// Standard form [[a 1, c Z], [c Z, b 1]], Z = diag(1, -1).
struct TwoModeCM {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d v = Eigen::Matrix4d::Zero();
    v(0, 0) = v(1, 1) = a;
    v(2, 2) = v(3, 3) = b;
    v(0, 2) = v(2, 0) = c;
    v(1, 3) = v(3, 1) = -c;
    return v;
  }
  double det() const { return (a * b - c * c) * (a * b - c * c); }
};

/// Reads (a, b, c) from a two-mode state already in standard form.
inline TwoModeCM to_two_mode_cm(const GaussianState& s, double tol = 1e-9) {
  if (s.n_modes() != 2) throw std::invalid_argument("to_two_mode_cm: expected a two-mode state");
  const Eigen::MatrixXd& v = s.cov();
  TwoModeCM cm{v(0, 0), v(2, 2), v(0, 2)};
  if ((cm.matrix() - v).cwiseAbs().maxCoeff() > tol * std::max(1.0, v.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("to_two_mode_cm: covariance matrix is not in standard form");
  return cm;
}

namespace detail {

/// Squared symplectic eigenvalues {nu-^2, nu+^2}, roots of
/// x^2 - delta x + (ab - c^2)^2. `disc` is delta^2 - 4 det in factored form.
inline std::pair<double, double> symplectic_roots(const TwoModeCM& cm, double delta, double disc) {
  const double root = std::sqrt(std::max(0.0, disc));
  const double big = (delta + root) / 2.0;
  const double small = big > 0.0 ? cm.det() / big : std::max(0.0, (delta - root) / 2.0);
  return {small, big};
}

}  // namespace detail

/// Smallest symplectic eigenvalue of the state itself (not transposed).
inline double min_symplectic_eigenvalue(const TwoModeCM& cm) {
  const double delta = cm.a * cm.a + cm.b * cm.b - 2.0 * cm.c * cm.c;
  const double s = cm.a + cm.b;
  const double disc = (cm.a - cm.b) * (cm.a - cm.b) * (s * s - 4.0 * cm.c * cm.c);
  return std::sqrt(std::max(0.0, detail::symplectic_roots(cm, delta, disc).first));
}

inline bool is_physical(const TwoModeCM& cm, double tol = kPhysicalityTol) {
  return cm.a >= 1.0 - tol && cm.b >= 1.0 - tol && min_symplectic_eigenvalue(cm) >= 1.0 - tol;
}

/// Combined-mode moments for one channel draw on each subchannel, with the
/// same tree used to split and to recombine. With weights w:
///   X = sum w_j^2 sqrt(T_j),  c = X sqrt(Vs^2 - 1),
///   b = 1 + X^2 (Vs - 1) + sum w_j^2 eps_j.
inline TwoModeCM conditional_cm(double vs, std::span<const ChannelRealization> draws, const CombinerTree& tree) {
  if (!(vs >= 1.0)) throw std::domain_error("conditional_cm: Vs must be >= 1");
  if (draws.size() != tree.M())
    throw std::invalid_argument("conditional_cm: need one realization per subchannel");
  const std::vector<double> w = combine_weights(tree);
  double x = 0.0, noise = 0.0;
  for (std::size_t j = 0; j < draws.size(); ++j) {
    x += w[j] * w[j] * std::sqrt(draws[j].transmissivity);
    noise += w[j] * w[j] * draws[j].excess_noise;
  }
  return {vs, 1.0 + x * x * (vs - 1.0) + noise, x * std::sqrt(vs * vs - 1.0)};
}

inline TwoModeCM conditional_cm(double vs, std::span<const ChannelRealization> draws) {
  return conditional_cm(vs, draws, equal_weight_tree(draws.size()));
}

/// Same quantity by explicit Gaussian operations: TMSV, split Bob's mode,
/// lossy channel per subchannel, recombine, trace the unused ports.
inline TwoModeCM conditional_cm_pipeline(double vs, std::span<const ChannelRealization> draws,
                                         const CombinerTree& tree) {
  if (draws.size() != tree.M())
    throw std::invalid_argument("conditional_cm_pipeline: need one realization per subchannel");
  GaussianState s = split_equally(make_tmsv(vs), 1, tree);
  std::vector<std::size_t> modes(draws.size());
  for (std::size_t j = 0; j < draws.size(); ++j) {
    modes[j] = j + 1;
    s = apply_lossy_channel(s, j + 1, draws[j].transmissivity, draws[j].excess_noise);
  }
  return to_two_mode_cm(apply_combiner(s, modes, tree));
}

/// Ensemble-averaged moments over i.i.d. subchannels:
///   c = sqrt(T_eff) sqrt(Vs^2 - 1),
///   b = T_eff (Vs - 1) + Var[sqrt T] (Vs - 1) / M + <eps> + 1.
inline TwoModeCM averaged_cm_analytic(double vs, const ChannelStatistics& st, std::size_t m) {
  if (!(vs >= 1.0)) throw std::domain_error("averaged_cm_analytic: Vs must be >= 1");
  if (m == 0) throw std::invalid_argument("averaged_cm_analytic: M must be >= 1");
  const double md = static_cast<double>(m);
  return {vs, st.T_eff() * (vs - 1.0) + st.var_sqrtT * (vs - 1.0) / md + st.mean_eps + 1.0,
          st.mean_sqrtT * std::sqrt(vs * vs - 1.0)};
}

struct AveragedCM {
  TwoModeCM cm;
  TwoModeCM standard_error;  // a is exact, so its entry is 0
  std::size_t n = 0;
};

/// Elementwise mean of conditional_cm over n joint draws r = 0..n-1.
inline AveragedCM averaged_cm_montecarlo(double vs, const ChannelSampler& sampler, const CombinerTree& tree,
                                         std::size_t n, std::uint64_t seed, unsigned threads = 1) {
  if (n == 0) throw std::invalid_argument("averaged_cm_montecarlo: n must be >= 1");
  std::vector<TwoModeCM> draws(n);
  parallel_for(n, threads, [&](std::size_t r) {
    const auto real = sampler(tree.M(), r, seed);
    draws[r] = conditional_cm(vs, real, tree);
  });
  double sb = 0.0, sc = 0.0;
  for (const auto& d : draws) {
    sb += d.b;
    sc += d.c;
  }
  const double nd = static_cast<double>(n);
  AveragedCM out;
  out.n = n;
  out.cm = {vs, sb / nd, sc / nd};
  out.standard_error = {0.0, 0.0, 0.0};
  if (n > 1) {
    double vb = 0.0, vc = 0.0;
    for (const auto& d : draws) {
      vb += (d.b - out.cm.b) * (d.b - out.cm.b);
      vc += (d.c - out.cm.c) * (d.c - out.cm.c);
    }
    out.standard_error.b = std::sqrt(vb / (nd - 1.0) / nd);
    out.standard_error.c = std::sqrt(vc / (nd - 1.0) / nd);
  }
  return out;
}

/// Log-negativity in ebits. Delta is the partially transposed invariant
/// a^2 + b^2 + 2c^2; its discriminant ((a-b)^2 + 4c^2)(a+b)^2 is never
/// negative.
inline double log_negativity(const TwoModeCM& cm) {
  const double delta = cm.a * cm.a + cm.b * cm.b + 2.0 * cm.c * cm.c;
  const double s = cm.a + cm.b;
  const double disc = ((cm.a - cm.b) * (cm.a - cm.b) + 4.0 * cm.c * cm.c) * s * s;
  if (!std::isfinite(disc)) throw NumericError("log_negativity: non-finite covariance matrix");
  const double nu2 = detail::symplectic_roots(cm, delta, disc).first;
  if (!(nu2 > 0.0)) throw NumericError("log_negativity: non-positive transposed symplectic eigenvalue");
  return std::max(0.0, -0.5 * std::log2(nu2));
}

inline double tmsv_log_negativity(double vs) {
  if (!(vs >= 1.0)) throw std::domain_error("tmsv_log_negativity: Vs must be >= 1");
  return -std::log2(vs - std::sqrt(vs * vs - 1.0));
}

inline double scaled_log_negativity(const TwoModeCM& cm, double vs) {
  if (!(vs > 1.0)) throw std::domain_error("scaled_log_negativity: Vs must be > 1");
  return log_negativity(cm) / tmsv_log_negativity(vs);
}

/// Entropy of a single-mode thermal state with symplectic eigenvalue x.
inline double entropy_g(double x) {
  if (x < 1.0 - kPhysicalityTol) throw NumericError("entropy_g: symplectic eigenvalue below 1");
  if (x <= 1.0) return 0.0;
  const double p = (x + 1.0) / 2.0, q = (x - 1.0) / 2.0;
  return p * std::log2(p) - q * std::log2(q);
}

/// Reverse coherent information g(a) - g(nu+) - g(nu-), spectrum of the
/// untransposed matrix (Delta = a^2 + b^2 - 2c^2).
inline double rci(const TwoModeCM& cm) {
  const double delta = cm.a * cm.a + cm.b * cm.b - 2.0 * cm.c * cm.c;
  const double s = cm.a + cm.b;
  const double disc = (cm.a - cm.b) * (cm.a - cm.b) * (s * s - 4.0 * cm.c * cm.c);
  if (disc < -1e-9 * std::max(1.0, delta * delta))
    throw NumericError("rci: negative discriminant " + std::to_string(disc));
  const auto [lo, hi] = detail::symplectic_roots(cm, delta, disc);
  const double nu_plus = std::sqrt(hi), nu_minus = std::sqrt(std::max(0.0, lo));
  if (nu_minus < 1.0 - 1e-9) throw NumericError("rci: unphysical covariance matrix");
  return entropy_g(cm.a) - entropy_g(nu_plus) - entropy_g(std::max(1.0, nu_minus));
}

struct EntanglementResult {
  std::string label;
  std::size_t M = 1;
  double vs = 1.0;
  double e_ln = 0.0;
  double e_ln_scaled = 0.0;
  double rci = 0.0;
  ChannelStatistics stats_used;
  std::size_t n_samples = 0;
  double stderr_b = 0.0;
  bool physical = true;
};

/// Analytic sweep uses `stats`; Monte Carlo sweep uses `sampler`.
struct EntanglementSweep {
  std::string label;
  std::vector<double> vs;
  std::vector<std::size_t> m;
  ChannelStatistics stats;
  std::optional<ChannelSampler> sampler;
  std::size_t n_samples = 3000;
  std::uint64_t seed = 1;
  TreeLayout layout = TreeLayout::balanced;
};

inline EntanglementResult evaluate_entanglement(const std::string& label, double vs, std::size_t m,
                                                const TwoModeCM& cm, const ChannelStatistics& st) {
  EntanglementResult r;
  r.label = label;
  r.M = m;
  r.vs = vs;
  r.e_ln = log_negativity(cm);
  r.e_ln_scaled = vs > 1.0 ? r.e_ln / tmsv_log_negativity(vs) : 0.0;
  r.physical = is_physical(cm);
  r.rci = rci(cm);
  r.stats_used = st;
  return r;
}

/// Rows ordered M-major, then Vs, as listed.
inline std::vector<EntanglementResult> sweep_entanglement(const EntanglementSweep& sw, unsigned threads = 1) {
  const std::size_t nv = sw.vs.size(), n = nv * sw.m.size();
  std::vector<EntanglementResult> rows(n);
  if (!sw.sampler) {
    parallel_for(n, threads, [&](std::size_t k) {
      const std::size_t m = sw.m[k / nv];
      const double vs = sw.vs[k % nv];
      rows[k] = evaluate_entanglement(sw.label, vs, m, averaged_cm_analytic(vs, sw.stats, m), sw.stats);
      rows[k].n_samples = sw.stats.n_samples;
    });
    return rows;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t m = sw.m[k / nv];
    const double vs = sw.vs[k % nv];
    const AveragedCM avg =
        averaged_cm_montecarlo(vs, *sw.sampler, equal_weight_tree(m, sw.layout), sw.n_samples, sw.seed, threads);
    rows[k] = evaluate_entanglement(sw.label, vs, m, avg.cm, sw.stats);
    rows[k].n_samples = avg.n;
    rows[k].stderr_b = avg.standard_error.b;
  }
  return rows;
}

}  // namespace cvdiv
