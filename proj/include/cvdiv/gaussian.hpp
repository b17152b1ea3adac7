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

// Gaussian-state moments in shot-noise units (hbar = 2, vacuum variance 1).
// Quadratures are ordered (q1, p1, ..., qN, pN).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvdiv {

inline constexpr double kPhysicalityTol = 1e-9;

struct CoherentAmplitude {
  double re = 0.0;
  double im = 0.0;

  double norm_sq() const { return re * re + im * im; }
  friend CoherentAmplitude operator*(double s, CoherentAmplitude a) { return {s * a.re, s * a.im}; }
  friend CoherentAmplitude operator-(CoherentAmplitude a) { return {-a.re, -a.im}; }
};

/// Omega = (+) [[0, 1], [-1, 0]].
inline Eigen::MatrixXd symplectic_form(std::size_t n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

/// First and second moments of an N-mode Gaussian state.
class GaussianState {
 public:
  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() == 0 || cov_.rows() % 2 != 0 || cov_.rows() != cov_.cols())
      throw std::invalid_argument("GaussianState: covariance must be a non-empty 2N x 2N matrix");
    if (mean_.size() != cov_.rows())
      throw std::invalid_argument("GaussianState: mean length must equal covariance dimension");
    const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::invalid_argument("GaussianState: covariance is not symmetric");
    cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  }

  std::size_t n_modes() const { return static_cast<std::size_t>(cov_.rows() / 2); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

  Eigen::Matrix2d block(std::size_t i, std::size_t j) const {
    return cov_.block<2, 2>(2 * static_cast<Eigen::Index>(i), 2 * static_cast<Eigen::Index>(j));
  }
  CoherentAmplitude amplitude(std::size_t mode) const {
    return {0.5 * mean_(2 * static_cast<Eigen::Index>(mode)), 0.5 * mean_(2 * static_cast<Eigen::Index>(mode) + 1)};
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

inline GaussianState make_vacuum(std::size_t n_modes) {
  if (n_modes == 0) throw std::invalid_argument("make_vacuum: n_modes must be >= 1");
  return {Eigen::VectorXd::Zero(2 * n_modes), Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes)};
}

inline GaussianState make_coherent(CoherentAmplitude alpha) {
  if (!std::isfinite(alpha.re) || !std::isfinite(alpha.im))
    throw std::invalid_argument("make_coherent: amplitude must be finite");
  Eigen::VectorXd mean(2);
  mean << 2.0 * alpha.re, 2.0 * alpha.im;
  return {mean, Eigen::MatrixXd::Identity(2, 2)};
}

/// Thermal state with quadrature variance 2*nbar + 1.
inline GaussianState make_thermal(double variance) {
  if (!(variance >= 1.0)) throw std::domain_error("make_thermal: variance must be >= 1 (sub-vacuum noise)");
  return {Eigen::VectorXd::Zero(2), variance * Eigen::MatrixXd::Identity(2, 2)};
}

/// Two-mode squeezed vacuum with quadrature variance vs = cosh(2r).
inline GaussianState make_tmsv(double vs) {
  if (!(vs >= 1.0)) throw std::domain_error("make_tmsv: Vs must be >= 1");
  const double c = std::sqrt(vs * vs - 1.0);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
  cov.diagonal().setConstant(vs);
  cov(0, 2) = cov(2, 0) = c;
  cov(1, 3) = cov(3, 1) = -c;
  return {Eigen::VectorXd::Zero(4), cov};
}

/// Tensor product of independent states; modes of `a` come first.
inline GaussianState direct_sum(const GaussianState& a, const GaussianState& b) {
  const Eigen::Index na = a.cov().rows();
  const Eigen::Index nb = b.cov().rows();
  Eigen::VectorXd mean(na + nb);
  mean << a.mean(), b.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return {mean, cov};
}

/// Reorders modes: output mode k is input mode order[k].
inline GaussianState permute_modes(const GaussianState& s, std::span<const std::size_t> order) {
  const std::size_t n = s.n_modes();
  if (order.size() != n) throw std::invalid_argument("permute_modes: order must list every mode once");
  std::vector<bool> seen(n, false);
  for (std::size_t m : order) {
    if (m >= n || seen[m]) throw std::invalid_argument("permute_modes: order is not a permutation");
    seen[m] = true;
  }
  Eigen::VectorXd mean(2 * n);
  Eigen::MatrixXd cov(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    mean.segment<2>(2 * i) = s.mean().segment<2>(2 * order[i]);
    for (std::size_t j = 0; j < n; ++j) cov.block<2, 2>(2 * i, 2 * j) = s.block(order[i], order[j]);
  }
  return {mean, cov};
}

/// B(eta) = [[eta 1, sqrt(1-eta^2) 1], [sqrt(1-eta^2) 1, -eta 1]].
/// Output mode 1 is the transmitted port.
inline Eigen::Matrix4d beam_splitter_symplectic(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::domain_error("beam_splitter_symplectic: eta must lie in [0, 1]");
  const double r = std::sqrt(1.0 - eta * eta);
  Eigen::Matrix4d b = Eigen::Matrix4d::Zero();
  b(0, 0) = b(1, 1) = eta;
  b(0, 2) = b(1, 3) = r;
  b(2, 0) = b(3, 1) = r;
  b(2, 2) = b(3, 3) = -eta;
  return b;
}

/// Applies B(eta) to the mode pair (mode_i, mode_j); mode_i receives the
/// transmitted output.
inline GaussianState apply_beam_splitter(const GaussianState& s, std::size_t mode_i, std::size_t mode_j,
                                         double eta) {
  const std::size_t n = s.n_modes();
  if (mode_i >= n || mode_j >= n || mode_i == mode_j)
    throw std::invalid_argument("apply_beam_splitter: modes must be distinct and in range");
  const Eigen::Matrix4d b = beam_splitter_symplectic(eta);
  Eigen::MatrixXd sym = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  const std::size_t idx[2] = {mode_i, mode_j};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      sym.block<2, 2>(2 * idx[r], 2 * idx[c]) = b.block<2, 2>(2 * r, 2 * c);
  return {sym * s.mean(), sym * s.cov() * sym.transpose()};
}

/// Discards the listed modes. Duplicates are ignored.
inline GaussianState trace_out(const GaussianState& s, std::span<const std::size_t> modes) {
  const std::size_t n = s.n_modes();
  std::vector<bool> drop(n, false);
  for (std::size_t m : modes) {
    if (m >= n) throw std::invalid_argument("trace_out: mode index out of range");
    drop[m] = true;
  }
  std::vector<std::size_t> keep;
  for (std::size_t m = 0; m < n; ++m)
    if (!drop[m]) keep.push_back(m);
  if (keep.empty()) throw std::invalid_argument("trace_out: cannot trace out every mode");
  Eigen::VectorXd mean(2 * keep.size());
  Eigen::MatrixXd cov(2 * keep.size(), 2 * keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    mean.segment<2>(2 * i) = s.mean().segment<2>(2 * keep[i]);
    for (std::size_t j = 0; j < keep.size(); ++j) cov.block<2, 2>(2 * i, 2 * j) = s.block(keep[i], keep[j]);
  }
  return {mean, cov};
}

inline GaussianState trace_out(const GaussianState& s, std::initializer_list<std::size_t> modes) {
  return trace_out(s, std::span<const std::size_t>(modes.begin(), modes.size()));
}

/// Symplectic spectrum as the moduli of the eigenvalues of i*Omega*V.
/// The eigenvalues come in +/- pairs; after sorting the moduli every second
/// entry is kept. Sorted ascending, with multiplicity.
inline std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& cov) {
  if (cov.rows() == 0 || cov.rows() != cov.cols() || cov.rows() % 2 != 0)
    throw std::invalid_argument("symplectic_eigenvalues: covariance must be 2N x 2N");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("symplectic_eigenvalues: covariance is not symmetric");
  const auto n = static_cast<std::size_t>(cov.rows() / 2);
  // Omega*V is real; its eigenvalues are +/- i nu, so |eig(i Omega V)| = |eig(Omega V)|.
  const Eigen::MatrixXd ov = symplectic_form(n) * cov;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(ov, false);
  if (solver.info() != Eigen::Success) throw std::runtime_error("symplectic_eigenvalues: eigensolver failed");
  std::vector<double> moduli;
  moduli.reserve(2 * n);
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) moduli.push_back(std::abs(solver.eigenvalues()(k)));
  std::sort(moduli.begin(), moduli.end());
  std::vector<double> nu;
  nu.reserve(n);
  for (std::size_t k = 0; k < n; ++k) nu.push_back(0.5 * (moduli[2 * k] + moduli[2 * k + 1]));
  return nu;
}

inline bool is_physical(const GaussianState& s, double tol = kPhysicalityTol) {
  const auto nu = symplectic_eigenvalues(s.cov());
  return std::all_of(nu.begin(), nu.end(), [tol](double v) { return v >= 1.0 - tol; });
}

}  // namespace cvdiv
