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

// Split-step Fourier uplink model: a collimated Gaussian beam crosses a
// stack of von Karman phase screens and is collected by a circular
// aperture on the satellite.

#include "cvdiv/channel.hpp"
#include "cvdiv/errors.hpp"
#include "cvdiv/parallel.hpp"
#include "cvdiv/random.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

namespace cvdiv {

using cplx = std::complex<double>;

struct UplinkGeometry {
  double altitude = 500e3;  // m
  double zenith = 0.0;      // rad

  void validate() const {
    if (!(altitude > 0.0)) throw ConfigError("UplinkGeometry: altitude must be > 0");
    if (!(zenith >= 0.0 && zenith < std::numbers::pi / 2))
      throw ConfigError("UplinkGeometry: zenith angle must lie in [0, pi/2)");
  }
  double slant_length() const { return altitude / std::cos(zenith); }
};

struct BeamParams {
  double waist = 0.035;            // m
  double wavelength = 1064e-9;     // m
  double aperture_radius = 0.15;   // m

  void validate() const {
    if (!(waist > 0.0 && wavelength > 0.0 && aperture_radius > 0.0))
      throw ConfigError("BeamParams: waist, wavelength and aperture radius must be > 0");
    if (!(waist > 100.0 * wavelength)) throw ConfigError("BeamParams: waist must be much larger than the wavelength");
  }
  double wavenumber() const { return 2.0 * std::numbers::pi / wavelength; }
  double rayleigh_range() const { return std::numbers::pi * waist * waist / wavelength; }
  double radius_at(double z) const {
    const double q = z / rayleigh_range();
    return waist * std::sqrt(1.0 + q * q);
  }
  /// Diffraction-only collection efficiency 1 - exp(-2 r_a^2 / w(z)^2).
  double collected_fraction(double z) const {
    const double w = radius_at(z);
    return -std::expm1(-2.0 * aperture_radius * aperture_radius / (w * w));
  }
};

/// Hufnagel-Valley profile parameters. The ground wind speed has no role in
/// the static profile and is kept for reporting.
struct TurbulenceProfile {
  double ground_cn2 = 9.6e-14;  // m^(-2/3)
  double outer_scale = 5.0;     // m
  double inner_scale = 0.01;    // m
  double ground_wind = 3.0;     // m/s
  double rms_wind = 21.0;       // m/s

  void validate() const {
    if (!(ground_cn2 >= 0.0)) throw ConfigError("TurbulenceProfile: ground Cn2 must be >= 0");
    if (!(outer_scale > 0.0 && inner_scale > 0.0 && ground_wind > 0.0 && rms_wind > 0.0))
      throw ConfigError("TurbulenceProfile: scales and wind speeds must be > 0");
    if (!(inner_scale < outer_scale)) throw ConfigError("TurbulenceProfile: inner scale must be below outer scale");
  }
};

inline double cn2_profile(double h, const TurbulenceProfile& p) {
  if (h < 0.0) throw std::domain_error("cn2_profile: altitude must be >= 0");
  const double s = 1e-5 * h;
  const double s2 = s * s, s5 = s2 * s2 * s;
  return 0.00594 * (p.rms_wind / 27.0) * (p.rms_wind / 27.0) * s5 * s5 * std::exp(-h / 1000.0) +
         2.7e-16 * std::exp(-h / 1500.0) + p.ground_cn2 * std::exp(-h / 100.0);
}

struct GridSpec {
  std::size_t n = 512;  // points per side, power of two
  double dx = 4e-3;     // m

  void validate() const {
    if (n < 16 || (n & (n - 1)) != 0) throw ConfigError("GridSpec: n must be a power of two >= 16");
    if (!(dx > 0.0)) throw ConfigError("GridSpec: dx must be > 0");
  }
  double width() const { return static_cast<double>(n) * dx; }
  double coord(std::size_t i) const { return (static_cast<double>(i) - static_cast<double>(n / 2)) * dx; }
  /// Longest single angular-spectrum step, n dx^2 / lambda.
  double max_step(double wavelength) const { return static_cast<double>(n) * dx * dx / wavelength; }
};

/// n x n complex field, row-major with index (ix, iy).
struct FieldGrid {
  GridSpec grid;
  std::vector<cplx> values;

  explicit FieldGrid(GridSpec g) : grid(g), values(g.n * g.n) {}
  cplx& at(std::size_t ix, std::size_t iy) { return values[ix * grid.n + iy]; }
  cplx at(std::size_t ix, std::size_t iy) const { return values[ix * grid.n + iy]; }
  double power() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return s * grid.dx * grid.dx;
  }
};

/// Unit-power fundamental Gaussian with a flat phase front (waist at z = 0).
inline FieldGrid gaussian_beam_field(const BeamParams& beam, const GridSpec& g) {
  beam.validate();
  g.validate();
  if (g.width() < 6.0 * beam.waist) throw ConfigError("gaussian_beam_field: grid must span at least 6 waists");
  FieldGrid f(g);
  const double amp = std::sqrt(2.0 / std::numbers::pi) / beam.waist;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j) {
      const double r2 = g.coord(i) * g.coord(i) + g.coord(j) * g.coord(j);
      f.at(i, j) = amp * std::exp(-r2 / (beam.waist * beam.waist));
    }
  if (std::abs(f.power() - 1.0) > 1e-4) throw ConfigError("gaussian_beam_field: grid too coarse or too small");
  return f;
}

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// In-place 2D FFT on an aligned n x n buffer. Planning is serialized;
/// execution is thread safe.
class Fft2D {
 public:
  explicit Fft2D(std::size_t n) : n_(n) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * n));
    if (!buf_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    const int ni = static_cast<int>(n);
    fwd_ = fftw_plan_dft_2d(ni, ni, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(ni, ni, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2D() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  cplx* data() { return reinterpret_cast<cplx*>(buf_); }
  std::size_t n() const { return n_; }
  void forward() { fftw_execute(fwd_); }
  /// Unnormalized inverse.
  void backward() { fftw_execute(bwd_); }

 private:
  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

namespace detail {
inline double fft_freq(std::size_t i, const GridSpec& g) {
  const double k = i < g.n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(g.n);
  return k / g.width();
}

/// Angular-spectrum transfer exp(-i pi lambda dz f^2) applied in place.
inline void propagate_in_place(Fft2D& fft, const GridSpec& g, double dz, double wavelength) {
  const std::size_t n = g.n;
  cplx* d = fft.data();
  fft.forward();
  const double scale = 1.0 / static_cast<double>(n * n);
  std::vector<cplx> row(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double fy = fft_freq(j, g);
    row[j] = std::polar(scale, -std::numbers::pi * wavelength * dz * fy * fy);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double fx = fft_freq(i, g);
    const cplx rx = std::polar(1.0, -std::numbers::pi * wavelength * dz * fx * fx);
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] *= rx * row[j];
  }
  fft.backward();
}
}  // namespace detail

/// Paraxial angular-spectrum step. Throws when dz exceeds n dx^2 / lambda.
inline FieldGrid vacuum_propagate(const FieldGrid& field, double dz, const BeamParams& beam) {
  if (dz < 0.0) throw std::domain_error("vacuum_propagate: dz must be >= 0");
  if (dz == 0.0) return field;
  const GridSpec& g = field.grid;
  const double bound = g.max_step(beam.wavelength);
  if (dz > bound) {
    const double dx_needed = std::sqrt(dz * beam.wavelength / static_cast<double>(g.n));
    throw ConfigError("vacuum_propagate: step " + std::to_string(dz) + " m exceeds the sampling bound " +
                      std::to_string(bound) + " m; use dx >= " + std::to_string(dx_needed) +
                      " m or split the step");
  }
  Fft2D fft(g.n);
  std::copy(field.values.begin(), field.values.end(), fft.data());
  detail::propagate_in_place(fft, g, dz, beam.wavelength);
  FieldGrid out(g);
  std::copy(fft.data(), fft.data() + g.n * g.n, out.values.begin());
  return out;
}

/// Fresnel transform of `field` over distance z onto the separable output
/// grid xs x ys; returns |U|^2 row-major (ix, iy).
inline Eigen::MatrixXd fresnel_intensity(const FieldGrid& field, double z, double wavelength,
                                         const std::vector<double>& xs, const std::vector<double>& ys) {
  if (!(z > 0.0)) throw std::domain_error("fresnel_intensity: z must be > 0");
  const GridSpec& g = field.grid;
  const std::size_t n = g.n;
  const double k = 2.0 * std::numbers::pi / wavelength;
  Eigen::MatrixXcd gmat(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double r2 = g.coord(i) * g.coord(i) + g.coord(j) * g.coord(j);
      gmat(i, j) = field.at(i, j) * std::polar(1.0, k * r2 / (2.0 * z));
    }
  auto kernel = [&](const std::vector<double>& out) {
    Eigen::MatrixXcd e(out.size(), n);
    for (std::size_t a = 0; a < out.size(); ++a)
      for (std::size_t i = 0; i < n; ++i) e(a, i) = std::polar(1.0, -k * out[a] * g.coord(i) / z);
    return e;
  };
  const Eigen::MatrixXcd ex = kernel(xs), ey = kernel(ys);
  const Eigen::MatrixXcd u = ex * gmat * ey.transpose();
  const double scale = g.dx * g.dx / (wavelength * z);
  return (u.cwiseAbs2() * (scale * scale)).eval();
}

/// Modified von Karman phase PSD in rad^2 m^2, f in cycles per metre:
///   0.023 r0^(-5/3) exp(-f^2 / fm^2) / (f^2 + f0^2)^(11/6),
/// fm = 5.92 / (2 pi l0), f0 = 1 / L0.
inline double phase_psd(double f2, double r0, const TurbulenceProfile& p) {
  const double fm = 5.92 / (2.0 * std::numbers::pi * p.inner_scale);
  const double f0 = 1.0 / p.outer_scale;
  return 0.023 * std::pow(r0, -5.0 / 3.0) * std::exp(-f2 / (fm * fm)) / std::pow(f2 + f0 * f0, 11.0 / 6.0);
}

/// Fried parameter of a path-integrated Cn2, (0.423 k^2 int Cn2 dz)^(-3/5).
inline double fried_parameter(double cn2_integral, double wavelength) {
  const double k = 2.0 * std::numbers::pi / wavelength;
  return std::pow(0.423 * k * k * cn2_integral, -3.0 / 5.0);
}

/// Phase structure function of the screen spectrum,
/// 4 pi \int f PSD(f) (1 - J0(2 pi f r)) df.
inline double phase_structure_function(double r, double r0, const TurbulenceProfile& p) {
  const double fm = 5.92 / (2.0 * std::numbers::pi * p.inner_scale);
  const double fmax = 8.0 * fm;
  const std::size_t steps = 200000;
  // Substitution f = u^2 clusters nodes near the low-frequency peak.
  const double umax = std::sqrt(fmax), du = umax / static_cast<double>(steps);
  double sum = 0.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double u = (static_cast<double>(i) - 0.5) * du, f = u * u;
    sum += 2.0 * u * f * phase_psd(f * f, r0, p) * (1.0 - std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * f * r));
  }
  return 4.0 * std::numbers::pi * sum * du;
}

struct ScreenOptions {
  std::size_t min_screens = 10;
  double atmosphere_top = 20e3;  // m altitude
  double max_rytov = 0.1;
  int subharmonic_levels = 3;
};

/// One slab along the slant path and the screen that represents it.
struct ScreenSlab {
  double h_lo = 0.0, h_hi = 0.0;  // altitude bounds, m
  double position = 0.0;          // path distance of the screen, m
  double cn2_integral = 0.0;      // path-integrated Cn2, m^(1/3)
  double fried = 0.0;             // m
  double rytov = 0.0;             // plane-wave Rytov variance of the slab
};

struct ScreenPlan {
  std::vector<ScreenSlab> slabs;
  double total_cn2_integral = 0.0;
  double total_fried = 0.0;
  double total_rytov = 0.0;
  std::vector<std::string> warnings;
};

/// Equal-Cn2 slabs below the atmosphere top, bisected until each slab's
/// Rytov variance is under the limit. Screens sit at the Cn2-weighted
/// centroid of their slab.
inline ScreenPlan plan_screens(const UplinkGeometry& geo, const BeamParams& beam, const TurbulenceProfile& prof,
                               const ScreenOptions& opt, const GridSpec& grid) {
  geo.validate();
  beam.validate();
  prof.validate();
  if (opt.min_screens == 0) throw ConfigError("ScreenOptions: at least one screen is required");
  if (!(opt.max_rytov > 0.0)) throw ConfigError("ScreenOptions: Rytov limit must be > 0");
  const double top = std::min(opt.atmosphere_top, geo.altitude);
  const double sec = 1.0 / std::cos(geo.zenith);
  const double k = beam.wavenumber();

  constexpr std::size_t kNodes = 200001;
  const double dh = top / static_cast<double>(kNodes - 1);
  std::vector<double> cum(kNodes, 0.0), cum_h(kNodes, 0.0);
  double prev = cn2_profile(0.0, prof);
  for (std::size_t i = 1; i < kNodes; ++i) {
    const double h = dh * static_cast<double>(i);
    const double c = cn2_profile(h, prof);
    cum[i] = cum[i - 1] + 0.5 * (c + prev) * dh;
    cum_h[i] = cum_h[i - 1] + 0.5 * (c * h + prev * (h - dh)) * dh;
    prev = c;
  }
  auto interp = [&](const std::vector<double>& v, double h) {
    const double x = std::clamp(h / dh, 0.0, static_cast<double>(kNodes - 1));
    const std::size_t i = std::min(static_cast<std::size_t>(x), kNodes - 2);
    return v[i] + (x - static_cast<double>(i)) * (v[i + 1] - v[i]);
  };
  auto invert = [&](double target) {
    const auto it = std::lower_bound(cum.begin(), cum.end(), target);
    if (it == cum.begin()) return 0.0;
    if (it == cum.end()) return top;
    const std::size_t i = static_cast<std::size_t>(it - cum.begin());
    const double frac = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
    return dh * (static_cast<double>(i - 1) + frac);
  };
  auto rytov = [&](double a, double b) {
    const double integral = (interp(cum, b) - interp(cum, a)) * sec;
    const double dz = (b - a) * sec;
    return 1.23 * integral / dz * std::pow(k, 7.0 / 6.0) * std::pow(dz, 11.0 / 6.0);
  };

  ScreenPlan plan;
  plan.total_cn2_integral = cum.back() * sec;
  if (plan.total_cn2_integral <= 0.0) return plan;
  std::vector<std::pair<double, double>> pending, done;
  double lo = 0.0;
  for (std::size_t s = 1; s <= opt.min_screens; ++s) {
    const double hi = s == opt.min_screens ? top : invert(cum.back() * static_cast<double>(s) / opt.min_screens);
    pending.emplace_back(lo, hi);
    lo = hi;
  }
  while (!pending.empty()) {
    const auto [a, b] = pending.back();
    pending.pop_back();
    if (rytov(a, b) >= opt.max_rytov && (b - a) > 1.0) {
      const double mid = 0.5 * (a + b);
      pending.emplace_back(mid, b);
      pending.emplace_back(a, mid);
    } else {
      done.emplace_back(a, b);
    }
  }
  std::sort(done.begin(), done.end());
  for (const auto& [a, b] : done) {
    ScreenSlab sl;
    sl.h_lo = a;
    sl.h_hi = b;
    const double integral = interp(cum, b) - interp(cum, a);
    sl.cn2_integral = integral * sec;
    sl.position = (integral > 0.0 ? (interp(cum_h, b) - interp(cum_h, a)) / integral : 0.5 * (a + b)) * sec;
    sl.fried = fried_parameter(sl.cn2_integral, beam.wavelength);
    sl.rytov = rytov(a, b);
    if (sl.rytov >= opt.max_rytov)
      plan.warnings.push_back("slab at " + std::to_string(a) + " m exceeds the Rytov limit");
    plan.total_rytov += sl.rytov;
    plan.slabs.push_back(sl);
  }
  plan.total_fried = fried_parameter(plan.total_cn2_integral, beam.wavelength);
  if (grid.dx > prof.inner_scale)
    plan.warnings.push_back("grid spacing " + std::to_string(grid.dx) + " m does not resolve the inner scale");
  for (const auto& sl : plan.slabs)
    if (sl.fried < 2.0 * grid.dx)
      plan.warnings.push_back("screen at " + std::to_string(sl.position) + " m has r0 under two grid cells");
  return plan;
}

namespace detail {
/// Low-frequency correction: `levels` rings of 3 x 3 frequencies at
/// spacing 1 / (3^p D), real part, mean removed.
inline void add_subharmonics(std::vector<double>& phase, const GridSpec& g, double r0, const TurbulenceProfile& p,
                             int levels, RandomStream& rng) {
  const std::size_t n = g.n;
  std::vector<double> lo(n * n, 0.0);
  std::vector<cplx> ex(n), v(n);
  for (int lev = 1; lev <= levels; ++lev) {
    const double df = 1.0 / (std::pow(3.0, lev) * g.width());
    cplx c[3][3];
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b) {
        const double f2 = (a * a + b * b) * df * df;
        const double amp = (a == 0 && b == 0) ? 0.0 : std::sqrt(phase_psd(f2, r0, p)) * df;
        const double re = rng.normal(), im = rng.normal();
        c[a + 1][b + 1] = cplx(re, im) * amp;
      }
    for (int a = -1; a <= 1; ++a) {
      for (std::size_t j = 0; j < n; ++j) {
        cplx s = 0.0;
        for (int b = -1; b <= 1; ++b)
          s += c[a + 1][b + 1] * std::polar(1.0, 2.0 * std::numbers::pi * b * df * g.coord(j));
        v[j] = s;
      }
      for (std::size_t i = 0; i < n; ++i) ex[i] = std::polar(1.0, 2.0 * std::numbers::pi * a * df * g.coord(i));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) lo[i * n + j] += std::real(ex[i] * v[j]);
    }
  }
  double mean = 0.0;
  for (double x : lo) mean += x;
  mean /= static_cast<double>(n * n);
  for (std::size_t i = 0; i < n * n; ++i) phase[i] += lo[i] - mean;
}
}  // namespace detail

/// sqrt(PSD) * df at unit r0 on the FFT frequency grid, zero at DC.
inline std::vector<double> unit_screen_amplitude(const GridSpec& g, const TurbulenceProfile& p) {
  const std::size_t n = g.n;
  std::vector<double> amp(n * n);
  const double df = 1.0 / g.width();
  for (std::size_t i = 0; i < n; ++i) {
    const double fx = detail::fft_freq(i, g);
    for (std::size_t j = 0; j < n; ++j) {
      const double fy = detail::fft_freq(j, g);
      amp[i * n + j] = (i == 0 && j == 0) ? 0.0 : std::sqrt(phase_psd(fx * fx + fy * fy, 1.0, p)) * df;
    }
  }
  return amp;
}

/// Two independent screens with Fried parameters r0_a and r0_b from one
/// complex FFT (real and imaginary parts). r0 <= 0 or infinite gives a
/// zero screen. `unit_amp` comes from unit_screen_amplitude.
inline std::pair<std::vector<double>, std::vector<double>> make_phase_screen_pair(
    double r0_a, double r0_b, const GridSpec& g, const TurbulenceProfile& p, int subharmonic_levels,
    RandomStream& rng, Fft2D& fft, const std::vector<double>& unit_amp) {
  const std::size_t n = g.n, nn = n * n;
  auto active = [](double r0) { return r0 > 0.0 && std::isfinite(r0); };
  std::vector<double> a(nn, 0.0), b(nn, 0.0);
  if (!active(r0_a) && !active(r0_b)) return {a, b};
  // r0 enters as the scale factor r0^(-5/6).
  cplx* d = fft.data();
  for (std::size_t i = 0; i < nn; ++i) {
    const double re = rng.normal(), im = rng.normal();
    d[i] = cplx(re, im) * unit_amp[i];
  }
  fft.backward();
  const double sa = active(r0_a) ? std::pow(r0_a, -5.0 / 6.0) : 0.0;
  const double sb = active(r0_b) ? std::pow(r0_b, -5.0 / 6.0) : 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    a[i] = sa * d[i].real();
    b[i] = sb * d[i].imag();
  }
  if (subharmonic_levels > 0) {
    if (active(r0_a)) detail::add_subharmonics(a, g, r0_a, p, subharmonic_levels, rng);
    if (active(r0_b)) detail::add_subharmonics(b, g, r0_b, p, subharmonic_levels, rng);
  }
  return {a, b};
}

/// Single screen for a slab with path-integrated strength cn2_integral.
inline std::vector<double> make_phase_screen(double cn2_integral, const GridSpec& g, const BeamParams& beam,
                                             const TurbulenceProfile& p, RandomStream& rng,
                                             int subharmonic_levels = 3) {
  g.validate();
  if (cn2_integral < 0.0) throw std::domain_error("make_phase_screen: strength must be >= 0");
  if (cn2_integral == 0.0) return std::vector<double>(g.n * g.n, 0.0);
  Fft2D fft(g.n);
  return make_phase_screen_pair(fried_parameter(cn2_integral, beam.wavelength), 0.0, g, p, subharmonic_levels, rng,
                                fft, unit_screen_amplitude(g, p))
      .first;
}

struct UplinkScenario {
  UplinkGeometry geometry;
  BeamParams beam;
  TurbulenceProfile profile;
  GridSpec grid;
  ScreenOptions screens;
  bool turbulence = true;
  std::size_t aperture_samples = 48;
  double eps_tx = kDefaultExcessNoiseTx;
};

/// Per-run constants shared read-only by all realizations.
class UplinkModel {
 public:
  explicit UplinkModel(UplinkScenario sc)
      : sc_(std::move(sc)),
        plan_(plan_screens(sc_.geometry, sc_.beam, sc_.profile, sc_.screens, sc_.grid)),
        source_(gaussian_beam_field(sc_.beam, sc_.grid)) {
    if (sc_.aperture_samples < 4) throw ConfigError("UplinkScenario: aperture_samples must be >= 4");
    if (sc_.turbulence && !plan_.slabs.empty() && plan_.slabs.back().position >= sc_.geometry.slant_length())
      throw ConfigError("UplinkScenario: atmosphere extends beyond the satellite");
    const std::size_t n = sc_.grid.n;
    if (sc_.turbulence) unit_amp_ = unit_screen_amplitude(sc_.grid, sc_.profile);
    window_.resize(n * n);
    const double rw = 0.47 * sc_.grid.width();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double r = std::hypot(sc_.grid.coord(i), sc_.grid.coord(j)) / rw;
        window_[i * n + j] = std::exp(-std::pow(r, 16.0));
      }
    const std::size_t na = sc_.aperture_samples;
    const double ra = sc_.beam.aperture_radius, cell = 2.0 * ra / static_cast<double>(na);
    for (std::size_t a = 0; a < na; ++a) ap_coords_.push_back(-ra + (static_cast<double>(a) + 0.5) * cell);
    // Fraction of each cell inside the circle, from 8 x 8 sub-samples.
    ap_weights_ = Eigen::MatrixXd::Zero(na, na);
    constexpr int kSub = 8;
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t b = 0; b < na; ++b) {
        int inside = 0;
        for (int u = 0; u < kSub; ++u)
          for (int v = 0; v < kSub; ++v) {
            const double x = ap_coords_[a] + ((u + 0.5) / kSub - 0.5) * cell;
            const double y = ap_coords_[b] + ((v + 0.5) / kSub - 0.5) * cell;
            if (x * x + y * y <= ra * ra) ++inside;
          }
        ap_weights_(a, b) = cell * cell * inside / double(kSub * kSub);
      }
  }

  const UplinkScenario& scenario() const { return sc_; }
  const ScreenPlan& plan() const { return plan_; }

  /// Power collected by the aperture after a final vacuum hop of length z
  /// from `field`.
  double collect(const FieldGrid& field, double z) const {
    const Eigen::MatrixXd I = fresnel_intensity(field, z, sc_.beam.wavelength, ap_coords_, ap_coords_);
    return std::clamp(I.cwiseProduct(ap_weights_).sum(), 0.0, 1.0);
  }

  /// Transmissivity of realization `index`; screens draw from
  /// (seed, phase_screen, screen pair, index).
  double transmissivity(std::uint64_t index, std::uint64_t seed) const {
    const double length = sc_.geometry.slant_length();
    if (!sc_.turbulence || plan_.slabs.empty()) return collect(source_, length);
    const GridSpec& g = sc_.grid;
    const std::size_t nn = g.n * g.n;
    Fft2D fft(g.n);
    FieldGrid field = source_;
    double z = 0.0;
    std::vector<double> pending;
    for (std::size_t s = 0; s < plan_.slabs.size(); ++s) {
      if (s % 2 == 0) {
        RandomStream rng(seed, StreamKind::phase_screen, static_cast<std::uint32_t>(s / 2), index);
        const double r0b = s + 1 < plan_.slabs.size() ? plan_.slabs[s + 1].fried : 0.0;
        auto [a, b] = make_phase_screen_pair(plan_.slabs[s].fried, r0b, g, sc_.profile,
                                             sc_.screens.subharmonic_levels, rng, fft, unit_amp_);
        pending = std::move(b);
        propagate_to(field, fft, plan_.slabs[s].position - z);
        for (std::size_t i = 0; i < nn; ++i) field.values[i] *= std::polar(1.0, a[i]);
      } else {
        propagate_to(field, fft, plan_.slabs[s].position - z);
        for (std::size_t i = 0; i < nn; ++i) field.values[i] *= std::polar(1.0, pending[i]);
      }
      z = plan_.slabs[s].position;
    }
    return collect(field, length - z);
  }

 private:
  void propagate_to(FieldGrid& field, Fft2D& fft, double dz) const {
    if (dz <= 0.0) return;
    const GridSpec& g = sc_.grid;
    const std::size_t nn = g.n * g.n;
    const double bound = g.max_step(sc_.beam.wavelength);
    const int steps = static_cast<int>(std::ceil(dz / bound));
    std::copy(field.values.begin(), field.values.end(), fft.data());
    for (int s = 0; s < steps; ++s) {
      detail::propagate_in_place(fft, g, dz / steps, sc_.beam.wavelength);
      cplx* d = fft.data();
      for (std::size_t i = 0; i < nn; ++i) d[i] *= window_[i];
    }
    std::copy(fft.data(), fft.data() + nn, field.values.begin());
  }

  UplinkScenario sc_;
  ScreenPlan plan_;
  FieldGrid source_;
  std::vector<double> unit_amp_;
  std::vector<double> window_;
  std::vector<double> ap_coords_;
  Eigen::MatrixXd ap_weights_;
};

inline ChannelRealization simulate_uplink_T(const UplinkModel& model, std::uint64_t index, std::uint64_t seed) {
  return realization_from_tx_noise(model.transmissivity(index, seed), model.scenario().eps_tx);
}

struct EnsembleResult {
  EmpiricalChannel channel;
  LossStatisticsDb loss;
  ScreenPlan plan;
  double diffraction_loss_db = 0.0;
};

/// n independent realizations; sample i depends only on (seed, i).
inline EnsembleResult run_ensemble(const UplinkScenario& sc, std::size_t n, std::uint64_t seed,
                                   unsigned threads = 1) {
  if (n == 0) throw std::invalid_argument("run_ensemble: n must be >= 1");
  const UplinkModel model(sc);
  EnsembleResult out;
  out.plan = model.plan();
  out.channel.eps_tx = sc.eps_tx;
  out.channel.samples.resize(n);
  parallel_for(n, threads, [&](std::size_t i) { out.channel.samples[i] = model.transmissivity(i, seed); });
  UplinkScenario quiet = sc;
  quiet.turbulence = false;
  out.diffraction_loss_db = transmissivity_to_db(UplinkModel(quiet).transmissivity(0, seed));
  out.loss = loss_statistics_dB(out.channel.samples);
  return out;
}

}  // namespace cvdiv
