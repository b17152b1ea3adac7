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

// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number.

#include "cvdiv/cvdiv.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

using namespace cvdiv;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

ChannelStatistics two_point(double t_lo, double p_lo, double eps_tx) {
  ChannelStatistics st;
  const double s = p_lo * std::sqrt(t_lo) + (1 - p_lo);
  st.mean_T = p_lo * t_lo + (1 - p_lo);
  st.mean_sqrtT = s;
  st.var_sqrtT = st.mean_T - s * s;
  st.mean_eps = st.mean_T * eps_tx;
  return st;
}

/// Fidelity of a single-mode Gaussian state with a pure Gaussian state,
/// 2 / sqrt(det(V1 + V2)) exp(-d^T (V1 + V2)^-1 d / 2).
double gaussian_overlap(const GaussianState& x, const GaussianState& pure) {
  const Eigen::Matrix2d s = x.cov() + pure.cov();
  const Eigen::Vector2d d = x.mean() - pure.mean();
  return 2.0 / std::sqrt(s.determinant()) * std::exp(-0.5 * d.dot(s.inverse() * d));
}

Outcome diffraction_budget() {
  Outcome o;
  const std::vector<std::pair<double, double>> cases{{0.0, 27.2}, {30.0, 28.4}, {45.0, 30.2}};
  for (const auto& [z, target] : cases) {
    UplinkScenario sc;
    sc.geometry.zenith = deg(z);
    sc.turbulence = false;
    const double loss = transmissivity_to_db(UplinkModel(sc).transmissivity(0, 1));
    const bool ok = std::abs(loss - target) <= 0.2;
    o.pass = o.pass && ok;
    o.detail += fmt("%.0fdeg ", z) + fmt("%.3f dB ", loss) + fmt("(target %.1f) ", target);
  }
  return o;
}

Outcome turbulent_statistics() {
  Outcome o;
  struct Case {
    double zenith, mean, std;
  };
  const std::vector<Case> cases{{0.0, 35.2, 5.8}, {30.0, 37.6, 6.2}, {45.0, 40.4, 6.4}};
  const unsigned threads = resolve_threads(0);
  for (const auto& c : cases) {
    UplinkScenario sc;
    sc.geometry.zenith = deg(c.zenith);
    const auto t0 = std::chrono::steady_clock::now();
    const EnsembleResult ens = run_ensemble(sc, 1000, 1, threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& l = ens.loss;
    double m3 = 0.0;
    for (double t : ens.channel.samples) m3 += std::pow(transmissivity_to_db(t) - l.mean_db, 3);
    const double skew = m3 / static_cast<double>(ens.channel.samples.size()) / std::pow(l.stddev_db, 3);
    const bool mean_ok = std::abs(l.mean_db - c.mean) <= 1.5;
    const bool std_ok = std::abs(l.stddev_db - c.std) <= 1.0;
    const bool shape_ok = skew > 0.0 && l.max_db > l.mean_db + 20.0;
    o.pass = o.pass && mean_ok && std_ok && shape_ok;
    o.detail += fmt("%.0fdeg: ", c.zenith) + fmt("mean %.2f", l.mean_db) + fmt("/%.1f", c.mean) +
                (mean_ok ? "" : "(out)") + fmt(" std %.2f", l.stddev_db) + fmt("/%.1f", c.std) +
                (std_ok ? "" : "(out)") + fmt(" skew %.2f", skew) + fmt(" max-mean %.1f", l.max_db - l.mean_db) +
                (shape_ok ? "" : "(shape out)") + fmt(" [%.0fs]; ", secs);
    std::fflush(stdout);
  }
  return o;
}

Outcome analytic_vs_montecarlo() {
  Outcome o;
  const LogNormalLossModel model{3.0, 1.0};
  const auto stats = lognormal_moments(model);
  const auto sampler = lognormal_sampler(model);
  double worst = 0.0;
  for (std::size_t m = 1; m <= 4; ++m)
    for (double vs : {3.0, 9.0}) {
      const auto an = averaged_cm_analytic(vs, stats, m);
      const auto mc = averaged_cm_montecarlo(vs, sampler, equal_weight_tree(m), 3000, 1);
      const double zb = std::abs(mc.cm.b - an.b) / mc.standard_error.b;
      const double zc = std::abs(mc.cm.c - an.c) / mc.standard_error.c;
      worst = std::max({worst, zb, zc});
      if (mc.cm.a != an.a || zb > 3.0 || zc > 3.0) o.pass = false;
    }
  o.detail = "largest deviation " + fmt("%.2f standard errors over 8 cases", worst);
  return o;
}

Outcome pipeline_oracle() {
  Outcome o;
  RandomStream rng(2024, StreamKind::channel, 0, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng.below(6);
    std::vector<ChannelRealization> d(m);
    for (auto& r : d) r = {rng.uniform(), 0.1 * rng.uniform()};
    std::vector<double> etas(m - 1);
    for (auto& e : etas) e = rng.uniform();
    const auto tree = trial % 3 == 0   ? equal_weight_tree(m)
                      : trial % 3 == 1 ? tree_with_etas(etas, TreeLayout::balanced)
                                       : tree_with_etas(etas, TreeLayout::chain);
    const double vs = 1.0 + 29.0 * rng.uniform();
    const auto a = conditional_cm(vs, d, tree), b = conditional_cm_pipeline(vs, d, tree);
    worst = std::max({worst, std::abs(a.a - b.a), std::abs(a.b - b.b), std::abs(a.c - b.c)});
  }
  o.pass = worst <= 1e-10;
  o.detail = "max |diff| " + fmt("%.3g over 1000 draws", worst);
  return o;
}

Outcome lossless_identity() {
  Outcome o;
  double worst_cov = 0.0, worst_f = 0.0;
  for (std::size_t m = 1; m <= 8; ++m)
    for (auto layout : {TreeLayout::balanced, TreeLayout::chain}) {
      const auto tree = equal_weight_tree(m, layout);
      std::vector<std::size_t> modes(m);
      for (std::size_t p = 0; p < m; ++p) modes[p] = 1 + p;
      for (double vs : {1.0, 3.0, 9.0, 50.0}) {
        const GaussianState s = make_tmsv(vs);
        const GaussianState back = apply_combiner(split_equally(s, 1, tree), modes, tree);
        worst_cov = std::max(worst_cov, max_abs(back.cov() - s.cov()));
      }
      const std::vector<ChannelRealization> ideal(m, {1.0, 0.0});
      for (CoherentAmplitude a : {CoherentAmplitude{0.0, 0.0}, {1.0, -2.0}, {10.0, 0.0}, {-30.0, 40.0}}) {
        const GaussianState c = make_coherent(a);
        for (std::size_t p = 0; p < m; ++p) modes[p] = p;
        const GaussianState back = apply_combiner(split_equally(c, 0, tree), modes, tree);
        worst_cov = std::max({worst_cov, max_abs(back.cov() - c.cov()), (back.mean() - c.mean()).cwiseAbs().maxCoeff()});
        worst_f = std::max(worst_f, std::abs(1.0 - fidelity_closed_form(ideal, tree, a, 1.0)));
        worst_f = std::max(worst_f, std::abs(1.0 - gaussian_overlap(back, c)));
      }
    }
  o.pass = worst_cov <= 1e-12 && worst_f <= 1e-12;
  o.detail = "max state error " + fmt("%.3g", worst_cov) + ", max |1-F| " + fmt("%.3g", worst_f);
  return o;
}

Outcome closed_form_vs_oracle() {
  Outcome o;
  RandomStream rng(99, StreamKind::channel, 0, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng.below(4);
    std::vector<ChannelRealization> d(m);
    for (auto& r : d) r = {rng.uniform(), 0.1 * rng.uniform()};
    std::vector<double> etas(m - 1);
    for (auto& e : etas) e = rng.uniform();
    const auto tree = trial % 2 ? equal_weight_tree(m) : tree_with_etas(etas);
    const double mag = 60.0 * std::sqrt(rng.uniform()), ph = 2.0 * std::numbers::pi * rng.uniform();
    const CoherentAmplitude a{mag * std::cos(ph), mag * std::sin(ph)};
    const double ms = 0.5 + 0.5 * rng.uniform();
    worst = std::max(worst, std::abs(fidelity_closed_form(d, tree, a, ms) - fidelity_cf_oracle(d, tree, a, ms)));
  }
  o.pass = worst <= 1e-6;
  o.detail = "max |diff| " + fmt("%.3g over 1000 draws", worst);
  return o;
}

Outcome rescue_and_trends() {
  Outcome o;
  bool rescue = false;
  std::string where;
  for (double t_lo = 0.001; t_lo < 0.5 && !rescue; t_lo *= 1.5)
    for (double p = 0.05; p < 1.0 && !rescue; p += 0.05)
      for (double vs : {3.0, 5.0, 9.0}) {
        const auto st = two_point(t_lo, p, kDefaultExcessNoiseTx);
        if (log_negativity(averaged_cm_analytic(vs, st, 1)) == 0.0 &&
            log_negativity(averaged_cm_analytic(vs, st, 2)) > 0.0) {
          rescue = true;
          where = "T in {" + fmt("%.4g", t_lo) + ", 1}, P(low) " + fmt("%.2f", p) + ", Vs " + fmt("%.0f", vs);
          break;
        }
      }
  std::vector<ChannelStatistics> sets{lognormal_moments({3.0, 1.0}), lognormal_moments({35.2, 5.8}),
                                      lognormal_moments({37.6, 6.2}), lognormal_moments({40.4, 6.4}),
                                      two_point(0.1, 0.3, kDefaultExcessNoiseTx),
                                      two_point(0.02, 0.6, kDefaultExcessNoiseTx)};
  bool monotone = true;
  for (const auto& st : sets)
    for (double vs = 1.0; vs <= 30.0; vs += 0.5) {
      double pe = -1.0, pr = -1e300;
      for (std::size_t m = 1; m <= 8; ++m) {
        const auto cm = averaged_cm_analytic(vs, st, m);
        const double e = log_negativity(cm), r = rci(cm);
        if (e < pe - 1e-14 || r < pr - 1e-14) monotone = false;
        pe = e;
        pr = r;
      }
    }
  std::size_t interior = 0;
  for (const auto& st : sets)
    for (std::size_t m : {1, 2, 4, 8}) {
      std::vector<double> r;
      for (double vs = 1.0; vs <= 30.0 + 1e-9; vs += 0.25) r.push_back(rci(averaged_cm_analytic(vs, st, m)));
      std::size_t best = 0;
      for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i] > r[best]) best = i;
      if (best > 0 && best + 1 < r.size() && r[best] > 0.0) ++interior;
    }
  o.pass = rescue && monotone && interior > 0;
  o.detail = std::string("rescue ") + (rescue ? "at " + where : "not found") + "; monotone in M " +
             (monotone ? "yes" : "no") + "; interior RCI maximum in " + std::to_string(interior) + " of " +
             std::to_string(sets.size() * 4) + " (stats, M) sets";
  return o;
}

Outcome fidelity_trends() {
  Outcome o;
  const LogNormalLossModel model{3.0, 1.0};
  const auto sampler = lognormal_sampler(model);
  const double ms = lognormal_moments(model).mean_sqrtT;
  const FidelitySampling smp;
  const unsigned threads = resolve_threads(0);
  std::vector<ModulationScheme> bpsk, gauss;
  for (double a : {10.0, 20.0, 30.0, 40.0, 50.0}) bpsk.push_back(ModulationScheme::bpsk(a));
  for (double v : {2.0, 4.0, 6.0, 8.0, 10.0}) gauss.push_back(ModulationScheme::gaussian(v));
  std::size_t total = 0, failed_m = 0, failed_a = 0, failed_v = 0;
  double worst_m = 1e300;
  std::string sample;
  auto table = [&](const std::vector<ModulationScheme>& schemes) {
    std::vector<std::vector<FidelityResult>> t(4);
    for (std::size_t m = 1; m <= 4; ++m)
      for (const auto& s : schemes) t[m - 1].push_back(average_fidelity(s, sampler, equal_weight_tree(m), ms, smp, threads));
    return t;
  };
  auto z = [](const FidelityResult& hi, const FidelityResult& lo) {
    const double se = std::hypot(hi.standard_error, lo.standard_error);
    return se > 0.0 ? (hi.f_avg - lo.f_avg) / se : (hi.f_avg > lo.f_avg ? 1e300 : -1e300);
  };
  auto check = [&](const std::vector<std::vector<FidelityResult>>& t, std::size_t& failed_param) {
    for (std::size_t k = 0; k < t[0].size(); ++k)
      for (std::size_t m = 0; m + 1 < 4; ++m) {
        ++total;
        const double zz = z(t[m + 1][k], t[m][k]);
        worst_m = std::min(worst_m, zz);
        if (!(zz > 3.0)) ++failed_m;
      }
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t k = 0; k + 1 < t[m].size(); ++k) {
        ++total;
        if (!(z(t[m][k], t[m][k + 1]) > 3.0)) ++failed_param;
      }
  };
  const auto tb = table(bpsk), tg = table(gauss);
  check(tb, failed_a);
  check(tg, failed_v);
  o.pass = failed_m + failed_a + failed_v == 0;
  o.detail = std::to_string(total) + " comparisons; failing: M " + std::to_string(failed_m) + ", alpha " +
             std::to_string(failed_a) + ", V_mod " + std::to_string(failed_v) + fmt("; min z(M) %.3g", worst_m) +
             "; F_avg(M=1..4) at alpha=10: " + fmt("%.3g", tb[0][0].f_avg) + " " + fmt("%.3g", tb[1][0].f_avg) + " " +
             fmt("%.3g", tb[2][0].f_avg) + " " + fmt("%.3g", tb[3][0].f_avg) + ", at V_mod=2: " +
             fmt("%.4f", tg[0][0].f_avg) + " " + fmt("%.4f", tg[1][0].f_avg) + " " + fmt("%.4f", tg[2][0].f_avg) +
             " " + fmt("%.4f", tg[3][0].f_avg);
  return o;
}

Outcome combiner_weights() {
  Outcome o;
  double worst = 0.0;
  for (std::size_t m = 1; m <= 8; ++m)
    for (double w : combine_weights(equal_weight_tree(m)))
      worst = std::max(worst, std::abs(w - 1.0 / std::sqrt(static_cast<double>(m))));
  const auto t3 = equal_weight_tree(3);
  const double e1 = t3.etas()[t3.steps()[0].eta_index], e2 = t3.etas()[t3.steps()[1].eta_index];
  const bool printed = std::abs(e1 - 1.0 / std::sqrt(2.0)) < 1e-12 && std::abs(e2 - std::sqrt(2.0 / 3.0)) < 1e-12;
  o.pass = worst <= 1e-12 && printed;
  o.detail = "max |w - 1/sqrt(M)| " + fmt("%.3g", worst) + fmt("; M=3 etas %.12f", e1) + fmt(", %.12f", e2);
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + CVDIV_EXE + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "cvdiv_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  struct Job {
    std::string command, config, output;
  };
  const std::vector<Job> jobs{
      {"channel-stats",
       R"({"command":"channel-stats","channel":{"model":"lognormal","mean_db":3,"sigma_db":1},"sampling":{"n_realizations":5000,"seed":4}})",
       "cs.csv"},
      {"ent-sweep",
       R"({"command":"ent-sweep","channel":{"model":"lognormal","mean_db":3,"sigma_db":1},"diversity":{"M":[1,2,3,4]},"source":{"Vs_range":{"start":1,"stop":15,"step":1}},"sampling":{"method":"montecarlo","n_realizations":3000,"seed":4}})",
       "ent.csv"},
      {"fid-sweep",
       R"({"command":"fid-sweep","channel":{"model":"lognormal","mean_db":3,"sigma_db":1},"diversity":{"M":[1,2,3,4]},"source":{"scheme":"bpsk","alpha":[10,20,30,40,50]},"sampling":{"n_realizations":500,"n_alpha":50,"seed":4}})",
       "fid.csv"},
      {"phase-screen",
       R"({"command":"phase-screen","channel":{"model":"phasescreen","phasescreen":{"grid_n":256,"grid_dx_m":0.008,"aperture_samples":24,"n_realizations":6}},"sampling":{"seed":4}})",
       "ps.txt"},
  };
  for (const auto& j : jobs) {
    const fs::path cfg = dir / (j.command + ".json"), out = dir / j.output;
    atomic_write(cfg, j.config);
    std::vector<std::string> results;
    bool ran = true;
    for (int threads : {1, 1, 4}) {
      ran = ran && run_cli(j.command + " --config " + cfg.string() + " --out " + out.string() + " --threads " +
                           std::to_string(threads)) == 0;
      if (!ran) break;
      std::string text = read_text_file(out);
      if (j.command == "phase-screen") text += read_text_file(out.string() + ".diagnostics.json");
      results.push_back(text);
    }
    const bool same = ran && results.size() == 3 && results[0] == results[1] && results[0] == results[2];
    o.pass = o.pass && same;
    o.detail += j.command + (same ? " identical; " : (ran ? " DIFFERS; " : " failed to run; "));
  }
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, diffraction_budget},      {2, turbulent_statistics}, {3, analytic_vs_montecarlo},
      {4, pipeline_oracle},         {5, lossless_identity},    {6, closed_form_vs_oracle},
      {7, rescue_and_trends},       {8, fidelity_trends},      {9, combiner_weights},
      {10, cli_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d: %s %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
