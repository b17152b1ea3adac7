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

// Command execution behind the cvdiv executable: builds the channel,
// runs the requested computation and writes CSV plus diagnostics.

#include "cvdiv/channel.hpp"
#include "cvdiv/config.hpp"
#include "cvdiv/entanglement.hpp"
#include "cvdiv/fidelity.hpp"
#include "cvdiv/io.hpp"
#include "cvdiv/phase_screen.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cvdiv {

struct ResolvedChannel {
  std::string label;
  ChannelSampler sampler;
  ChannelStatistics stats;
  std::optional<EnsembleResult> ensemble;
};

inline ResolvedChannel build_channel(const RunConfig& rc, unsigned threads) {
  if (rc.model == "lognormal") {
    return {rc.label, lognormal_sampler(rc.lognormal, rc.eps_tx), lognormal_moments(rc.lognormal, rc.eps_tx), {}};
  }
  if (rc.model == "fixed") {
    const double t = rc.fixed_transmissivity;
    const std::vector<double> one{t};
    return {rc.label, fixed_sampler(realization_from_tx_noise(t, rc.eps_tx)), compute_stats(one, rc.eps_tx), {}};
  }
  if (rc.model == "empirical") {
    const TransmissivityTable table = read_transmissivity_file(rc.empirical_path);
    std::vector<double> pooled;
    for (const auto& c : table.columns) pooled.insert(pooled.end(), c.begin(), c.end());
    const ChannelStatistics st = compute_stats(pooled, rc.eps_tx);
    if (table.multi_column) return {rc.label, column_sampler(table.columns, rc.eps_tx), st, {}};
    return {rc.label, empirical_sampler(EmpiricalChannel{table.columns[0], rc.eps_tx}), st, {}};
  }
  EnsembleResult ens = run_ensemble(rc.uplink, rc.ensemble_size, rc.seed, threads);
  const ChannelStatistics st = ens.channel.stats();
  ChannelSampler sampler = empirical_sampler(ens.channel);
  return {rc.label, std::move(sampler), st, std::move(ens)};
}

inline std::string config_comment(const RunConfig& rc) { return "# config: " + rc.resolved.dump() + "\n"; }

inline std::string default_output(Command c) {
  return "cvdiv-" + command_name(c) + (c == Command::phase_screen ? ".txt" : ".csv");
}

namespace detail {
inline std::string csv_row(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  return s + "\n";
}
}  // namespace detail

inline std::string entanglement_csv(const RunConfig& rc, const std::vector<EntanglementResult>& rows) {
  std::string out = config_comment(rc);
  out += "theta_or_model,M,Vs,E_LN,E_LN_scaled,RCI,T_eff,var_sqrtT,mean_eps,n_samples,stderr_b\n";
  for (const auto& r : rows)
    out += detail::csv_row({r.label, std::to_string(r.M), format_number(r.vs), format_number(r.e_ln),
                            format_number(r.e_ln_scaled), format_number(r.rci), format_number(r.stats_used.T_eff()),
                            format_number(r.stats_used.var_sqrtT), format_number(r.stats_used.mean_eps),
                            std::to_string(r.n_samples), format_number(r.stderr_b)});
  return out;
}

inline std::string fidelity_csv(const RunConfig& rc, const std::vector<FidelityResult>& rows) {
  std::string out = config_comment(rc);
  out += "model,M,scheme,alpha_or_Vmod,F_avg,stderr,n_channel,n_alpha,seed\n";
  for (const auto& r : rows)
    out += detail::csv_row({r.label, std::to_string(r.M), r.scheme.name(), format_number(r.scheme.parameter()),
                            format_number(r.f_avg), format_number(r.standard_error), std::to_string(r.n_channel),
                            std::to_string(r.n_alpha), std::to_string(r.seed)});
  return out;
}

inline json diagnostics_json(const RunConfig& rc, const EnsembleResult& ens) {
  json slabs = json::array();
  for (const auto& s : ens.plan.slabs)
    slabs.push_back({{"h_lo_m", s.h_lo},
                     {"h_hi_m", s.h_hi},
                     {"screen_position_m", s.position},
                     {"cn2_integral", s.cn2_integral},
                     {"fried_m", s.fried},
                     {"rytov", s.rytov}});
  const auto& u = rc.uplink;
  return {{"config", rc.resolved},
          {"grid", {{"n", u.grid.n}, {"dx_m", u.grid.dx}, {"width_m", u.grid.width()},
                    {"max_step_m", u.grid.max_step(u.beam.wavelength)}}},
          {"slant_length_m", u.geometry.slant_length()},
          {"diffraction_loss_db", ens.diffraction_loss_db},
          {"analytic_diffraction_loss_db", transmissivity_to_db(u.beam.collected_fraction(u.geometry.slant_length()))},
          {"n_screens", ens.plan.slabs.size()},
          {"total_cn2_integral", ens.plan.total_cn2_integral},
          {"total_fried_m", ens.plan.total_fried},
          {"total_rytov", ens.plan.total_rytov},
          {"slabs", slabs},
          {"warnings", ens.plan.warnings},
          {"n_realizations", ens.channel.samples.size()},
          {"mean_loss_db", ens.loss.mean_db},
          {"fading_db", ens.loss.stddev_db},
          {"min_loss_db", ens.loss.min_db},
          {"max_loss_db", ens.loss.max_db}};
}

/// Runs one resolved configuration. Files are written atomically; a short
/// summary goes to `log`.
inline void run(const RunConfig& rc, unsigned threads, std::ostream& log) {
  const std::string out_path = rc.output.empty() ? default_output(rc.command) : rc.output;
  switch (rc.command) {
    case Command::channel_stats: {
      const ResolvedChannel ch = build_channel(rc, threads);
      std::string csv = config_comment(rc);
      csv += "model,source,n_samples,mean_T,mean_sqrtT,var_sqrtT,T_eff,mean_eps,mean_loss_db,fading_db\n";
      auto row = [&](const std::string& source, const ChannelStatistics& st, double mean_db, double fading_db) {
        csv += detail::csv_row({ch.label, source, std::to_string(st.n_samples), format_number(st.mean_T),
                                format_number(st.mean_sqrtT), format_number(st.var_sqrtT), format_number(st.T_eff()),
                                format_number(st.mean_eps), format_number(mean_db), format_number(fading_db)});
        log << source << ": <T>=" << format_number(st.mean_T, 6) << " <sqrtT>=" << format_number(st.mean_sqrtT, 6)
            << " Var[sqrtT]=" << format_number(st.var_sqrtT, 6) << " loss " << format_number(mean_db, 5) << " dB +- "
            << format_number(fading_db, 4) << " dB\n";
      };
      std::vector<double> samples;
      if (rc.model == "lognormal") {
        samples.reserve(rc.n_realizations);
        for (std::size_t r = 0; r < rc.n_realizations; ++r) samples.push_back(ch.sampler(1, r, rc.seed)[0].transmissivity);
      } else if (ch.ensemble) {
        samples = ch.ensemble->channel.samples;
      } else if (rc.model == "empirical") {
        for (const auto& c : read_transmissivity_file(rc.empirical_path).columns)
          samples.insert(samples.end(), c.begin(), c.end());
      } else {
        samples = {rc.fixed_transmissivity};
      }
      const LossStatisticsDb loss = loss_statistics_dB(samples);
      row("sampled", compute_stats(samples, rc.eps_tx), loss.mean_db, loss.stddev_db);
      if (rc.model == "lognormal") {
        ChannelStatistics exact = ch.stats;
        exact.n_samples = 0;
        row("exact", exact, rc.lognormal.mean_db, rc.lognormal.stddev_db);
      }
      atomic_write(out_path, csv);
      break;
    }
    case Command::ent_sweep: {
      ResolvedChannel ch = build_channel(rc, threads);
      EntanglementSweep sw;
      sw.label = ch.label;
      sw.vs = rc.vs;
      sw.m = rc.m;
      sw.stats = ch.stats;
      sw.layout = rc.layout;
      sw.seed = rc.seed;
      sw.n_samples = rc.n_realizations;
      if (rc.monte_carlo) sw.sampler = ch.sampler;
      const auto rows = sweep_entanglement(sw, threads);
      atomic_write(out_path, entanglement_csv(rc, rows));
      log << "ent-sweep " << ch.label << ": " << rows.size() << " rows, T_eff=" << format_number(ch.stats.T_eff(), 6)
          << " Var[sqrtT]=" << format_number(ch.stats.var_sqrtT, 6) << "\n";
      for (const auto& r : rows)
        if (!r.physical) log << "warning: averaged CM at M=" << r.M << ", Vs=" << r.vs << " fails the physicality check\n";
      break;
    }
    case Command::fid_sweep: {
      ResolvedChannel ch = build_channel(rc, threads);
      FidelitySweep sw;
      sw.label = ch.label;
      sw.sampler = ch.sampler;
      sw.mean_sqrtT = ch.stats.mean_sqrtT;
      sw.m = rc.m;
      sw.schemes = rc.schemes;
      sw.sampling = {rc.n_realizations, rc.n_alpha, rc.seed};
      sw.layout = rc.layout;
      const auto rows = sweep_fidelity(sw, threads);
      atomic_write(out_path, fidelity_csv(rc, rows));
      log << "fid-sweep " << ch.label << ": " << rows.size() << " rows, <sqrtT>="
          << format_number(ch.stats.mean_sqrtT, 6) << "\n";
      break;
    }
    case Command::phase_screen: {
      const EnsembleResult ens = run_ensemble(rc.uplink, rc.ensemble_size, rc.seed, threads);
      const std::vector<std::string> comments = {
          "config: " + rc.resolved.dump(),
          "mean_loss_db " + format_number(ens.loss.mean_db) + ", fading_db " + format_number(ens.loss.stddev_db)};
      atomic_write(out_path, format_transmissivity_samples(ens.channel.samples, comments));
      atomic_write(out_path + ".diagnostics.json", diagnostics_json(rc, ens).dump(2) + "\n");
      log << "phase-screen " << rc.label << ": " << ens.channel.samples.size() << " realizations, mean loss "
          << format_number(ens.loss.mean_db, 5) << " dB, fading " << format_number(ens.loss.stddev_db, 4)
          << " dB, diffraction only " << format_number(ens.diffraction_loss_db, 5) << " dB\n";
      for (const auto& w : ens.plan.warnings) log << "warning: " << w << "\n";
      break;
    }
  }
  log << "wrote " << out_path << "\n";
}

}  // namespace cvdiv
