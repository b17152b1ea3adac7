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

// Run configuration: JSON schema validation and resolution into typed
// settings. The resolved form is itself a valid configuration with every
// default written out.

#include "cvdiv/channel.hpp"
#include "cvdiv/combining.hpp"
#include "cvdiv/errors.hpp"
#include "cvdiv/fidelity.hpp"
#include "cvdiv/io.hpp"
#include "cvdiv/phase_screen.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cvdiv {

using json = nlohmann::ordered_json;

enum class Command { channel_stats, ent_sweep, fid_sweep, phase_screen };

inline std::optional<Command> parse_command(const std::string& s) {
  if (s == "channel-stats") return Command::channel_stats;
  if (s == "ent-sweep") return Command::ent_sweep;
  if (s == "fid-sweep") return Command::fid_sweep;
  if (s == "phase-screen") return Command::phase_screen;
  return std::nullopt;
}

inline std::string command_name(Command c) {
  switch (c) {
    case Command::channel_stats: return "channel-stats";
    case Command::ent_sweep: return "ent-sweep";
    case Command::fid_sweep: return "fid-sweep";
    case Command::phase_screen: return "phase-screen";
  }
  return "";
}

struct RunConfig {
  Command command = Command::ent_sweep;
  std::string model;  // lognormal | empirical | phasescreen | fixed
  std::string label;
  double eps_tx = kDefaultExcessNoiseTx;
  LogNormalLossModel lognormal;
  std::string empirical_path;
  double fixed_transmissivity = 1.0;
  UplinkScenario uplink;
  std::size_t ensemble_size = 1000;

  std::vector<std::size_t> m;
  TreeLayout layout = TreeLayout::balanced;
  std::vector<double> vs;
  std::vector<ModulationScheme> schemes;

  bool monte_carlo = false;
  std::size_t n_realizations = 3000;
  std::size_t n_alpha = 200;
  std::uint64_t seed = 1;
  std::string output;

  json resolved;
};

namespace detail {

class Checker {
 public:
  std::vector<std::string> violations;

  void add(const std::string& msg) { violations.push_back(msg); }

  /// Reports keys of `obj` outside `allowed`.
  void keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) add(where + "." + it.key() + " is not a recognised key");
  }

  const json* object(const json& parent, const std::string& key, const std::string& where, bool required) {
    if (!parent.contains(key)) {
      if (required) add(where + key + " is required");
      return nullptr;
    }
    const json& v = parent.at(key);
    if (!v.is_object()) {
      add(where + key + " must be an object");
      return nullptr;
    }
    return &v;
  }

  std::optional<double> number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      add(where + "." + key + " must be a finite number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::int64_t> integer(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      add(where + "." + key + " must be an integer");
      return std::nullopt;
    }
    return v.get<std::int64_t>();
  }

  std::optional<std::string> string(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      add(where + "." + key + " must be a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<bool> boolean(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      add(where + "." + key + " must be true or false");
      return std::nullopt;
    }
    return v.get<bool>();
  }

  /// A number or a list of numbers.
  std::optional<std::vector<double>> numbers(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    std::vector<double> out;
    auto push = [&](const json& x) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        add(where + "." + key + " must be a number or a list of numbers");
        return false;
      }
      out.push_back(x.get<double>());
      return true;
    };
    if (v.is_array()) {
      for (const auto& x : v)
        if (!push(x)) return std::nullopt;
    } else if (!push(v)) {
      return std::nullopt;
    }
    return out;
  }
};

inline std::string cmd_of(const json& cfg) {
  return cfg.contains("command") && cfg.at("command").is_string() ? cfg.at("command").get<std::string>() : "";
}

struct PhaseScreenKey {
  const char* key;
  double fallback;
  bool positive;
};

inline const std::vector<PhaseScreenKey>& phase_screen_numeric_keys() {
  static const std::vector<PhaseScreenKey> keys = {
      {"zenith_deg", 0.0, false},          {"altitude_m", 500e3, true},      {"waist_m", 0.035, true},
      {"wavelength_m", 1064e-9, true},     {"aperture_radius_m", 0.15, true}, {"ground_cn2", 9.6e-14, false},
      {"outer_scale_m", 5.0, true},        {"inner_scale_m", 0.01, true},     {"ground_wind_mps", 3.0, true},
      {"rms_wind_mps", 21.0, true},        {"grid_dx_m", 4e-3, true},         {"atmosphere_top_m", 20e3, true},
      {"max_rytov", 0.1, true},
  };
  return keys;
}

struct PhaseScreenIntKey {
  const char* key;
  std::int64_t fallback;
  std::int64_t minimum;
};

inline const std::vector<PhaseScreenIntKey>& phase_screen_integer_keys() {
  static const std::vector<PhaseScreenIntKey> keys = {
      {"grid_n", 512, 16},        {"min_screens", 10, 1},      {"subharmonic_levels", 3, 0},
      {"aperture_samples", 48, 4}, {"n_realizations", 1000, 1},
  };
  return keys;
}

}  // namespace detail

/// Every schema violation in `cfg` as a readable message; empty means the
/// configuration can run as `command`. Never throws.
inline std::vector<std::string> validate(const json& cfg, std::optional<Command> command = std::nullopt) {
  detail::Checker ck;
  try {
    if (!cfg.is_object()) return {"configuration must be a JSON object"};
    ck.keys(cfg, "config", {"command", "channel", "diversity", "source", "sampling", "output"});
    if (cfg.contains("command")) {
      const auto c = ck.string(cfg, "command", "config");
      if (c && !parse_command(*c)) ck.add("command must be one of channel-stats, ent-sweep, fid-sweep, phase-screen");
      if (c && command && parse_command(*c) && *parse_command(*c) != *command)
        ck.add("command '" + *c + "' does not match the requested command '" + command_name(*command) + "'");
    }
    std::optional<Command> cmd = command;
    if (!cmd && cfg.contains("command") && cfg.at("command").is_string()) cmd = parse_command(detail::cmd_of(cfg));
    if (!cmd) ck.add("command is required (in the file or on the command line)");

    std::string model;
    if (const json* ch = ck.object(cfg, "channel", "", true)) {
      ck.keys(*ch, "channel",
              {"model", "label", "eps_tx", "mean_db", "sigma_db", "path", "transmissivity", "phasescreen"});
      const auto m = ck.string(*ch, "model", "channel");
      if (!m) {
        if (!ch->contains("model")) ck.add("channel.model is required");
      } else if (*m != "lognormal" && *m != "empirical" && *m != "phasescreen" && *m != "fixed") {
        ck.add("channel.model must be one of lognormal, empirical, phasescreen, fixed");
      } else {
        model = *m;
      }
      ck.string(*ch, "label", "channel");
      if (auto e = ck.number(*ch, "eps_tx", "channel"); e && *e < 0.0) ck.add("channel.eps_tx must be >= 0");
      auto only_for = [&](const char* key, const std::string& owner) {
        if (ch->contains(key) && !model.empty() && model != owner)
          ck.add(std::string("channel.") + key + " is only used by model " + owner);
      };
      only_for("mean_db", "lognormal");
      only_for("sigma_db", "lognormal");
      only_for("path", "empirical");
      only_for("transmissivity", "fixed");
      only_for("phasescreen", "phasescreen");
      if (model == "lognormal") {
        const auto mu = ck.number(*ch, "mean_db", "channel");
        const auto sd = ck.number(*ch, "sigma_db", "channel");
        if (!ch->contains("mean_db")) ck.add("channel.mean_db is required for model lognormal");
        if (!ch->contains("sigma_db")) ck.add("channel.sigma_db is required for model lognormal");
        if (mu && !(*mu > 0.0)) ck.add("channel.mean_db must be > 0");
        if (sd && !(*sd >= 0.0)) ck.add("channel.sigma_db must be >= 0");
      } else if (model == "empirical") {
        if (!ck.string(*ch, "path", "channel") && !ch->contains("path"))
          ck.add("channel.path is required for model empirical");
      } else if (model == "fixed") {
        const auto t = ck.number(*ch, "transmissivity", "channel");
        if (!ch->contains("transmissivity")) ck.add("channel.transmissivity is required for model fixed");
        if (t && !(*t > 0.0 && *t <= 1.0)) ck.add("channel.transmissivity must lie in (0, 1]");
        const double eps = ch->contains("eps_tx") && ch->at("eps_tx").is_number() ? ch->at("eps_tx").get<double>()
                                                                                  : kDefaultExcessNoiseTx;
        if (t && *t >= 1.0 && eps > 0.0) ck.add("channel.transmissivity = 1 requires channel.eps_tx = 0");
      } else if (model == "phasescreen") {
        if (const json* ps = ck.object(*ch, "phasescreen", "channel.", false)) {
          std::set<std::string> allowed = {"turbulence"};
          for (const auto& k : detail::phase_screen_numeric_keys()) allowed.insert(k.key);
          for (const auto& k : detail::phase_screen_integer_keys()) allowed.insert(k.key);
          ck.keys(*ps, "channel.phasescreen", allowed);
          for (const auto& k : detail::phase_screen_numeric_keys()) {
            const auto v = ck.number(*ps, k.key, "channel.phasescreen");
            if (v && k.positive && !(*v > 0.0)) ck.add(std::string("channel.phasescreen.") + k.key + " must be > 0");
            if (v && !k.positive && !(*v >= 0.0))
              ck.add(std::string("channel.phasescreen.") + k.key + " must be >= 0");
          }
          for (const auto& k : detail::phase_screen_integer_keys()) {
            const auto v = ck.integer(*ps, k.key, "channel.phasescreen");
            if (v && *v < k.minimum)
              ck.add(std::string("channel.phasescreen.") + k.key + " must be >= " + std::to_string(k.minimum));
          }
          if (auto z = ck.number(*ps, "zenith_deg", "channel.phasescreen"); z && !(*z < 90.0))
            ck.add("channel.phasescreen.zenith_deg must be below 90");
          if (auto n = ck.integer(*ps, "grid_n", "channel.phasescreen"); n && (*n & (*n - 1)) != 0)
            ck.add("channel.phasescreen.grid_n must be a power of two");
          const double l0 = ps->contains("inner_scale_m") && ps->at("inner_scale_m").is_number()
                                ? ps->at("inner_scale_m").get<double>()
                                : 0.01;
          const double lo = ps->contains("outer_scale_m") && ps->at("outer_scale_m").is_number()
                                ? ps->at("outer_scale_m").get<double>()
                                : 5.0;
          if (!(l0 < lo)) ck.add("channel.phasescreen.inner_scale_m must be below outer_scale_m");
          ck.boolean(*ps, "turbulence", "channel.phasescreen");
        }
      }
    }
    if (cmd == Command::phase_screen && !model.empty() && model != "phasescreen")
      ck.add("command phase-screen requires channel.model = phasescreen");

    const bool sweep = cmd == Command::ent_sweep || cmd == Command::fid_sweep;
    if (const json* dv = ck.object(cfg, "diversity", "", sweep)) {
      ck.keys(*dv, "diversity", {"M", "layout"});
      if (!dv->contains("M")) {
        ck.add("diversity.M is required");
      } else {
        const json& mv = dv->at("M");
        const json list = mv.is_array() ? mv : json::array({mv});
        for (const auto& x : list) {
          if (!x.is_number_integer()) {
            ck.add("diversity.M must be an integer or a list of integers");
            break;
          }
          if (x.get<std::int64_t>() < 1) {
            ck.add("diversity.M must be >= 1");
            break;
          }
        }
      }
      if (auto l = ck.string(*dv, "layout", "diversity"); l && *l != "balanced" && *l != "chain")
        ck.add("diversity.layout must be balanced or chain");
    }

    if (const json* src = ck.object(cfg, "source", "", sweep)) {
      if (cmd == Command::fid_sweep) {
        ck.keys(*src, "source", {"scheme", "alpha", "P0", "V_mod"});
        const auto scheme = ck.string(*src, "scheme", "source");
        if (!src->contains("scheme")) ck.add("source.scheme is required (bpsk or gaussian)");
        if (scheme == "bpsk") {
          const auto a = ck.numbers(*src, "alpha", "source");
          if (!src->contains("alpha")) ck.add("source.alpha is required for scheme bpsk");
          if (a)
            for (double x : *a)
              if (!(x > 0.0)) {
                ck.add("source.alpha entries must be > 0");
                break;
              }
          if (auto p = ck.number(*src, "P0", "source"); p && !(*p >= 0.0 && *p <= 1.0))
            ck.add("source.P0 must lie in [0, 1]");
          if (src->contains("V_mod")) ck.add("source.V_mod is only used by scheme gaussian");
        } else if (scheme == "gaussian") {
          const auto v = ck.numbers(*src, "V_mod", "source");
          if (!src->contains("V_mod")) ck.add("source.V_mod is required for scheme gaussian");
          if (v)
            for (double x : *v)
              if (!(x > 0.0)) {
                ck.add("source.V_mod entries must be > 0");
                break;
              }
          if (src->contains("alpha") || src->contains("P0")) ck.add("source.alpha and source.P0 are only used by scheme bpsk");
        } else if (scheme) {
          ck.add("source.scheme must be bpsk or gaussian");
        }
      } else {
        ck.keys(*src, "source", {"Vs", "Vs_range"});
        const bool has_list = src->contains("Vs"), has_range = src->contains("Vs_range");
        if (has_list == has_range && cmd == Command::ent_sweep)
          ck.add("source needs exactly one of Vs or Vs_range");
        if (auto v = ck.numbers(*src, "Vs", "source"))
          for (double x : *v)
            if (!(x >= 1.0)) {
              ck.add("source.Vs must be >= 1 (got " + format_number(x) + ")");
              break;
            }
        if (const json* r = ck.object(*src, "Vs_range", "source.", false)) {
          ck.keys(*r, "source.Vs_range", {"start", "stop", "step"});
          const auto a = ck.number(*r, "start", "source.Vs_range");
          const auto b = ck.number(*r, "stop", "source.Vs_range");
          const auto s = ck.number(*r, "step", "source.Vs_range");
          if (!a || !b || !s) ck.add("source.Vs_range needs numeric start, stop and step");
          if (a && !(*a >= 1.0)) ck.add("source.Vs_range.start must be >= 1");
          if (s && !(*s > 0.0)) ck.add("source.Vs_range.step must be > 0");
          if (a && b && !(*b >= *a)) ck.add("source.Vs_range.stop must be >= start");
          if (a && b && s && *s > 0.0 && (*b - *a) / *s > 1e6) ck.add("source.Vs_range has too many points");
        }
      }
    }

    if (const json* smp = ck.object(cfg, "sampling", "", false)) {
      ck.keys(*smp, "sampling", {"n_realizations", "n_alpha", "seed", "method"});
      if (auto n = ck.integer(*smp, "n_realizations", "sampling"); n && *n < 1)
        ck.add("sampling.n_realizations must be >= 1");
      if (auto n = ck.integer(*smp, "n_alpha", "sampling"); n && *n < 1) ck.add("sampling.n_alpha must be >= 1");
      if (smp->contains("seed")) {
        const json& s = smp->at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
          ck.add("sampling.seed must be a non-negative integer");
      }
      if (auto m = ck.string(*smp, "method", "sampling"); m && *m != "analytic" && *m != "montecarlo")
        ck.add("sampling.method must be analytic or montecarlo");
    }

    if (const json* out = ck.object(cfg, "output", "", false)) {
      ck.keys(*out, "output", {"path"});
      ck.string(*out, "path", "output");
    }
  } catch (const std::exception& e) {
    ck.add(std::string("configuration could not be inspected: ") + e.what());
  }
  return ck.violations;
}

/// Typed settings with defaults applied. Throws ConfigError listing the
/// violations when `cfg` is invalid.
inline RunConfig resolve(const json& cfg, std::optional<Command> command = std::nullopt) {
  const auto problems = validate(cfg, command);
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  RunConfig rc;
  rc.command = command ? *command : *parse_command(cfg.at("command").get<std::string>());

  const json& ch = cfg.at("channel");
  rc.model = ch.at("model").get<std::string>();
  rc.eps_tx = ch.value("eps_tx", kDefaultExcessNoiseTx);
  json rch = {{"model", rc.model}};
  if (rc.model == "lognormal") {
    rc.lognormal = {ch.at("mean_db").get<double>(), ch.at("sigma_db").get<double>()};
    rc.label = "lognormal(" + format_number(rc.lognormal.mean_db) + "," + format_number(rc.lognormal.stddev_db) + ")";
    rch["mean_db"] = rc.lognormal.mean_db;
    rch["sigma_db"] = rc.lognormal.stddev_db;
  } else if (rc.model == "empirical") {
    rc.empirical_path = ch.at("path").get<std::string>();
    rc.label = "empirical";
    rch["path"] = rc.empirical_path;
  } else if (rc.model == "fixed") {
    rc.fixed_transmissivity = ch.at("transmissivity").get<double>();
    rc.label = "fixed(" + format_number(rc.fixed_transmissivity) + ")";
    rch["transmissivity"] = rc.fixed_transmissivity;
  } else {
    const json ps = ch.contains("phasescreen") ? ch.at("phasescreen") : json::object();
    json rps = json::object();
    for (const auto& k : detail::phase_screen_numeric_keys()) rps[k.key] = ps.value(k.key, k.fallback);
    for (const auto& k : detail::phase_screen_integer_keys()) rps[k.key] = ps.value(k.key, k.fallback);
    rps["turbulence"] = ps.value("turbulence", true);
    auto& u = rc.uplink;
    u.geometry.zenith = rps["zenith_deg"].get<double>() * std::numbers::pi / 180.0;
    u.geometry.altitude = rps["altitude_m"].get<double>();
    u.beam.waist = rps["waist_m"].get<double>();
    u.beam.wavelength = rps["wavelength_m"].get<double>();
    u.beam.aperture_radius = rps["aperture_radius_m"].get<double>();
    u.profile.ground_cn2 = rps["ground_cn2"].get<double>();
    u.profile.outer_scale = rps["outer_scale_m"].get<double>();
    u.profile.inner_scale = rps["inner_scale_m"].get<double>();
    u.profile.ground_wind = rps["ground_wind_mps"].get<double>();
    u.profile.rms_wind = rps["rms_wind_mps"].get<double>();
    u.grid.dx = rps["grid_dx_m"].get<double>();
    u.grid.n = rps["grid_n"].get<std::size_t>();
    u.screens.atmosphere_top = rps["atmosphere_top_m"].get<double>();
    u.screens.max_rytov = rps["max_rytov"].get<double>();
    u.screens.min_screens = rps["min_screens"].get<std::size_t>();
    u.screens.subharmonic_levels = rps["subharmonic_levels"].get<int>();
    u.aperture_samples = rps["aperture_samples"].get<std::size_t>();
    u.turbulence = rps["turbulence"].get<bool>();
    u.eps_tx = rc.eps_tx;
    rc.ensemble_size = rps["n_realizations"].get<std::size_t>();
    rc.label = "theta=" + format_number(rps["zenith_deg"].get<double>()) + "deg";
    rch["phasescreen"] = rps;
  }
  if (ch.contains("label")) rc.label = ch.at("label").get<std::string>();
  rch["label"] = rc.label;
  rch["eps_tx"] = rc.eps_tx;

  json rdv = json::object();
  if (cfg.contains("diversity")) {
    const json& dv = cfg.at("diversity");
    const json& mv = dv.at("M");
    for (const auto& x : (mv.is_array() ? mv : json::array({mv}))) rc.m.push_back(x.get<std::size_t>());
    rc.layout = dv.value("layout", std::string("balanced")) == "chain" ? TreeLayout::chain : TreeLayout::balanced;
    rdv["M"] = rc.m;
    rdv["layout"] = rc.layout == TreeLayout::chain ? "chain" : "balanced";
  }

  json rsrc = json::object();
  if (cfg.contains("source")) {
    const json& src = cfg.at("source");
    auto list = [](const json& v) {
      std::vector<double> out;
      for (const auto& x : (v.is_array() ? v : json::array({v}))) out.push_back(x.get<double>());
      return out;
    };
    if (rc.command == Command::fid_sweep) {
      const std::string scheme = src.at("scheme").get<std::string>();
      rsrc["scheme"] = scheme;
      if (scheme == "bpsk") {
        const double p0 = src.value("P0", 0.5);
        for (double a : list(src.at("alpha"))) rc.schemes.push_back(ModulationScheme::bpsk(a, p0));
        rsrc["alpha"] = list(src.at("alpha"));
        rsrc["P0"] = p0;
      } else {
        for (double v : list(src.at("V_mod"))) rc.schemes.push_back(ModulationScheme::gaussian(v));
        rsrc["V_mod"] = list(src.at("V_mod"));
      }
    } else {
      if (src.contains("Vs")) {
        rc.vs = list(src.at("Vs"));
      } else if (src.contains("Vs_range")) {
        const json& r = src.at("Vs_range");
        const double a = r.at("start").get<double>(), b = r.at("stop").get<double>(), s = r.at("step").get<double>();
        const auto count = static_cast<std::size_t>(std::floor((b - a) / s + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i) rc.vs.push_back(a + s * static_cast<double>(i));
      }
      if (!rc.vs.empty() || src.contains("Vs")) rsrc["Vs"] = rc.vs;
    }
  }

  const json smp = cfg.contains("sampling") ? cfg.at("sampling") : json::object();
  rc.n_realizations = smp.value("n_realizations", std::size_t{3000});
  rc.n_alpha = smp.value("n_alpha", std::size_t{200});
  rc.seed = smp.value("seed", std::uint64_t{1});
  rc.monte_carlo = smp.value("method", std::string("analytic")) == "montecarlo";
  json rsmp = {{"n_realizations", rc.n_realizations},
               {"n_alpha", rc.n_alpha},
               {"seed", rc.seed},
               {"method", rc.monte_carlo ? "montecarlo" : "analytic"}};

  rc.output = cfg.contains("output") ? cfg.at("output").value("path", std::string()) : std::string();
  json rout = json::object();
  if (!rc.output.empty()) rout["path"] = rc.output;

  rc.resolved = {{"command", command_name(rc.command)}, {"channel", rch}};
  if (!rdv.empty()) rc.resolved["diversity"] = rdv;
  if (!rsrc.empty()) rc.resolved["source"] = rsrc;
  rc.resolved["sampling"] = rsmp;
  if (!rout.empty()) rc.resolved["output"] = rout;
  return rc;
}

}  // namespace cvdiv
