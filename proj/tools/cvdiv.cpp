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

#include "cvdiv/cvdiv.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cvdiv: diversity-assisted Earth-to-satellite CV quantum link simulation"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  int threads = 0;
  bool validate_only = false;
  for (const char* name : {"channel-stats", "ent-sweep", "fid-sweep", "phase-screen"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "override sampling.seed");
    sub->add_option("--out", out_path, "override output.path");
    sub->add_option("--threads", threads, "worker threads (default: CVDIV_THREADS or 1)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--validate", validate_only, "check the configuration and exit");
  }
  CLI11_PARSE(app, argc, argv);
  const cvdiv::Command command = *cvdiv::parse_command(app.get_subcommands().front()->get_name());

  cvdiv::json cfg;
  try {
    cfg = cvdiv::json::parse(cvdiv::read_text_file(config_path));
  } catch (const cvdiv::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const cvdiv::json::parse_error& e) {
    std::cerr << "error: " << config_path << " is not valid JSON: " << e.what() << "\n";
    return kExitSchema;
  }
  if (cfg.is_object()) {
    if (seed) cfg["sampling"]["seed"] = *seed;
    if (!out_path.empty()) cfg["output"]["path"] = out_path;
  }
  const auto problems = cvdiv::validate(cfg, command);
  if (!problems.empty()) {
    std::cerr << "invalid configuration " << config_path << ":\n";
    for (const auto& p : problems) std::cerr << "  - " << p << "\n";
    return kExitSchema;
  }
  if (validate_only) {
    std::cout << config_path << ": ok\n";
    return 0;
  }
  try {
    const cvdiv::RunConfig rc = cvdiv::resolve(cfg, command);
    cvdiv::run(rc, cvdiv::resolve_threads(threads), std::cout);
  } catch (const cvdiv::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const cvdiv::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
