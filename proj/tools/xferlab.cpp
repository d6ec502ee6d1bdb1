// Copyright 2026 The xferlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// xferlab <fig2|fig3|fig4|fig5|custom> [options]

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "xferlab/error.hpp"
#include "xferlab/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace xferlab;
  using experiment::ExperimentConfig;

  CLI::App app{"Quantum state transfer through thermal channels: figure data and sweeps"};
  app.set_version_flag("--version", experiment::kVersion);
  std::string name;
  std::string config_path;
  ExperimentConfig flags;
  std::string out;
  double gamma = 0, tp = 0, nch = 0, eps = 0, dt = 0;
  std::string code;
  std::uint64_t seed = 0;

  app.add_option("experiment", name, "fig2, fig3, fig4, fig5 or custom")
      ->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5", "custom"}));
  app.add_option("--config", config_path, "key = value configuration file");
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_gamma = app.add_option("--gamma", gamma, "peak coupling rate");
  auto* o_tp = app.add_option("--tp", tp, "pulse duration");
  auto* o_nch = app.add_option("--nch", nch, "channel thermal occupation");
  auto* o_eps = app.add_option("--eps", eps, "channel loss");
  auto* o_code = app.add_option("--code", code, "loss, lossgain or none")
                     ->check(CLI::IsMember({"loss", "lossgain", "none"}));
  auto* o_dt = app.add_option("--dt", dt, "integration step");
  auto* o_seed = app.add_option("--seed", seed, "recorded in the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (o_out->count()) flags.out_dir = out;
  if (o_gamma->count()) flags.gamma = gamma;
  if (o_tp->count()) flags.tp = tp;
  if (o_nch->count()) flags.nch = nch;
  if (o_eps->count()) flags.eps = eps;
  if (o_code->count()) flags.code = code;
  if (o_dt->count()) flags.dt = dt;
  if (o_seed->count()) flags.seed = seed;

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = experiment::load_config(config_path);
    if (!name.empty()) flags.experiment = experiment::parse_kind(name);
    cfg.merge(flags);
    const auto manifest = experiment::run_experiment(cfg);
    std::cout << "wrote " << manifest.files.size() + 1 << " files to "
              << manifest.config.out_dir << "\n";
    for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalGuard& e) {
    std::cerr << "numerical guard: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
