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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <json.hpp>
#include <sstream>

#include "xferlab/error.hpp"
#include "xferlab/experiment.hpp"

namespace xferlab::experiment {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("xferlab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(XFERLAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, ParsesFlatKeyValueText) {
  const ExperimentConfig cfg = parse_config(
      "# transfer through a warm line\n"
      "experiment = \"custom\"\n"
      "tp = 25   # pulse length\n"
      "nch = 2.5\n"
      "eps = 1e-2\n"
      "code = \"loss\"\n"
      "seed = 42\n"
      "nch_values = [0, 1.5, 3]\n"
      "\n");
  EXPECT_EQ(cfg.experiment, Kind::kCustom);
  EXPECT_EQ(cfg.tp, 25.0);
  EXPECT_EQ(cfg.nch, 2.5);
  EXPECT_EQ(cfg.eps, 0.01);
  EXPECT_EQ(cfg.code, "loss");
  EXPECT_EQ(cfg.seed, 42u);
  ASSERT_TRUE(cfg.nch_values);
  EXPECT_EQ(*cfg.nch_values, (std::vector<double>{0.0, 1.5, 3.0}));
  EXPECT_FALSE(cfg.gamma);
}

TEST(Config, RejectsMalformedText) {
  EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("tp = 1\ntp = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("[table]\n"), ConfigError);
  EXPECT_THROW(parse_config("tp = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("experiment = \"fig9\"\n"), ConfigError);
  EXPECT_THROW(parse_config("code = \"open\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/xferlab.toml"), ConfigError);
}

TEST(Config, MergePrefersLaterValues) {
  ExperimentConfig file = parse_config("experiment = \"fig3\"\ntp = 20\nnch = 5\n");
  ExperimentConfig flags;
  flags.nch = 1.0;
  file.merge(flags);
  EXPECT_EQ(file.nch, 1.0);
  EXPECT_EQ(file.tp, 20.0);
  EXPECT_EQ(file.experiment, Kind::kFig3);
}

TEST(Config, Validation) {
  for (Kind k : {Kind::kFig2, Kind::kFig3, Kind::kFig4, Kind::kFig5}) {
    ExperimentConfig cfg;
    cfg.experiment = k;
    EXPECT_TRUE(validate_config(cfg).empty()) << to_string(k);
  }
  EXPECT_FALSE(validate_config(ExperimentConfig{}).empty());
  ExperimentConfig custom;
  custom.experiment = Kind::kCustom;
  EXPECT_EQ(validate_config(custom).size(), 3u);
  ExperimentConfig coarse;
  coarse.experiment = Kind::kFig3;
  coarse.dt = 0.5;
  EXPECT_FALSE(validate_config(coarse).empty());
  ExperimentConfig shallow;
  shallow.experiment = Kind::kFig2;
  shallow.toy_channel_dim = 5;  // N_ch = 2 needs 47 levels
  EXPECT_FALSE(validate_config(shallow).empty());
  shallow.toy_channel_dim = 48;
  EXPECT_TRUE(validate_config(shallow).empty());
  ExperimentConfig short_pulse;
  short_pulse.experiment = Kind::kFig3;
  short_pulse.tp = 3.0;
  EXPECT_FALSE(validate_config(short_pulse).empty());
  EXPECT_THROW(resolve(ExperimentConfig{}), ConfigError);
}

TEST(Config, ResolvedDefaults) {
  ExperimentConfig cfg;
  cfg.experiment = Kind::kFig5;
  const ResolvedConfig r = resolve(cfg);
  EXPECT_EQ(r.tp, 20.0);
  EXPECT_EQ(r.delta, 1.0);
  EXPECT_EQ(r.r_s, 0.6);
  EXPECT_NEAR(r.tau_s, 3.0, 1e-12);
  cfg.experiment = Kind::kFig2;
  EXPECT_NEAR(resolve(cfg).tp, M_PI / std::sqrt(2.0), 1e-15);
}

TEST(Format, NumbersAreShortAndStable) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(-2.5e-10), "-2.5e-10");
  EXPECT_EQ(format_number(123456789012345.0), "1.23456789012e+14");
}

TEST(Format, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Run, Fig3IsReproducibleAndMatchesSchema) {
  const fs::path a = scratch("fig3_a"), b = scratch("fig3_b");
  ExperimentConfig cfg;
  cfg.experiment = Kind::kFig3;
  cfg.out_dir = a.string();
  const RunManifest m = run_experiment(cfg);
  cfg.out_dir = b.string();
  run_experiment(cfg);

  EXPECT_EQ(first_line(a / "populations.csv"), "t,n1,n2,fbar");
  EXPECT_EQ(first_line(a / "amplitudes.csv"), "t,reA1,imA1,reT,imT,absA2,I_D2,darkness");
  EXPECT_EQ(first_line(a / "pulse.csv"), "t,abs_gamma2,phi2");
  EXPECT_EQ(first_line(a / "detector.csv"), "t,n_out_exact,n_out_eq14");
  for (const auto& f : m.files) {
    EXPECT_EQ(slurp(a / f.name), slurp(b / f.name)) << f.name;
    EXPECT_EQ(sha256_hex(slurp(a / f.name)), f.sha256);
    EXPECT_EQ(fs::file_size(a / f.name), f.bytes);
  }
  EXPECT_EQ(m.files.size(), 4u);

  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest["version"], kVersion);
  EXPECT_EQ(manifest["files"].size(), 4u);

  // Final n2 equals n1(0) = 1.
  std::ifstream pop(a / "populations.csv");
  std::string line, last;
  while (std::getline(pop, line)) last = line;
  std::vector<std::string> cols;
  std::stringstream ss(last);
  for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  ASSERT_EQ(cols.size(), 4u);
  EXPECT_NEAR(std::stod(cols[2]), 1.0, 1e-3);
  EXPECT_EQ(slurp(a / "populations.csv").find('\r'), std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, CustomSweepSchema) {
  const fs::path dir = scratch("custom");
  ExperimentConfig cfg = parse_config("experiment = \"custom\"\ntp = 20\nnch = 1\neps = 0.01\n");
  cfg.out_dir = dir.string();
  run_experiment(cfg);
  EXPECT_EQ(first_line(dir / "fidelity_sweep.csv"),
            "eps,nch,fbar_uncorrected,fbar_code1,fbar_code2");
  EXPECT_EQ(first_line(dir / "populations.csv"), "t,n1,n2,fbar");
  fs::remove_all(dir);
}

TEST(Run, Fig5PulsePhase) {
  const fs::path dir = scratch("fig5");
  ExperimentConfig cfg;
  cfg.experiment = Kind::kFig5;
  cfg.out_dir = dir.string();
  const RunManifest m = run_experiment(cfg);
  EXPECT_EQ(first_line(dir / "pulse.csv"), "t,abs_gamma2,phi2");
  EXPECT_NEAR(m.diagnostics.at("phase_over_delta_tp"), 2.03, 0.05 * 2.03);
  EXPECT_GE(m.diagnostics.at("final_transfer"), 0.99);
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  EXPECT_EQ(run_cli("--out " + dir.string()), 2);
  EXPECT_EQ(run_cli("custom --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("fig3 --dt 0.5 --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("fig7"), 2);
  EXPECT_EQ(run_cli("fig3 --code open"), 2);
  EXPECT_EQ(run_cli("fig3 --config /nonexistent.toml --out " + dir.string()), 2);
  EXPECT_FALSE(fs::exists(dir));
  EXPECT_EQ(run_cli("fig3 --out /proc/xferlab_forbidden"), 4);
  EXPECT_EQ(run_cli("--version"), 0);
}

TEST(Cli, FlagsOverrideFile) {
  const fs::path dir = scratch("cli_cfg");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.toml");
    f << "experiment = \"custom\"\ntp = 20\nnch = 0\neps = 0.5\nout = \"" << (dir / "o").string()
      << "\"\n";
  }
  EXPECT_EQ(run_cli("custom --config " + (dir / "run.toml").string() + " --eps 0.01"), 0);
  std::ifstream sweep(dir / "o" / "fidelity_sweep.csv");
  std::string header, row;
  std::getline(sweep, header);
  std::getline(sweep, row);
  // Effective loss: channel eps plus the small residual pulse error.
  EXPECT_NEAR(std::stod(row.substr(0, row.find(','))), 0.01, 1e-4);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace xferlab::experiment
