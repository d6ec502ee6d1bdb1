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

#pragma once

// Configuration-driven experiment runner producing the CSV data behind the
// figures plus a manifest with checksums.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace xferlab::experiment {

enum class Kind { kFig2, kFig3, kFig4, kFig5, kCustom };

std::string to_string(Kind kind);
/// Throws ConfigError for unknown names.
Kind parse_kind(const std::string& name);

/// Parameters as supplied by the user; unset fields take per-experiment
/// defaults in resolve().
struct ExperimentConfig {
  std::optional<Kind> experiment;
  std::optional<std::string> out_dir;
  std::optional<double> gamma;
  std::optional<double> tp;
  std::optional<double> dt;
  std::optional<double> nch;
  std::optional<double> eps;
  std::optional<std::string> code;
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;
  std::optional<double> r_s;
  std::optional<double> tau_s;
  std::optional<double> omega;
  std::optional<double> gamma_max;
  std::optional<double> n1_0;
  std::optional<double> threshold;
  std::optional<double> eps_min;
  std::optional<double> eps_max;
  std::optional<std::size_t> eps_points;
  std::optional<std::vector<double>> nch_values;
  std::optional<std::size_t> nloc_min;
  std::optional<std::size_t> nloc_max;
  std::optional<std::size_t> toy_channel_dim;
  std::optional<std::size_t> code_dim;
  std::optional<std::size_t> stride;

  /// Fields set in `other` replace those here.
  void merge(const ExperimentConfig& other);
};

/// Flat `key = value` file (TOML subset: numbers, quoted strings, numeric
/// arrays, `#` comments). Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Every parameter with its default filled in.
struct ResolvedConfig {
  Kind experiment = Kind::kFig3;
  std::string out_dir = "out";
  double gamma = 1.0;
  double tp = 20.0;
  double dt = 1e-3;
  double nch = 5.0;
  double eps = 0.0;
  std::string code = "lossgain";
  std::uint64_t seed = 0;
  double delta = 0.0;
  double r_s = 0.6;
  double tau_s = 3.0;
  double omega = 50.0;
  double gamma_max = 4.0;
  double n1_0 = 1.0;
  double threshold = 1e-3;
  double eps_min = 1e-4;
  double eps_max = 0.1;
  std::size_t eps_points = 13;
  std::vector<double> nch_values;
  std::size_t nloc_min = 2;
  std::size_t nloc_max = 12;
  std::size_t toy_channel_dim = 0;  // 0: derived from the thermal tail rule
  std::size_t code_dim = 30;
  std::size_t stride = 10;
};

/// Human-readable violations; empty when the configuration is runnable.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);
/// Fills defaults. Throws ConfigError listing all violations.
ResolvedConfig resolve(const ExperimentConfig& cfg);

struct FileRecord {
  std::string name;
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunManifest {
  ResolvedConfig config;
  std::string version;
  double t0 = 0.0;
  double tf = 0.0;
  std::size_t grid_points = 0;
  std::map<std::string, double> diagnostics;
  std::vector<std::string> warnings;
  double wall_clock_seconds = 0.0;
  std::vector<FileRecord> files;

  std::string to_json() const;
};

/// Computes all data in memory, then writes the CSV files and manifest.json
/// to cfg.out_dir. Throws ConfigError, NumericalGuard or IoError; no file is
/// written unless the computation succeeded.
RunManifest run_experiment(const ExperimentConfig& cfg);

/// 12 significant digits, shortest form, "-0" printed as "0".
std::string format_number(double value);
std::string sha256_hex(const std::string& data);

extern const char* const kVersion;

}  // namespace xferlab::experiment
