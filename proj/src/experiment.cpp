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

#include "xferlab/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "xferlab/bosoncode.hpp"
#include "xferlab/cascade.hpp"
#include "xferlab/error.hpp"
#include "xferlab/hilbert.hpp"
#include "xferlab/thermch.hpp"
#include "xferlab/toynet.hpp"

namespace xferlab::experiment {

const char* const kVersion = "0.1.0";

namespace {

namespace fs = std::filesystem;
using cascade::PulseProfile;

// ---------------------------------------------------------------- config text

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void config_fail(std::size_t line_no, const std::string& msg) {
  std::ostringstream os;
  os << "config line " << line_no << ": " << msg;
  throw ConfigError(os.str());
}

double parse_double(const std::string& text, std::size_t line_no) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    config_fail(line_no, "expected a number, got '" + text + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& text, std::size_t line_no) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    config_fail(line_no, "expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::string parse_string(const std::string& text, std::size_t line_no) {
  if (text.size() < 2 || text.front() != '"' || text.back() != '"') {
    config_fail(line_no, "expected a quoted string, got '" + text + "'");
  }
  return text.substr(1, text.size() - 2);
}

std::vector<double> parse_array(const std::string& text, std::size_t line_no) {
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
    config_fail(line_no, "expected an array, got '" + text + "'");
  }
  std::vector<double> out;
  std::stringstream ss(text.substr(1, text.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double(item, line_no));
  }
  return out;
}

// ---------------------------------------------------------------- output

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(const std::vector<double>& values) {
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values) row.push_back(format_number(v));
    rows.push_back(std::move(row));
  }

  std::string render() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

struct Outcome {
  std::vector<Table> tables;
  std::map<std::string, double> diagnostics;
  std::vector<std::string> warnings;
  double t0 = 0.0;
  double tf = 0.0;
  std::size_t grid_points = 0;
};

// ---------------------------------------------------------------- physics helpers

// Average fidelity of the transfer modelled as a thermal Gaussian map, with
// the deterministic phase of T undone locally.
class GaussianFidelity {
 public:
  double operator()(double eps, double n_eff) const {
    eps = std::clamp(eps, 0.0, 1.0);
    n_eff = std::max(n_eff, 0.0);
    const thermch::ThermalGaussianMap map(eps, n_eff);
    const QubitChannel channel([&map](const Matrix2& x) -> Matrix2 {
      const Matrix out = thermch::thermal_map_action(Matrix(x), map, 2);
      Matrix2 block = out.topLeftCorner<2, 2>();
      // Weight outside {|0>, |1>} decodes to the maximally mixed state.
      block += 0.5 * (x.trace() - block.trace()) * Matrix2::Identity();
      return block;
    });
    return average_qubit_fidelity(channel);
  }
};

double effective_noise(double eps, double noise_weight, double absorbed, double nch,
                       double n_absorbed) {
  if (eps <= 1e-15) return 0.0;
  return (noise_weight * nch + absorbed * n_absorbed) / eps;
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
  }
  return out;
}

double code_fidelity(const std::string& code, std::size_t dim, double eps, double nch) {
  const auto variant = bosoncode::parse_code_variant(code);
  const thermch::ThermalGaussianMap map(std::clamp(eps, 0.0, 1.0), std::max(nch, 0.0));
  if (variant == bosoncode::CodeVariant::kNone) {
    return GaussianFidelity()(eps, nch);
  }
  return bosoncode::corrected_transfer_fidelity(bosoncode::make_code(variant, dim), map)
      .corrected;
}

Table amplitude_table(const cascade::TransferSolution& sol, std::size_t stride) {
  Table t{"amplitudes.csv", {"t", "reA1", "imA1", "reT", "imT", "absA2", "I_D2", "darkness"},
          {}};
  for (std::size_t k = 0; k < sol.size(); k += stride) {
    t.add({sol.t[k], sol.a1[k].real(), sol.a1[k].imag(), sol.T[k].real(), sol.T[k].imag(),
           std::abs(sol.a2[k]), sol.noise_weight[k], std::abs(sol.darkness[k])});
  }
  return t;
}

Table pulse_table(const PulseProfile& g2, std::size_t stride) {
  Table t{"pulse.csv", {"t", "abs_gamma2", "phi2"}, {}};
  for (std::size_t k = 0; k < g2.size(); k += stride) {
    t.add({g2.time(k), g2.magnitude()[k], g2.phase()[k]});
  }
  return t;
}

// Indices 0, stride, 2 stride, ... plus the final grid point.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t stride) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < n; k += stride) idx.push_back(k);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

// ---------------------------------------------------------------- experiments

Outcome run_fig2(const ResolvedConfig& c) {
  Outcome out;
  toynet::ToyConfig base;
  base.g = c.gamma;
  base.n_ch = c.nch;
  base.trace_steps = 200;
  if (c.toy_channel_dim) {
    base.dims = toynet::ToyDims{c.toy_channel_dim, c.toy_channel_dim};
  }
  const QubitState one(0.0, 1.0);
  const auto trace = toynet::simulate_toy_transfer(base, one);
  Table pop{"populations.csv", {"t", "n1", "n2", "fbar"}, {}};
  for (std::size_t k = 0; k < trace.t.size(); ++k) {
    pop.add({trace.t[k], trace.n1[k], trace.n2[k], trace.fbar[k]});
  }
  out.tables.push_back(std::move(pop));

  Table sweep{"toy_sweep.csv", {"encoding", "nch", "nloc", "fbar", "fbar_conditional"}, {}};
  auto add_row = [&](const char* enc, double nch, std::size_t nloc,
                     const toynet::ToyTrace& r) {
    sweep.rows.push_back({enc, format_number(nch), std::to_string(nloc),
                          format_number(r.final_fbar), format_number(r.final_fbar_conditional)});
  };
  for (double nch : c.nch_values) {
    toynet::ToyConfig cfg;
    cfg.g = c.gamma;
    cfg.n_ch = nch;
    cfg.trace_steps = 1;
    cfg.encoding = toynet::Encoding::kTwoLevel;
    add_row("tls", nch, 2, toynet::simulate_toy_transfer(cfg, one));
    cfg.encoding = toynet::Encoding::kOscillator;
    add_row("oscillator", nch, 0, toynet::simulate_toy_transfer(cfg, one));
    for (std::size_t nloc = c.nloc_min; nloc <= c.nloc_max; ++nloc) {
      cfg.n_loc = nloc;
      add_row("oscillator", nch, nloc, toynet::simulate_toy_transfer(cfg, one));
    }
  }
  out.tables.push_back(std::move(sweep));
  out.diagnostics["toy_final_fbar"] = trace.final_fbar;
  out.t0 = 0.0;
  out.tf = trace.t.back();
  out.grid_points = trace.t.size();
  return out;
}

void add_transfer_tables(Outcome& out, const ResolvedConfig& c, const PulseProfile& g1,
                         const PulseProfile& g2, const cascade::NetworkTopology& topo) {
  const auto sol = cascade::integrate_amplitudes(g1, g2, topo);
  const auto mom = cascade::moment_trajectories(g1, g2, topo, c.n1_0);
  const GaussianFidelity fid;
  const double n_h = topo.n_absorbed.value_or(topo.n_ch);
  Table pop{"populations.csv", {"t", "n1", "n2", "fbar"}, {}};
  for (std::size_t k : sample_indices(sol.size(), c.stride)) {
    const double eps = 1.0 - std::norm(sol.T[k]);
    const double n_eff =
        effective_noise(eps, sol.noise_weight[k], sol.absorbed_weight[k], c.nch, n_h);
    pop.add({sol.t[k], mom.n1[k], mom.n2[k], fid(eps, n_eff)});
  }
  out.tables.push_back(std::move(pop));
  out.tables.push_back(amplitude_table(sol, c.stride));
  out.tables.push_back(pulse_table(g2, c.stride));

  const double eps_final = 1.0 - std::norm(sol.T.back());
  const double n_eff = effective_noise(eps_final, sol.noise_weight.back(),
                                       sol.absorbed_weight.back(), c.nch, n_h);
  out.diagnostics["norm_defect"] = sol.norm_defect();
  out.diagnostics["final_transfer"] = std::norm(sol.T.back());
  out.diagnostics["final_n2"] = mom.n2.back();
  out.diagnostics["final_fbar_uncorrected"] = fid(eps_final, n_eff);
  out.diagnostics["final_fbar_" + c.code] = code_fidelity(c.code, c.code_dim, eps_final, n_eff);
  out.t0 = g1.t0();
  out.tf = g1.tf();
  out.grid_points = g1.size();
}

Outcome run_fig3(const ResolvedConfig& c) {
  Outcome out;
  const auto g1 = cascade::stannigel_pulse(c.gamma, c.tp, c.dt);
  cascade::NetworkTopology topo;
  topo.n_ch = c.nch;
  topo.eps_ch = c.eps;
  topo.delta = c.delta;
  add_transfer_tables(out, c, g1, g1.mirrored(), topo);

  const auto det = cascade::detector_signal(g1, c.omega, c.nch, c.n1_0, c.delta);
  Table dt{"detector.csv", {"t", "n_out_exact", "n_out_eq14"}, {}};
  for (std::size_t k : sample_indices(det.t.size(), c.stride)) {
    dt.add({det.t[k], det.n_filter[k], det.n_filter_closed_form[k]});
  }
  out.tables.push_back(std::move(dt));
  return out;
}

Outcome run_fig4(const ResolvedConfig& c) {
  Outcome out;
  const auto loss = bosoncode::make_code(bosoncode::CodeVariant::kLossOnly, c.code_dim);
  const auto lossgain = bosoncode::make_code(bosoncode::CodeVariant::kLossAndGain, c.code_dim);
  Table sweep{"fidelity_sweep.csv",
              {"eps", "nch", "fbar_uncorrected", "fbar_code1", "fbar_code2"},
              {}};
  double worst_completeness = 0.0;
  for (double nch : c.nch_values) {
    for (double eps : log_space(c.eps_min, c.eps_max, c.eps_points)) {
      const thermch::ThermalGaussianMap map(eps, nch);
      const auto f1 = bosoncode::corrected_transfer_fidelity(loss, map);
      const auto f2 = bosoncode::corrected_transfer_fidelity(lossgain, map);
      sweep.add({eps, nch, f1.uncorrected, f1.corrected, f2.corrected});
      const auto kraus = thermch::build_kraus_set(map, FockSpace(c.code_dim));
      worst_completeness = std::max(worst_completeness, kraus.completeness_defect);
    }
  }
  out.tables.push_back(std::move(sweep));
  out.diagnostics["kraus_completeness_defect"] = worst_completeness;
  return out;
}

Outcome run_fig5(const ResolvedConfig& c) {
  Outcome out;
  const auto base = cascade::stannigel_pulse(c.gamma, c.tp, c.dt);
  const std::size_t n = base.size();
  // gamma1 keeps its constant branch over the second half of [0, 2 tp].
  std::vector<double> m1(2 * n - 1, c.gamma);
  std::copy(base.magnitude().begin(), base.magnitude().end(), m1.begin());
  const PulseProfile g1(0.0, base.dt(), m1);
  cascade::NetworkTopology topo;
  topo.delta = c.delta;
  topo.scatterer = cascade::Scatterer{c.r_s, std::sqrt(1.0 - c.r_s * c.r_s), c.tau_s};
  const auto opt =
      cascade::optimize_recovery_with_scatterer(g1, topo, c.gamma_max, c.threshold);

  const auto& sol = opt.result.solution;
  const GaussianFidelity fid;
  Table pop{"populations.csv", {"t", "n1", "n2", "fbar"}, {}};
  for (std::size_t k : sample_indices(sol.size(), c.stride)) {
    pop.add({sol.t[k], std::norm(sol.a1[k]), std::norm(sol.T[k]),
             fid(1.0 - std::norm(sol.T[k]), 0.0)});
  }
  out.tables.push_back(std::move(pop));
  out.tables.push_back(amplitude_table(sol, c.stride));
  out.tables.push_back(pulse_table(opt.gamma2, c.stride));

  // Reference: the mirrored pulse of the scatterer-free protocol on [0, tp].
  std::vector<double> m2(2 * n - 1, 0.0);
  const auto mirrored = base.mirrored();
  std::copy(mirrored.magnitude().begin(), mirrored.magnitude().end(), m2.begin());
  const auto ref =
      cascade::simulate_scatterer_network(g1, PulseProfile(0.0, base.dt(), m2), topo);

  out.diagnostics["final_transfer"] = opt.final_transfer;
  out.diagnostics["final_phase"] = opt.final_phase;
  if (c.delta != 0.0) out.diagnostics["phase_over_delta_tp"] = opt.final_phase / (c.delta * c.tp);
  out.diagnostics["reference_final_n2"] = std::norm(ref.solution.T.back());
  out.diagnostics["delay_rounding"] = opt.result.delay_rounding;
  if (opt.result.delay_rounding > 0.0) {
    out.warnings.push_back("scatterer delay rounded to the grid by " +
                           format_number(opt.result.delay_rounding));
  }
  if (opt.capture_clamped) out.warnings.push_back("recovery pulse clamped at gamma_max");
  out.t0 = g1.t0();
  out.tf = g1.tf();
  out.grid_points = g1.size();
  return out;
}

Outcome run_custom(const ResolvedConfig& c) {
  Outcome out;
  const auto g1 = cascade::stannigel_pulse(c.gamma, c.tp, c.dt);
  cascade::NetworkTopology topo;
  topo.n_ch = c.nch;
  topo.eps_ch = c.eps;
  topo.delta = c.delta;
  add_transfer_tables(out, c, g1, g1.mirrored(), topo);

  const auto sol = cascade::integrate_amplitudes(g1, g1.mirrored(), topo);
  const double eps_total = 1.0 - std::norm(sol.T.back());
  const double n_eff = effective_noise(eps_total, sol.noise_weight.back(),
                                       sol.absorbed_weight.back(), c.nch, c.nch);
  const thermch::ThermalGaussianMap map(std::clamp(eps_total, 0.0, 1.0), n_eff);
  const auto f1 = bosoncode::corrected_transfer_fidelity(
      bosoncode::make_code(bosoncode::CodeVariant::kLossOnly, c.code_dim), map);
  const auto f2 = bosoncode::corrected_transfer_fidelity(
      bosoncode::make_code(bosoncode::CodeVariant::kLossAndGain, c.code_dim), map);
  Table sweep{"fidelity_sweep.csv",
              {"eps", "nch", "fbar_uncorrected", "fbar_code1", "fbar_code2"},
              {}};
  sweep.add({eps_total, c.nch, f1.uncorrected, f1.corrected, f2.corrected});
  out.tables.push_back(std::move(sweep));
  return out;
}

// ---------------------------------------------------------------- validation

void check(std::vector<std::string>& v, bool ok, const std::string& msg) {
  if (!ok) v.push_back(msg);
}

ResolvedConfig fill_defaults(const ExperimentConfig& cfg) {
  ResolvedConfig r;
  r.experiment = cfg.experiment.value_or(Kind::kFig3);
  r.gamma = cfg.gamma.value_or(1.0);
  r.dt = cfg.dt.value_or(1e-3 / r.gamma);
  r.out_dir = cfg.out_dir.value_or("out");
  r.code = cfg.code.value_or("lossgain");
  r.seed = cfg.seed.value_or(0);
  r.eps = cfg.eps.value_or(0.0);
  r.n1_0 = cfg.n1_0.value_or(1.0);
  r.omega = cfg.omega.value_or(50.0 * r.gamma);
  r.gamma_max = cfg.gamma_max.value_or(4.0 * r.gamma);
  r.threshold = cfg.threshold.value_or(1e-3);
  r.r_s = cfg.r_s.value_or(0.6);
  r.eps_min = cfg.eps_min.value_or(1e-4);
  r.eps_max = cfg.eps_max.value_or(0.1);
  r.eps_points = cfg.eps_points.value_or(13);
  r.nloc_min = cfg.nloc_min.value_or(2);
  r.nloc_max = cfg.nloc_max.value_or(12);
  r.toy_channel_dim = cfg.toy_channel_dim.value_or(0);
  r.code_dim = cfg.code_dim.value_or(30);
  r.stride = cfg.stride.value_or(10);
  switch (r.experiment) {
    case Kind::kFig2:
      r.nch = cfg.nch.value_or(2.0);
      r.tp = cfg.tp.value_or(std::numbers::pi / (std::numbers::sqrt2 * r.gamma));
      r.nch_values = cfg.nch_values.value_or(std::vector<double>{0, 1, 2, 3, 4, 5});
      break;
    case Kind::kFig4:
      r.nch = cfg.nch.value_or(0.0);
      r.tp = cfg.tp.value_or(20.0 / r.gamma);
      r.nch_values = cfg.nch_values.value_or(std::vector<double>{0, 2});
      break;
    case Kind::kFig5:
      r.nch = cfg.nch.value_or(0.0);
      r.tp = cfg.tp.value_or(20.0 / r.gamma);
      r.delta = cfg.delta.value_or(r.gamma);
      break;
    case Kind::kFig3:
    case Kind::kCustom:
      r.nch = cfg.nch.value_or(5.0);
      r.tp = cfg.tp.value_or(20.0 / r.gamma);
      break;
  }
  if (r.experiment != Kind::kFig5) r.delta = cfg.delta.value_or(0.0);
  if (r.experiment != Kind::kFig2 && r.experiment != Kind::kFig4) {
    r.nch_values = cfg.nch_values.value_or(std::vector<double>{r.nch});
  }
  r.tau_s = cfg.tau_s.value_or(0.15 * r.tp);
  return r;
}

}  // namespace

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::kFig2:
      return "fig2";
    case Kind::kFig3:
      return "fig3";
    case Kind::kFig4:
      return "fig4";
    case Kind::kFig5:
      return "fig5";
    case Kind::kCustom:
      return "custom";
  }
  return "unknown";
}

Kind parse_kind(const std::string& name) {
  for (Kind k : {Kind::kFig2, Kind::kFig3, Kind::kFig4, Kind::kFig5, Kind::kCustom}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

void ExperimentConfig::merge(const ExperimentConfig& o) {
  auto take = [](auto& dst, const auto& src) {
    if (src) dst = src;
  };
  take(experiment, o.experiment);
  take(out_dir, o.out_dir);
  take(gamma, o.gamma);
  take(tp, o.tp);
  take(dt, o.dt);
  take(nch, o.nch);
  take(eps, o.eps);
  take(code, o.code);
  take(seed, o.seed);
  take(delta, o.delta);
  take(r_s, o.r_s);
  take(tau_s, o.tau_s);
  take(omega, o.omega);
  take(gamma_max, o.gamma_max);
  take(n1_0, o.n1_0);
  take(threshold, o.threshold);
  take(eps_min, o.eps_min);
  take(eps_max, o.eps_max);
  take(eps_points, o.eps_points);
  take(nch_values, o.nch_values);
  take(nloc_min, o.nloc_min);
  take(nloc_max, o.nloc_max);
  take(toy_channel_dim, o.toy_channel_dim);
  take(code_dim, o.code_dim);
  take(stride, o.stride);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  using Setter = std::function<void(const std::string&, std::size_t)>;
  auto num = [](std::optional<double>& f) -> Setter {
    return [&f](const std::string& v, std::size_t l) { f = parse_double(v, l); };
  };
  auto count = [](std::optional<std::size_t>& f) -> Setter {
    return [&f](const std::string& v, std::size_t l) { f = parse_count(v, l); };
  };
  const std::map<std::string, Setter> setters = {
      {"experiment",
       [&](const std::string& v, std::size_t l) {
         try {
           cfg.experiment = parse_kind(parse_string(v, l));
         } catch (const ConfigError& e) {
           config_fail(l, e.what());
         }
       }},
      {"out", [&](const std::string& v, std::size_t l) { cfg.out_dir = parse_string(v, l); }},
      {"code", [&](const std::string& v, std::size_t l) { cfg.code = parse_string(v, l); }},
      {"seed",
       [&](const std::string& v, std::size_t l) { cfg.seed = parse_count(v, l); }},
      {"nch_values",
       [&](const std::string& v, std::size_t l) { cfg.nch_values = parse_array(v, l); }},
      {"gamma", num(cfg.gamma)},
      {"tp", num(cfg.tp)},
      {"dt", num(cfg.dt)},
      {"nch", num(cfg.nch)},
      {"eps", num(cfg.eps)},
      {"delta", num(cfg.delta)},
      {"r_s", num(cfg.r_s)},
      {"tau_s", num(cfg.tau_s)},
      {"omega", num(cfg.omega)},
      {"gamma_max", num(cfg.gamma_max)},
      {"n1_0", num(cfg.n1_0)},
      {"threshold", num(cfg.threshold)},
      {"eps_min", num(cfg.eps_min)},
      {"eps_max", num(cfg.eps_max)},
      {"eps_points", count(cfg.eps_points)},
      {"nloc_min", count(cfg.nloc_min)},
      {"nloc_max", count(cfg.nloc_max)},
      {"toy_channel_dim", count(cfg.toy_channel_dim)},
      {"code_dim", count(cfg.code_dim)},
      {"stride", count(cfg.stride)},
  };
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  std::map<std::string, bool> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') config_fail(line_no, "tables are not supported");
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) config_fail(line_no, "unknown key '" + key + "'");
    if (seen[key]) config_fail(line_no, "duplicate key '" + key + "'");
    seen[key] = true;
    it->second(value, line_no);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> v;
  if (!cfg.experiment) {
    v.push_back("experiment is not set");
    return v;
  }
  if (*cfg.experiment == Kind::kCustom) {
    check(v, cfg.tp.has_value(), "custom experiment requires tp");
    check(v, cfg.nch.has_value(), "custom experiment requires nch");
    check(v, cfg.eps.has_value(), "custom experiment requires eps");
  }
  const ResolvedConfig r = fill_defaults(cfg);
  check(v, !r.out_dir.empty(), "out must not be empty");
  check(v, r.gamma > 0.0, "gamma must be positive");
  if (!(r.gamma > 0.0)) return v;
  check(v, r.dt > 0.0, "dt must be positive");
  check(v, r.dt <= 1e-2 / r.gamma, "dt too coarse: need dt <= 1e-2 / gamma");
  check(v, r.nch >= 0.0, "nch must be non-negative");
  for (double n : r.nch_values) check(v, n >= 0.0, "nch_values must be non-negative");
  check(v, r.eps >= 0.0 && r.eps <= 1.0, "eps must lie in [0, 1]");
  check(v, r.n1_0 >= 0.0, "n1_0 must be non-negative");
  check(v, r.stride >= 1, "stride must be at least 1");
  check(v, r.threshold > 0.0, "threshold must be positive");
  try {
    bosoncode::parse_code_variant(r.code);
  } catch (const Error&) {
    v.push_back("code must be one of none, loss, lossgain");
  }
  switch (r.experiment) {
    case Kind::kFig2: {
      check(v, r.tp > 0.0, "tp must be positive");
      check(v, r.nloc_min >= 2, "nloc_min must be at least 2");
      check(v, r.nloc_max >= r.nloc_min, "nloc_max must not be below nloc_min");
      if (r.toy_channel_dim && r.nch >= 0.0) {
        const std::size_t need = thermal_truncation(r.nch) + 1;
        check(v, r.toy_channel_dim >= need,
              "toy_channel_dim " + std::to_string(r.toy_channel_dim) +
                  " below the thermal truncation requirement " + std::to_string(need));
      }
      break;
    }
    case Kind::kFig4:
      check(v, r.eps_min > 0.0 && r.eps_min < r.eps_max && r.eps_max <= 1.0,
            "need 0 < eps_min < eps_max <= 1");
      check(v, r.eps_points >= 2, "eps_points must be at least 2");
      check(v, r.code_dim >= 12, "code_dim must be at least 12");
      for (double n : r.nch_values) {
        if (n < 0.0) continue;
        const std::size_t out_dim = r.code_dim + thermal_truncation(n) - 1;
        check(v, out_dim <= 512,
              "thermal truncation for nch = " + format_number(n) +
                  " needs more than 512 output levels");
      }
      break;
    case Kind::kFig5:
      check(v, r.r_s >= 0.0 && r.r_s < 1.0, "r_s must lie in [0, 1)");
      check(v, r.tau_s >= 10.0 * r.dt, "tau_s must span at least 10 steps");
      check(v, r.gamma_max >= r.gamma, "gamma_max must be at least gamma");
      check(v, r.gamma_max * r.dt <= 0.1, "gamma_max * dt must not exceed 0.1");
      [[fallthrough]];
    case Kind::kFig3:
    case Kind::kCustom:
      check(v, r.gamma * r.tp >= 5.0, "need gamma * tp >= 5");
      check(v, r.omega > 0.0, "omega must be positive");
      check(v, r.omega * r.dt <= 0.1, "omega * dt must not exceed 0.1");
      check(v, r.code_dim >= 12, "code_dim must be at least 12");
      break;
  }
  return v;
}

ResolvedConfig resolve(const ExperimentConfig& cfg) {
  const auto violations = validate_config(cfg);
  if (!violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& s : violations) msg += "\n  " + s;
    throw ConfigError(msg);
  }
  return fill_defaults(cfg);
}

std::string format_number(double value) {
  if (!std::isfinite(value)) throw NumericalGuard("non-finite value in output");
  if (value == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 12);
  if (ec != std::errc()) throw NumericalGuard("number formatting failed");
  return std::string(buf, ptr);
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "xferlab";
  j["version"] = version;
  j["experiment"] = to_string(config.experiment);
  nlohmann::ordered_json c;
  c["gamma"] = config.gamma;
  c["tp"] = config.tp;
  c["dt"] = config.dt;
  c["nch"] = config.nch;
  c["eps"] = config.eps;
  c["code"] = config.code;
  c["seed"] = config.seed;
  c["delta"] = config.delta;
  c["r_s"] = config.r_s;
  c["tau_s"] = config.tau_s;
  c["omega"] = config.omega;
  c["gamma_max"] = config.gamma_max;
  c["n1_0"] = config.n1_0;
  c["threshold"] = config.threshold;
  c["eps_min"] = config.eps_min;
  c["eps_max"] = config.eps_max;
  c["eps_points"] = config.eps_points;
  c["nch_values"] = config.nch_values;
  c["nloc_min"] = config.nloc_min;
  c["nloc_max"] = config.nloc_max;
  c["toy_channel_dim"] = config.toy_channel_dim;
  c["code_dim"] = config.code_dim;
  c["stride"] = config.stride;
  c["out"] = config.out_dir;
  j["config"] = c;
  j["grid"] = {{"t0", t0}, {"tf", tf}, {"dt", config.dt}, {"points", grid_points}};
  j["diagnostics"] = diagnostics;
  j["warnings"] = warnings;
  j["wall_clock_seconds"] = wall_clock_seconds;
  nlohmann::ordered_json files_json = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    files_json.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }
  j["files"] = files_json;
  return j.dump(2) + "\n";
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  const ResolvedConfig c = resolve(cfg);
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    switch (c.experiment) {
      case Kind::kFig2:
        out = run_fig2(c);
        break;
      case Kind::kFig3:
        out = run_fig3(c);
        break;
      case Kind::kFig4:
        out = run_fig4(c);
        break;
      case Kind::kFig5:
        out = run_fig5(c);
        break;
      case Kind::kCustom:
        out = run_custom(c);
        break;
    }
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }

  RunManifest manifest;
  manifest.config = c;
  manifest.version = kVersion;
  manifest.t0 = out.t0;
  manifest.tf = out.tf;
  manifest.grid_points = out.grid_points;
  manifest.diagnostics = out.diagnostics;
  manifest.warnings = out.warnings;

  std::vector<std::pair<std::string, std::string>> payloads;
  for (const auto& t : out.tables) payloads.emplace_back(t.name, t.render());

  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& data) {
    const fs::path path = fs::path(c.out_dir) / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    f.close();
    if (!f) throw IoError("cannot write '" + path.string() + "'");
  };
  for (const auto& [name, data] : payloads) {
    write(name, data);
    manifest.files.push_back({name, sha256_hex(data), data.size()});
  }
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write("manifest.json", manifest.to_json());
  return manifest;
}

}  // namespace xferlab::experiment
