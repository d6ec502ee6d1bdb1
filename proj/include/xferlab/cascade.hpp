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

// Two-node unidirectional (cascaded) network driven through a thermal
// channel: time-dependent couplings, transfer amplitudes, second moments,
// detector signal and a delayed point scatterer between the nodes.
//
// Conventions: hbar = 1, times in the inverse units of the rates, frame
// rotating at the node-2 frequency. A coupling gamma(t) = |gamma| e^{-2i phi}
// enters through its square root s(t) = sqrt|gamma| e^{-i phi}:
//   da/dt = -(|gamma|/2) a - conj(s) f_in,   f_out = f_in + s a.

#include <cstddef>
#include <optional>
#include <vector>

#include "xferlab/hilbert.hpp"

namespace xferlab::cascade {

/// Complex coupling rate sampled on a uniform grid t_k = t0 + k dt.
class PulseProfile {
 public:
  PulseProfile(double t0, double dt, std::vector<double> magnitude,
               std::vector<double> phase = {});

  static PulseProfile constant(double rate, double t0, double tf, double dt);
  static PulseProfile zeros(double t0, double tf, double dt);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  double tf() const { return time(size() - 1); }
  std::size_t size() const { return magnitude_.size(); }
  double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }

  const std::vector<double>& magnitude() const { return magnitude_; }
  const std::vector<double>& phase() const { return phase_; }
  double max_rate() const;

  /// sqrt|gamma_k| e^{-i phi_k}.
  Complex sqrt_rate(std::size_t k) const;
  /// Cubic interpolation of sqrt_rate at t_k + dt/2.
  Complex sqrt_rate_mid(std::size_t k) const;

  /// gamma(t) -> gamma(t0 + tf - t).
  PulseProfile mirrored() const;
  bool same_grid(const PulseProfile& other) const;

 private:
  double t0_;
  double dt_;
  std::vector<double> magnitude_;
  std::vector<double> phase_;
};

struct Scatterer {
  Complex r;     // reflection amplitude back towards node 1
  Complex t;     // transmission amplitude towards node 2
  double delay;  // round trip node 1 -> scatterer -> node 1
};

struct NetworkTopology {
  double eps_ch = 0.0;  // channel loss between the nodes
  double delta = 0.0;   // node-1 detuning omega_1 - omega_2
  double n_ch = 0.0;    // occupation of the incoming channel field
  /// Occupation of the absorbed-noise field; defaults to n_ch.
  std::optional<double> n_absorbed;
  std::optional<Scatterer> scatterer;
  /// Propagation delay node 1 -> node 2 (scatterer network only).
  double retardation = 0.0;

  void validate() const;
};

/// Single-excitation / Heisenberg amplitudes on the pulse grid.
struct TransferSolution {
  std::vector<double> t;
  std::vector<Complex> a1;  // A1(t, t0)
  std::vector<Complex> a2;  // A2(t, t0)
  std::vector<Complex> T;   // transfer amplitude including sqrt(1 - eps_ch)
  /// Weight of the incoming channel noise in node 2, int |D2(t,s)|^2 ds
  /// (times 1 - eps_ch).
  std::vector<double> noise_weight;
  /// Weight of absorbed noise, eps_ch (1 - |A2|^2).
  std::vector<double> absorbed_weight;
  /// s1 A1 + s2 T (lossless amplitude); zero for a dark pulse pair.
  std::vector<Complex> darkness;

  std::size_t size() const { return t.size(); }
  /// max_t | |A2|^2 + |T|^2 + noise + absorbed - 1 |.
  double norm_defect() const;
};

struct IntegratorLimits {
  double max_step_rate = 0.1;  // |gamma| dt must stay below this
};

/// gamma1(t) = gamma e^{gamma(t - tp/2)} / (2 - e^{gamma(t - tp/2)}) for
/// t < tp/2 and gamma afterwards, on [0, tp]; continuous at tp/2.
PulseProfile stannigel_pulse(double gamma, double t_p, double dt);

/// Forward RK4 pass over the amplitude equations plus the auxiliary
/// moments that give int |D2(t,s)|^2 ds without the norm identity.
TransferSolution integrate_amplitudes(const PulseProfile& gamma1,
                                      const PulseProfile& gamma2,
                                      const NetworkTopology& topo,
                                      const IntegratorLimits& limits = {});

/// D2(t_f, s) for every grid s by the backward pass in s (lossless kernel).
std::vector<Complex> filter_kernel(const PulseProfile& gamma1,
                                   const PulseProfile& gamma2, double delta = 0.0);

struct RecoveryOptions {
  double threshold = 1e-3;  // |T| below which gamma2 is held at gamma_max
  double delta = 0.0;
};

struct SynthesizedPulse {
  PulseProfile gamma2;
  TransferSolution solution;  // co-integrated A1, T under the synthesized pulse
};

/// Co-integrates A1 and T choosing sqrt(gamma2) = -sqrt(gamma1) A1 / T at
/// every stage, clamped to gamma_max.
SynthesizedPulse synthesize_recovery_pulse(const PulseProfile& gamma1, double gamma_max,
                                           const RecoveryOptions& options = {});

struct MomentTrajectory {
  std::vector<double> t;
  std::vector<double> n1;
  std::vector<double> n2;
  std::vector<Complex> c;  // <a1^dag a2>
  std::vector<double> n_filter;
  std::vector<double> n_filter_closed_form;
};

MomentTrajectory moment_trajectories(const PulseProfile& gamma1,
                                     const PulseProfile& gamma2,
                                     const NetworkTopology& topo, double n1_0,
                                     double n2_0 = 0.0,
                                     const IntegratorLimits& limits = {});

/// Filter-mode photon number behind node 1 for a detector of bandwidth
/// omega, with the large-bandwidth closed form alongside.
MomentTrajectory detector_signal(const PulseProfile& gamma1, double omega, double n_ch,
                                 double n1_0, double delta = 0.0,
                                 const IntegratorLimits& limits = {});

struct ScattererResult {
  std::vector<Complex> incident;  // field amplitude arriving at node 2
  std::vector<Complex> outgoing;  // field amplitude leaving node 2
  TransferSolution solution;
  double buffer_energy;           // reflected energy still in flight at t_f
  double emitted_energy;          // int |outgoing|^2 dt
  double delay_rounding;          // |rounded - requested| scatterer delay
};

/// Single-excitation propagation with the delayed scatterer feedback
/// f_in,1(t) = t_s f_in(t) + r_s f_out,1(t - tau_s) and f_in,2 = t_s f_out,1.
ScattererResult simulate_scatterer_network(const PulseProfile& gamma1,
                                           const PulseProfile& gamma2,
                                           const NetworkTopology& topo);

struct OptimizedRecovery {
  PulseProfile gamma2;
  ScattererResult result;
  double final_transfer;  // |T(t_f)|^2
  double final_phase;     // unwrapped phi2(t_f)
  bool capture_clamped;   // gamma_max limited the matching at some step
};

/// Chooses sqrt(gamma2) = -phi_in,2 / psi2 at every stage (zero outgoing
/// field after node 2), clamped to gamma_max.
OptimizedRecovery optimize_recovery_with_scatterer(const PulseProfile& gamma1,
                                                   const NetworkTopology& topo,
                                                   double gamma_max,
                                                   double threshold = 1e-3);

}  // namespace xferlab::cascade
