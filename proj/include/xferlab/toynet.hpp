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

// Closed three-mode toy network: two nodes L1, L2 coupled resonantly to one
// thermal channel mode c by H = g[(L1 + L2) c^dag + c (L1^dag + L2^dag)].

#include <cstddef>
#include <optional>
#include <vector>

#include "xferlab/hilbert.hpp"

namespace xferlab::toynet {

enum class Encoding { kTwoLevel, kOscillator };

struct ToyDims {
  std::size_t node;
  std::size_t channel;
};

struct ToyConfig {
  double g = 1.0;
  double n_ch = 0.0;
  Encoding encoding = Encoding::kOscillator;
  /// Hard cutoff of the node ladder operators (oscillator encoding). Unset
  /// means the node dimension is large enough to hold every excitation.
  std::optional<std::size_t> n_loc;
  /// Explicit subsystem sizes; derived from n_ch and n_loc when unset.
  std::optional<ToyDims> dims;
  /// Defaults to pi / (sqrt(2) g).
  std::optional<double> t_p;
  /// Number of intervals in the recorded traces.
  std::size_t trace_steps = 50;
  /// Limit on the full tensor dimension for dense construction.
  std::size_t dim_cap = 4096;

  void validate() const;
  double pulse_time() const;
  /// Levels carrying thermal weight (tail below 1e-8).
  std::size_t thermal_levels() const;
  ToyDims resolved_dims() const;
};

/// Dense H on node1 (x) channel (x) node2. Throws PreconditionError when the
/// product dimension exceeds cfg.dim_cap.
Operator build_toy_hamiltonian(const ToyConfig& cfg);

struct ToyTrace {
  std::vector<double> t;
  std::vector<double> fidelity;  // <psi_q| rho_2(t) |psi_q>
  std::vector<double> fbar;      // average fidelity of the logical map at t
  std::vector<double> n1;        // <L1^dag L1>
  std::vector<double> n2;        // <L2^dag L2>
  /// Haar average of <psi| B |psi> / Tr B, B the logical block of rho_2,
  /// i.e. the fidelity conditioned on node 2 ending in {|0>, |1>}.
  std::vector<double> fbar_conditional;
  double final_fbar = 0.0;
  double final_fbar_conditional = 0.0;
};

/// Evolves psi_q (x) thermal(n_ch) (x) |0> for t in [0, t_p]. The logical
/// output is the {|0>, |1>} block of node 2 after the parity frame change
/// (-1)^{n2}; weight outside that block decodes to I/2.
ToyTrace simulate_toy_transfer(const ToyConfig& cfg, const QubitState& psi_q);

/// Same evolution with the channel prepared in the number state |n>.
ToyTrace simulate_toy_fock_input(const ToyConfig& cfg, const QubitState& psi_q,
                                 std::size_t n);

}  // namespace xferlab::toynet
