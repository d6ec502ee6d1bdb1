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

// Thermal bosonic channels: distributed absorption, the single-mode thermal
// Gaussian map a -> sqrt(1-eps) a + sqrt(eps) b with b thermal, its exact
// number-basis Kraus representation and the first-order jump expansion.

#include <cstddef>
#include <optional>
#include <vector>

#include "xferlab/hilbert.hpp"

namespace xferlab::thermch {

/// Transmission-line parameters. Lengths in metres.
struct ChannelParams {
  double length = 0.0;
  double absorption_length = 500.0;
  double n_ch = 0.0;
  /// Occupation of the field entering node 1, when it differs from n_ch.
  std::optional<double> n_in;
  /// Material occupation sampled uniformly on [0, length] (endpoints included).
  std::vector<double> n_mat;
};

/// eps_ch = 1 - exp(-L / L_ab).
double channel_loss(double length, double absorption_length);

/// Absorption length for a loss quoted in dB per metre.
double absorption_length_from_db(double db_per_metre);

/// Beam-splitter concatenation: eps = eps_ch + eps_p - eps_ch * eps_p.
double combine_errors(double eps_p, double eps_ch);

/// eps + gamma_min/gamma_c + gamma_min * t_enc.
double error_budget(double eps, double gamma_min, double gamma_c, double t_enc);

/// Effective occupation of the absorbed noise field,
/// (1 / (eps_ch L_ab)) int_0^L exp(-(L-z)/L_ab) N_mat(z) dz, integrated
/// exactly for the piecewise-linear interpolant of the samples.
double absorption_noise_occupation(const ChannelParams& params);

/// Characteristic single-photon error rate E = eps (N + 1/2).
double error_rate(double eps, double n_ch);

class ThermalGaussianMap {
 public:
  ThermalGaussianMap(double eps, double n_ch);
  double eps() const { return eps_; }
  double n_ch() const { return n_ch_; }

 private:
  double eps_;
  double n_ch_;
};

/// Number-basis beam-splitter amplitude for |n>_1 |k>_noise -> |r>_2 with
/// eps the reflectance; zero for r > n + k.
double kraus_coefficient(std::size_t r, std::size_t n, std::size_t k, double eps);

struct KrausOperator {
  std::size_t k;  // noise photon number
  std::size_t q;  // photons left in the discarded port
  Matrix matrix;  // output x input, includes sqrt(p_k)
};

struct KrausSet {
  FockSpace space;
  std::vector<KrausOperator> operators;
  std::vector<double> weights;  // renormalized p_k
  std::size_t k_max;
  std::size_t q_max;
  /// || sum K^dag K - 1 ||_max restricted to the first `checked_levels`.
  double completeness_defect;
  std::size_t checked_levels;

  /// rho on `space`; the result lives on the output space.
  Matrix apply(const Matrix& rho) const;
};

/// Truncated Kraus operators K_{k,q} from `space` into the output space of
/// thermal_map_output_dim levels, with k < k_max from the thermal tail rule
/// (1e-8) and q <= dim + k_max. `checked_levels`
/// defaults to dim / 2.
KrausSet build_kraus_set(const ThermalGaussianMap& map, FockSpace space,
                         std::optional<std::size_t> checked_levels = {});

/// Output dimension needed to hold the full channel output of an input
/// supported on `input_dim` levels.
std::size_t thermal_map_output_dim(const ThermalGaussianMap& map,
                                   std::size_t input_dim);

/// Linear action on an arbitrary (not necessarily positive) operator,
/// [out]_{r,r'} = sum_k p_k sum_{n-r = n'-r'} K(r,n,k) K(r',n',k) X_{n,n'}.
/// The output lives on thermal_map_output_dim levels unless `output_dim`
/// truncates it.
Matrix thermal_map_action(const Matrix& x, const ThermalGaussianMap& map,
                          std::optional<std::size_t> output_dim = {});

/// Exact channel output on enough levels to hold it completely. Throws
/// PreconditionError when that exceeds `max_output_dim`.
DensityMatrix apply_thermal_map(const DensityMatrix& rho,
                                const ThermalGaussianMap& map,
                                std::size_t max_output_dim = 512);

/// Single-jump Kraus operators E_0, E_-, E_+ on `space` (E_+ truncated at
/// the top level).
struct JumpOperators {
  Operator no_jump;
  Operator loss;
  Operator gain;
};
JumpOperators jump_operators(double eps, double n_ch, FockSpace space);

/// sum_l E_l rho E_l^dag on dim + 1 levels so the raised top level is kept.
/// Not trace preserving: the defect is O(eps^2).
Matrix first_order_map(const Matrix& rho, double eps, double n_ch);

}  // namespace xferlab::thermch
