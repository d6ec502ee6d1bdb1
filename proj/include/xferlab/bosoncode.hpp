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

// Bosonic codes for the transfer oscillator and the corrected-transfer
// pipeline: encode, thermal channel, photon-number-modulo syndrome, recovery,
// decode.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "xferlab/hilbert.hpp"
#include "xferlab/thermch.hpp"

namespace xferlab::bosoncode {

enum class CodeVariant { kNone, kLossOnly, kLossAndGain };

std::string to_string(CodeVariant variant);
/// Accepts "none", "loss", "lossgain".
CodeVariant parse_code_variant(const std::string& name);

/// Two orthonormal code words whose Fock components share one residue
/// modulo `modulus` (absent for the trivial code).
class BosonicCode {
 public:
  BosonicCode(Vector w0, Vector w1, std::optional<int> modulus, CodeVariant variant);

  const Vector& word(int sigma) const { return sigma == 0 ? w0_ : w1_; }
  std::optional<int> modulus() const { return modulus_; }
  CodeVariant variant() const { return variant_; }
  std::size_t dim() const { return static_cast<std::size_t>(w0_.size()); }

 private:
  Vector w0_;
  Vector w1_;
  std::optional<int> modulus_;
  CodeVariant variant_;
};

/// Default truncation leaves headroom above the highest code word (|9>).
BosonicCode make_code(CodeVariant variant, std::size_t dim = 30);

Vector encode(const QubitState& psi, const BosonicCode& code);

/// Logical 2x2 block <W_i| rho |W_j>, unnormalized.
Matrix2 logical_block(const Matrix& rho, const BosonicCode& code);

struct Decoded {
  Matrix2 logical;  // renormalized onto the code space
  double leakage;   // weight outside the code space
};
/// Projects onto the code basis and renormalizes. Leakage is reported; a
/// state with no weight in the code space decodes as the maximally mixed
/// logical state.
Decoded decode(const Matrix& rho, const BosonicCode& code);

struct KnillLaflamme {
  Matrix alpha;          // <W_0|E_l^dag E_k|W_0>
  double max_deviation;  // largest violation of alpha_lk delta_{sigma sigma'}
};
KnillLaflamme knill_laflamme_check(const BosonicCode& code,
                                   const std::vector<Operator>& errors);

struct SyndromeOutcome {
  int residue;
  double probability;
  /// Normalized post-measurement state; empty when the outcome has zero weight.
  std::optional<DensityMatrix> post_state;
};
std::vector<SyndromeOutcome> syndrome_measure(const DensityMatrix& rho,
                                              const BosonicCode& code);

/// Recovery for one syndrome residue: the orthonormalized error words e_sigma
/// are mapped isometrically to W_sigma; everything else in the residue class
/// is a declared failure that decodes as the maximally mixed logical state.
struct RecoveryBranch {
  int residue;
  std::string error_label;  // "none", "loss", "gain" or "failure"
  Matrix error_words;       // dim x 2 orthonormal columns (empty on failure)
  Matrix isometry;          // dim x dim, sum_sigma |W_sigma><e_sigma|
};

struct Recovery {
  std::vector<RecoveryBranch> branches;  // indexed by residue
};

/// Builds the recovery from the first-order jump operators of `map`.
Recovery build_recovery(const BosonicCode& code, const thermch::ThermalGaussianMap& map);

/// Measure the syndrome of `rho` (any dimension >= code dim) and recover;
/// returns the logical 2x2 output (trace preserving, linear in rho).
Matrix2 correct_and_decode(const Matrix& rho, const BosonicCode& code,
                           const Recovery& recovery);

/// Logical channel of encode -> exact thermal map -> [syndrome -> recovery]
/// -> decode. Without correction, leakage out of the code space decodes as the
/// maximally mixed logical state.
QubitChannel logical_channel(const BosonicCode& code,
                             const thermch::ThermalGaussianMap& map, bool correct);

struct TransferFidelity {
  double corrected;
  double uncorrected;  // trivial code {|0>, |1>} without correction
};
TransferFidelity corrected_transfer_fidelity(const BosonicCode& code,
                                             const thermch::ThermalGaussianMap& map);

}  // namespace xferlab::bosoncode
