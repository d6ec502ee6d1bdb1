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

#include "xferlab/bosoncode.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace xferlab::bosoncode {
namespace {

constexpr double kWordTol = 1e-12;
constexpr double kDegenerateNorm = 1e-10;

int residue_of(const Vector& w, int modulus) {
  int residue = -1;
  for (Eigen::Index n = 0; n < w.size(); ++n) {
    if (std::abs(w(n)) < kWordTol) continue;
    const int r = static_cast<int>(n % modulus);
    if (residue >= 0 && r != residue) return -1;
    residue = r;
  }
  return residue;
}

// Embeds the first rows of `v` into a vector of length `dim`.
Vector pad(const Vector& v, Eigen::Index dim) {
  Vector out = Vector::Zero(dim);
  const Eigen::Index n = std::min(dim, v.size());
  out.head(n) = v.head(n);
  return out;
}

// Symmetric (Loewdin) orthonormalization of two columns; empty on failure.
std::optional<Matrix> orthonormalize(const Matrix& words) {
  for (Eigen::Index c = 0; c < words.cols(); ++c) {
    if (words.col(c).norm() < kDegenerateNorm) return std::nullopt;
  }
  const Matrix overlap = words.adjoint() * words;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(overlap);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  if (lambda.minCoeff() < kDegenerateNorm * kDegenerateNorm * lambda.maxCoeff()) {
    return std::nullopt;
  }
  const Eigen::VectorXd inv_sqrt = lambda.cwiseSqrt().cwiseInverse();
  const Matrix s_inv_half = eig.eigenvectors() *
                            inv_sqrt.cast<Complex>().asDiagonal() *
                            eig.eigenvectors().adjoint();
  return words * s_inv_half;
}

Matrix2 completed_block(const Matrix& rho, const BosonicCode& code) {
  const Matrix2 block = logical_block(rho, code);
  const Complex leaked = rho.trace() - block.trace();
  return block + 0.5 * leaked * Matrix2::Identity();
}

}  // namespace

std::string to_string(CodeVariant variant) {
  switch (variant) {
    case CodeVariant::kNone:
      return "none";
    case CodeVariant::kLossOnly:
      return "loss";
    case CodeVariant::kLossAndGain:
      return "lossgain";
  }
  return "none";
}

CodeVariant parse_code_variant(const std::string& name) {
  if (name == "none") return CodeVariant::kNone;
  if (name == "loss") return CodeVariant::kLossOnly;
  if (name == "lossgain") return CodeVariant::kLossAndGain;
  throw PreconditionError("unknown code variant '" + name +
                          "' (expected none, loss or lossgain)");
}

BosonicCode::BosonicCode(Vector w0, Vector w1, std::optional<int> modulus,
                         CodeVariant variant)
    : w0_(std::move(w0)), w1_(std::move(w1)), modulus_(modulus), variant_(variant) {
  if (w0_.size() != w1_.size() || w0_.size() < 2) {
    throw PreconditionError("BosonicCode: code words must share a Fock space");
  }
  if (std::abs(w0_.squaredNorm() - 1.0) > kWordTol ||
      std::abs(w1_.squaredNorm() - 1.0) > kWordTol) {
    throw PreconditionError("BosonicCode: code words must be normalized");
  }
  if (std::abs(w0_.dot(w1_)) > kWordTol) {
    throw PreconditionError("BosonicCode: code words must be orthogonal");
  }
  if (modulus_) {
    if (*modulus_ < 2) throw PreconditionError("BosonicCode: modulus must be >= 2");
    const int r0 = residue_of(w0_, *modulus_);
    const int r1 = residue_of(w1_, *modulus_);
    if (r0 < 0 || r0 != r1) {
      throw PreconditionError(
          "BosonicCode: code-word components must share one residue");
    }
  }
}

BosonicCode make_code(CodeVariant variant, std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  Vector w0 = Vector::Zero(d);
  Vector w1 = Vector::Zero(d);
  switch (variant) {
    case CodeVariant::kNone:
      if (dim < 2) break;
      w0(0) = 1.0;
      w1(1) = 1.0;
      return BosonicCode(w0, w1, std::nullopt, variant);
    case CodeVariant::kLossOnly:
      if (dim < 5) break;
      w0(0) = w0(4) = 1.0 / std::sqrt(2.0);
      w1(2) = 1.0;
      return BosonicCode(w0, w1, 2, variant);
    case CodeVariant::kLossAndGain:
      if (dim < 10) break;
      w0(0) = 0.5;
      w0(6) = std::sqrt(3.0) / 2.0;
      w1(3) = std::sqrt(3.0) / 2.0;
      w1(9) = 0.5;
      return BosonicCode(w0, w1, 3, variant);
  }
  throw PreconditionError("make_code: truncation too small for the code words");
}

Vector encode(const QubitState& psi, const BosonicCode& code) {
  return psi.alpha() * code.word(0) + psi.beta() * code.word(1);
}

Matrix2 logical_block(const Matrix& rho, const BosonicCode& code) {
  if (rho.rows() < static_cast<Eigen::Index>(code.dim())) {
    throw PreconditionError("logical_block: state smaller than the code space");
  }
  Matrix2 block;
  for (int i = 0; i < 2; ++i) {
    const Vector wi = pad(code.word(i), rho.rows());
    for (int j = 0; j < 2; ++j) {
      block(i, j) = wi.dot(rho * pad(code.word(j), rho.rows()));
    }
  }
  return block;
}

Decoded decode(const Matrix& rho, const BosonicCode& code) {
  const Matrix2 block = logical_block(rho, code);
  const double inside = block.trace().real();
  const double leakage = rho.trace().real() - inside;
  if (inside <= 1e-300) return {Matrix2::Identity() / 2.0, leakage};
  return {block / inside, leakage};
}

KnillLaflamme knill_laflamme_check(const BosonicCode& code,
                                   const std::vector<Operator>& errors) {
  const auto count = static_cast<Eigen::Index>(errors.size());
  for (const auto& e : errors) {
    if (e.dim() != code.dim()) {
      throw PreconditionError("knill_laflamme_check: operator dimension mismatch");
    }
  }
  std::vector<Vector> image0;
  std::vector<Vector> image1;
  for (const auto& e : errors) {
    image0.push_back(e.matrix() * code.word(0));
    image1.push_back(e.matrix() * code.word(1));
  }
  KnillLaflamme result{Matrix::Zero(count, count), 0.0};
  for (Eigen::Index l = 0; l < count; ++l) {
    for (Eigen::Index k = 0; k < count; ++k) {
      const auto ul = static_cast<std::size_t>(l);
      const auto uk = static_cast<std::size_t>(k);
      const Complex a00 = image0[ul].dot(image0[uk]);
      const Complex a11 = image1[ul].dot(image1[uk]);
      const Complex a01 = image0[ul].dot(image1[uk]);
      const Complex a10 = image1[ul].dot(image0[uk]);
      result.alpha(l, k) = a00;
      result.max_deviation = std::max({result.max_deviation, std::abs(a00 - a11),
                                       std::abs(a01), std::abs(a10)});
    }
  }
  return result;
}

std::vector<SyndromeOutcome> syndrome_measure(const DensityMatrix& rho,
                                              const BosonicCode& code) {
  if (!code.modulus()) {
    throw PreconditionError("syndrome_measure: code has no syndrome modulus");
  }
  const int m = *code.modulus();
  const Eigen::Index d = rho.matrix().rows();
  std::vector<SyndromeOutcome> outcomes;
  for (int residue = 0; residue < m; ++residue) {
    Matrix projected = Matrix::Zero(d, d);
    for (Eigen::Index a = residue; a < d; a += m) {
      for (Eigen::Index b = residue; b < d; b += m) projected(a, b) = rho.matrix()(a, b);
    }
    const double p = projected.trace().real();
    SyndromeOutcome outcome{residue, p, std::nullopt};
    if (p > 1e-14) outcome.post_state = DensityMatrix(projected / p, rho.dims());
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

Recovery build_recovery(const BosonicCode& code, const thermch::ThermalGaussianMap& map) {
  if (!code.modulus()) {
    throw PreconditionError("build_recovery: code has no syndrome modulus");
  }
  const int m = *code.modulus();
  const int base = residue_of(code.word(0), m);
  const auto d = static_cast<Eigen::Index>(code.dim());
  const auto jumps = thermch::jump_operators(map.eps(), map.n_ch(), FockSpace(code.dim()));

  struct Candidate {
    const Operator* op;
    int shift;
    const char* label;
  };
  std::vector<Candidate> candidates{{&jumps.no_jump, 0, "none"}, {&jumps.loss, -1, "loss"}};
  if (code.variant() == CodeVariant::kLossAndGain) {
    candidates.push_back({&jumps.gain, +1, "gain"});
  }

  Recovery recovery;
  for (int residue = 0; residue < m; ++residue) {
    recovery.branches.push_back({residue, "failure", Matrix(), Matrix::Zero(d, d)});
  }
  for (const auto& c : candidates) {
    const int residue = ((base + c.shift) % m + m) % m;
    auto& branch = recovery.branches[static_cast<std::size_t>(residue)];
    if (branch.error_label != "failure") {
      throw PreconditionError("build_recovery: two errors share one syndrome");
    }
    Matrix words(d, 2);
    words.col(0) = c.op->matrix() * code.word(0);
    words.col(1) = c.op->matrix() * code.word(1);
    const auto ortho = orthonormalize(words);
    if (!ortho) continue;
    branch.error_label = c.label;
    branch.error_words = *ortho;
    Matrix code_words(d, 2);
    code_words.col(0) = code.word(0);
    code_words.col(1) = code.word(1);
    branch.isometry = code_words * ortho->adjoint();
  }
  return recovery;
}

Matrix2 correct_and_decode(const Matrix& rho, const BosonicCode& code,
                           const Recovery& recovery) {
  if (!code.modulus()) return completed_block(rho, code);
  const int m = *code.modulus();
  const Eigen::Index d = rho.rows();
  Matrix2 logical = Matrix2::Zero();
  for (const auto& branch : recovery.branches) {
    Complex weight = 0.0;
    for (Eigen::Index a = branch.residue; a < d; a += m) weight += rho(a, a);
    Matrix2 recovered = Matrix2::Zero();
    if (branch.error_words.size() > 0) {
      Matrix e = Matrix::Zero(d, 2);
      const Eigen::Index rows = std::min(d, branch.error_words.rows());
      e.topRows(rows) = branch.error_words.topRows(rows);
      // e lives inside the residue class, so e^dag P rho P e = e^dag rho e.
      recovered = e.adjoint() * rho * e;
    }
    logical += recovered + 0.5 * (weight - recovered.trace()) * Matrix2::Identity();
  }
  return logical;
}

QubitChannel logical_channel(const BosonicCode& code,
                             const thermch::ThermalGaussianMap& map, bool correct) {
  std::optional<Recovery> recovery;
  if (correct && code.modulus()) recovery = build_recovery(code, map);
  return QubitChannel([&](const Matrix2& logical_in) -> Matrix2 {
    Matrix encoded = Matrix::Zero(static_cast<Eigen::Index>(code.dim()),
                                  static_cast<Eigen::Index>(code.dim()));
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        encoded += logical_in(i, j) * code.word(i) * code.word(j).adjoint();
      }
    }
    const Matrix out = thermch::thermal_map_action(encoded, map);
    Matrix full = Matrix::Zero(std::max(out.rows(), encoded.rows()),
                               std::max(out.rows(), encoded.rows()));
    full.topLeftCorner(out.rows(), out.cols()) = out;
    if (recovery) return correct_and_decode(full, code, *recovery);
    return completed_block(full, code);
  });
}

TransferFidelity corrected_transfer_fidelity(const BosonicCode& code,
                                             const thermch::ThermalGaussianMap& map) {
  const BosonicCode trivial = make_code(CodeVariant::kNone, 2);
  return {average_qubit_fidelity(logical_channel(code, map, true)),
          average_qubit_fidelity(logical_channel(trivial, map, false))};
}

}  // namespace xferlab::bosoncode
