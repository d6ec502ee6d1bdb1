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

// Dense truncated Fock-space linear algebra shared by every other module.
//
// Multi-mode objects carry the list of subsystem dimensions so that tensor
// products and partial traces can be checked. Subsystem 0 is the leftmost
// (most significant) factor of the Kronecker product.

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "xferlab/error.hpp"

namespace xferlab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;

/// Number states |0>..|dim-1> of a single bosonic mode.
class FockSpace {
 public:
  explicit FockSpace(std::size_t dim);
  std::size_t dim() const { return dim_; }
  bool operator==(const FockSpace&) const = default;

 private:
  std::size_t dim_;
};

/// Square matrix acting on a (possibly composite) truncated space.
class Operator {
 public:
  Operator(Matrix matrix, std::vector<std::size_t> dims);
  explicit Operator(FockSpace space, Matrix matrix)
      : Operator(std::move(matrix), {space.dim()}) {}

  const Matrix& matrix() const { return matrix_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  Operator adjoint() const { return Operator(matrix_.adjoint(), dims_); }
  bool is_hermitian(double tol = 1e-12) const;

 private:
  Matrix matrix_;
  std::vector<std::size_t> dims_;
};

Operator operator*(const Operator& a, const Operator& b);
Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(Complex s, const Operator& a);

/// Mixed state. Construction validates Hermiticity (1e-10), unit trace
/// (1e-9) and positivity (eigenvalues >= -1e-9).
class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-10;
  static constexpr double kTraceTol = 1e-9;
  static constexpr double kPositivityTol = 1e-9;

  DensityMatrix(Matrix matrix, std::vector<std::size_t> dims);
  DensityMatrix(FockSpace space, Matrix matrix)
      : DensityMatrix(std::move(matrix), {space.dim()}) {}

  static DensityMatrix pure(const Vector& psi, std::vector<std::size_t> dims);
  static DensityMatrix pure(const Vector& psi) {
    return pure(psi, {static_cast<std::size_t>(psi.size())});
  }
  static DensityMatrix maximally_mixed(std::size_t dim);

  const Matrix& matrix() const { return matrix_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  double expectation(const Operator& op) const;
  Eigen::VectorXd eigenvalues() const;

 private:
  Matrix matrix_;
  std::vector<std::size_t> dims_;
};

/// Logical qubit alpha|0> + beta|1>, normalized to 1e-12.
class QubitState {
 public:
  QubitState(Complex alpha, Complex beta);
  Complex alpha() const { return alpha_; }
  Complex beta() const { return beta_; }
  Eigen::Vector2cd vector() const { return {alpha_, beta_}; }

 private:
  Complex alpha_;
  Complex beta_;
};

/// a with a|n> = sqrt(n)|n-1>.
Operator ladder_operator(FockSpace space);
Operator number_operator(FockSpace space);
Operator identity_operator(FockSpace space);

/// Geometric (Bose-Einstein) weights p_k = N^k/(N+1)^(k+1).
double thermal_weight(double mean_occupation, std::size_t k);

/// Smallest dimension whose geometric tail sum_{k>=dim} p_k is below `tail`.
std::size_t thermal_truncation(double mean_occupation, double tail = 1e-8);

/// Thermal weights truncated at `dim` levels and renormalized. Throws
/// TruncationError when the discarded tail exceeds `tail`.
std::vector<double> thermal_weights(double mean_occupation, std::size_t dim,
                                    double tail = 1e-8);

DensityMatrix thermal_state(double mean_occupation, FockSpace space);

Operator tensor(const Operator& a, const Operator& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
Vector tensor(const Vector& a, const Vector& b);

/// Traces out subsystem `index` of a composite state.
DensityMatrix partial_trace(const DensityMatrix& rho, std::size_t index);
Matrix partial_trace(const Matrix& m, const std::vector<std::size_t>& dims,
                     std::size_t index);

/// Unitary propagator exp(-iHt) (hbar = 1). Throws for non-Hermitian H.
Matrix propagator(const Operator& hamiltonian, double t);
DensityMatrix evolve_unitary(const Operator& hamiltonian, double t,
                             const DensityMatrix& rho);

/// <psi|rho|psi>; psi must be normalized to 1e-9.
double pure_state_fidelity(const DensityMatrix& rho, const Vector& psi);

/// Trace norm distance 0.5 * ||a - b||_1 for Hermitian arguments.
double trace_distance(const Matrix& a, const Matrix& b);

/// A linear map on 2x2 logical matrices, stored as its Choi matrix
/// J = sum_ij |i><j| (x) Lambda(|i><j|).
class QubitChannel {
 public:
  using LinearMap = std::function<Matrix2(const Matrix2&)>;

  explicit QubitChannel(const LinearMap& map);
  explicit QubitChannel(const Matrix4& choi) : choi_(choi) {}

  const Matrix4& choi() const { return choi_; }
  Matrix2 apply(const Matrix2& rho) const;
  /// max |Tr_out J - I|; zero for trace-preserving maps.
  double trace_defect() const;
  /// Smallest eigenvalue of the Hermitian part of J.
  double min_choi_eigenvalue() const;

 private:
  Matrix4 choi_;
};

/// <Phi|(1 (x) Lambda)(Phi)|Phi> for the maximally entangled pair.
double entanglement_fidelity(const QubitChannel& channel);

/// Haar-averaged <psi|Lambda(psi)|psi> = (2 F_e + 1) / 3. Throws
/// PreconditionError when the channel is not trace preserving to 1e-6.
double average_qubit_fidelity(const QubitChannel& channel);

}  // namespace xferlab
