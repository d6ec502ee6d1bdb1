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

#include "xferlab/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace xferlab {
namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

void check_dims(const Matrix& m, const std::vector<std::size_t>& dims,
                const char* what) {
  if (m.rows() != m.cols()) {
    throw PreconditionError(std::string(what) + ": matrix is not square");
  }
  if (dims.empty() || product(dims) != static_cast<std::size_t>(m.rows())) {
    throw PreconditionError(std::string(what) +
                            ": subsystem dimensions do not match the matrix");
  }
}

std::vector<std::size_t> concat(const std::vector<std::size_t>& a,
                                const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

FockSpace::FockSpace(std::size_t dim) : dim_(dim) {
  if (dim < 2) {
    throw PreconditionError("FockSpace: dimension must be at least 2");
  }
}

Operator::Operator(Matrix matrix, std::vector<std::size_t> dims)
    : matrix_(std::move(matrix)), dims_(std::move(dims)) {
  check_dims(matrix_, dims_, "Operator");
}

bool Operator::is_hermitian(double tol) const {
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

Operator operator*(const Operator& a, const Operator& b) {
  if (a.dims() != b.dims()) {
    throw PreconditionError("Operator product: dimension mismatch");
  }
  return Operator(a.matrix() * b.matrix(), a.dims());
}

Operator operator+(const Operator& a, const Operator& b) {
  if (a.dims() != b.dims()) {
    throw PreconditionError("Operator sum: dimension mismatch");
  }
  return Operator(a.matrix() + b.matrix(), a.dims());
}

Operator operator-(const Operator& a, const Operator& b) {
  if (a.dims() != b.dims()) {
    throw PreconditionError("Operator difference: dimension mismatch");
  }
  return Operator(a.matrix() - b.matrix(), a.dims());
}

Operator operator*(Complex s, const Operator& a) {
  return Operator(s * a.matrix(), a.dims());
}

DensityMatrix::DensityMatrix(Matrix matrix, std::vector<std::size_t> dims)
    : matrix_(std::move(matrix)), dims_(std::move(dims)) {
  check_dims(matrix_, dims_, "DensityMatrix");
  const double herm = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTol) {
    std::ostringstream os;
    os << "DensityMatrix: not Hermitian (deviation " << herm << ")";
    throw PreconditionError(os.str());
  }
  const double trace = matrix_.trace().real();
  if (std::abs(trace - 1.0) > kTraceTol) {
    std::ostringstream os;
    os << "DensityMatrix: trace " << trace << " differs from 1";
    throw PreconditionError(os.str());
  }
  const double lowest = eigenvalues().minCoeff();
  if (lowest < -kPositivityTol) {
    std::ostringstream os;
    os << "DensityMatrix: negative eigenvalue " << lowest;
    throw PreconditionError(os.str());
  }
}

DensityMatrix DensityMatrix::pure(const Vector& psi,
                                  std::vector<std::size_t> dims) {
  return DensityMatrix(psi * psi.adjoint(), std::move(dims));
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim),
                       {dim});
}

double DensityMatrix::expectation(const Operator& op) const {
  if (op.dim() != dim()) {
    throw PreconditionError("expectation: dimension mismatch");
  }
  return (matrix_ * op.matrix()).trace().real();
}

Eigen::VectorXd DensityMatrix::eigenvalues() const {
  const Matrix herm = 0.5 * (matrix_ + matrix_.adjoint());
  return Eigen::SelfAdjointEigenSolver<Matrix>(herm, Eigen::EigenvaluesOnly)
      .eigenvalues();
}

QubitState::QubitState(Complex alpha, Complex beta)
    : alpha_(alpha), beta_(beta) {
  const double norm = std::norm(alpha) + std::norm(beta);
  if (std::abs(norm - 1.0) > 1e-12) {
    throw PreconditionError("QubitState: |alpha|^2 + |beta|^2 must be 1");
  }
}

Operator ladder_operator(FockSpace space) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  Matrix a = Matrix::Zero(d, d);
  for (Eigen::Index n = 1; n < d; ++n) {
    a(n - 1, n) = std::sqrt(static_cast<double>(n));
  }
  return Operator(space, std::move(a));
}

Operator number_operator(FockSpace space) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  Matrix n = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) n(k, k) = static_cast<double>(k);
  return Operator(space, std::move(n));
}

Operator identity_operator(FockSpace space) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  return Operator(space, Matrix::Identity(d, d));
}

double thermal_weight(double mean_occupation, std::size_t k) {
  if (mean_occupation == 0.0) return k == 0 ? 1.0 : 0.0;
  const double ratio = mean_occupation / (mean_occupation + 1.0);
  return std::pow(ratio, static_cast<double>(k)) / (mean_occupation + 1.0);
}

std::size_t thermal_truncation(double mean_occupation, double tail) {
  if (mean_occupation < 0.0) {
    throw PreconditionError("thermal occupation must be non-negative");
  }
  if (mean_occupation == 0.0) return 1;
  // Tail mass beyond K levels is ratio^K.
  const double ratio = mean_occupation / (mean_occupation + 1.0);
  std::size_t k = static_cast<std::size_t>(
      std::ceil(std::log(tail) / std::log(ratio)));
  while (std::pow(ratio, static_cast<double>(k)) >= tail) ++k;
  while (k > 1 && std::pow(ratio, static_cast<double>(k - 1)) < tail) --k;
  return std::max<std::size_t>(k, 1);
}

std::vector<double> thermal_weights(double mean_occupation, std::size_t dim,
                                    double tail) {
  if (mean_occupation < 0.0) {
    throw PreconditionError("thermal occupation must be non-negative");
  }
  const double ratio = mean_occupation / (mean_occupation + 1.0);
  const double lost = std::pow(ratio, static_cast<double>(dim));
  if (mean_occupation > 0.0 && lost >= tail) {
    std::ostringstream os;
    os << "thermal state with N=" << mean_occupation << " needs "
       << thermal_truncation(mean_occupation, tail)
       << " levels, truncation has " << dim;
    throw TruncationError(os.str());
  }
  std::vector<double> p(dim);
  for (std::size_t k = 0; k < dim; ++k) p[k] = thermal_weight(mean_occupation, k);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& w : p) w /= total;
  return p;
}

DensityMatrix thermal_state(double mean_occupation, FockSpace space) {
  const auto p = thermal_weights(mean_occupation, space.dim());
  const auto d = static_cast<Eigen::Index>(space.dim());
  Matrix rho = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) rho(k, k) = p[static_cast<std::size_t>(k)];
  return DensityMatrix(space, std::move(rho));
}

namespace {
Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}
}  // namespace

Operator tensor(const Operator& a, const Operator& b) {
  return Operator(kron(a.matrix(), b.matrix()), concat(a.dims(), b.dims()));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(kron(a.matrix(), b.matrix()), concat(a.dims(), b.dims()));
}

Vector tensor(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

Matrix partial_trace(const Matrix& m, const std::vector<std::size_t>& dims,
                     std::size_t index) {
  check_dims(m, dims, "partial_trace");
  if (index >= dims.size()) {
    throw PreconditionError("partial_trace: subsystem index out of range");
  }
  if (dims.size() < 2) {
    throw PreconditionError("partial_trace: state has a single subsystem");
  }
  std::size_t left = 1;
  for (std::size_t j = 0; j < index; ++j) left *= dims[j];
  const std::size_t mid = dims[index];
  std::size_t right = 1;
  for (std::size_t j = index + 1; j < dims.size(); ++j) right *= dims[j];

  const auto out_dim = static_cast<Eigen::Index>(left * right);
  Matrix out = Matrix::Zero(out_dim, out_dim);
  auto flat = [&](std::size_t l, std::size_t k, std::size_t r) {
    return static_cast<Eigen::Index>((l * mid + k) * right + r);
  };
  for (std::size_t l = 0; l < left; ++l) {
    for (std::size_t r = 0; r < right; ++r) {
      const auto row = static_cast<Eigen::Index>(l * right + r);
      for (std::size_t l2 = 0; l2 < left; ++l2) {
        for (std::size_t r2 = 0; r2 < right; ++r2) {
          const auto col = static_cast<Eigen::Index>(l2 * right + r2);
          Complex sum = 0.0;
          for (std::size_t k = 0; k < mid; ++k) sum += m(flat(l, k, r), flat(l2, k, r2));
          out(row, col) = sum;
        }
      }
    }
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::size_t index) {
  std::vector<std::size_t> dims = rho.dims();
  Matrix reduced = partial_trace(rho.matrix(), dims, index);
  dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(index));
  return DensityMatrix(std::move(reduced), std::move(dims));
}

Matrix propagator(const Operator& hamiltonian, double t) {
  const double scale = std::max(1.0, hamiltonian.matrix().cwiseAbs().maxCoeff());
  if (!hamiltonian.is_hermitian(1e-12 * scale)) {
    throw PreconditionError("propagator: Hamiltonian is not Hermitian");
  }
  const Matrix herm = 0.5 * (hamiltonian.matrix() + hamiltonian.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(herm);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  Vector phases(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    phases(k) = std::exp(Complex(0.0, -lambda(k) * t));
  }
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

DensityMatrix evolve_unitary(const Operator& hamiltonian, double t,
                             const DensityMatrix& rho) {
  if (hamiltonian.dim() != rho.dim()) {
    throw PreconditionError("evolve_unitary: dimension mismatch");
  }
  const Matrix u = propagator(hamiltonian, t);
  Matrix out = u * rho.matrix() * u.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(std::move(out), rho.dims());
}

double pure_state_fidelity(const DensityMatrix& rho, const Vector& psi) {
  if (static_cast<std::size_t>(psi.size()) != rho.dim()) {
    throw PreconditionError("pure_state_fidelity: dimension mismatch");
  }
  if (std::abs(psi.squaredNorm() - 1.0) > 1e-9) {
    throw PreconditionError("pure_state_fidelity: state is not normalized");
  }
  const double f = psi.dot(rho.matrix() * psi).real();
  return std::clamp(f, 0.0, 1.0);
}

double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw PreconditionError("trace_distance: dimension mismatch");
  }
  const Matrix diff = a - b;
  const Matrix herm = 0.5 * (diff + diff.adjoint());
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Matrix>(herm, Eigen::EigenvaluesOnly).eigenvalues();
  return 0.5 * ev.cwiseAbs().sum();
}

QubitChannel::QubitChannel(const LinearMap& map) : choi_(Matrix4::Zero()) {
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Matrix2 unit = Matrix2::Zero();
      unit(i, j) = 1.0;
      choi_.block<2, 2>(2 * i, 2 * j) = map(unit);
    }
  }
}

Matrix2 QubitChannel::apply(const Matrix2& rho) const {
  Matrix2 out = Matrix2::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) out += rho(i, j) * choi_.block<2, 2>(2 * i, 2 * j);
  }
  return out;
}

double QubitChannel::trace_defect() const {
  double defect = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const Complex tr = choi_.block<2, 2>(2 * i, 2 * j).trace();
      defect = std::max(defect, std::abs(tr - (i == j ? 1.0 : 0.0)));
    }
  }
  return defect;
}

double QubitChannel::min_choi_eigenvalue() const {
  const Matrix4 herm = 0.5 * (choi_ + choi_.adjoint());
  return Eigen::SelfAdjointEigenSolver<Matrix4>(herm, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

double entanglement_fidelity(const QubitChannel& channel) {
  const Matrix4& j = channel.choi();
  Complex sum = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) sum += j(2 * a + a, 2 * b + b);
  }
  return sum.real() / 4.0;
}

double average_qubit_fidelity(const QubitChannel& channel) {
  const double defect = channel.trace_defect();
  if (defect > 1e-6) {
    std::ostringstream os;
    os << "average_qubit_fidelity: channel is not trace preserving (defect "
       << defect << ")";
    throw PreconditionError(os.str());
  }
  return std::clamp((2.0 * entanglement_fidelity(channel) + 1.0) / 3.0, 0.0, 1.0);
}

}  // namespace xferlab
