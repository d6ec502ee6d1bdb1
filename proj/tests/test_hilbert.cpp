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
#include <random>

#include "oracles.hpp"
#include "xferlab/error.hpp"
#include "xferlab/hilbert.hpp"

namespace xferlab {
namespace {

TEST(FockSpace, RejectsTinyDimension) {
  EXPECT_THROW(FockSpace(1), PreconditionError);
  EXPECT_EQ(FockSpace(5).dim(), 5u);
}

TEST(Ladder, ActsOnNumberStates) {
  const Operator a = ladder_operator(FockSpace(6));
  for (int n = 1; n < 6; ++n) EXPECT_NEAR(std::abs(a.matrix()(n - 1, n)), std::sqrt(n), 1e-15);
  const Matrix comm = a.matrix() * a.matrix().adjoint() - a.matrix().adjoint() * a.matrix();
  for (int n = 0; n < 5; ++n) EXPECT_NEAR(comm(n, n).real(), 1.0, 1e-14);
  const Operator num = number_operator(FockSpace(6));
  EXPECT_TRUE(num.is_hermitian());
  EXPECT_NEAR(num.matrix()(4, 4).real(), 4.0, 1e-15);
}

TEST(Thermal, TruncationFollowsGeometricTail) {
  EXPECT_EQ(thermal_truncation(0.0), 1u);
  // (1/2)^K < 1e-8 first at K = 27.
  EXPECT_EQ(thermal_truncation(1.0), 27u);
  EXPECT_THROW(thermal_weights(1.0, 10), TruncationError);
  const auto p = thermal_weights(2.0, thermal_truncation(2.0));
  double total = 0.0, mean = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    total += p[k];
    mean += double(k) * p[k];
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
  EXPECT_NEAR(mean, 2.0, 1e-5);
  EXPECT_NEAR(thermal_weight(2.0, 3), 8.0 / 81.0, 1e-15);
}

TEST(Thermal, StateOccupation) {
  const FockSpace space(thermal_truncation(1.5));
  const DensityMatrix rho = thermal_state(1.5, space);
  EXPECT_NEAR(rho.expectation(number_operator(space)), 1.5, 1e-5);
  EXPECT_THROW(thermal_state(1.5, FockSpace(5)), TruncationError);
}

TEST(DensityMatrix, ValidatesInvariants) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  EXPECT_NO_THROW(DensityMatrix(m, {2}));
  Matrix bad_trace = m * 2.0;
  EXPECT_THROW(DensityMatrix(bad_trace, {2}), PreconditionError);
  Matrix non_herm = m;
  non_herm(0, 1) = 0.3;
  EXPECT_THROW(DensityMatrix(non_herm, {2}), PreconditionError);
  Matrix negative = Matrix::Zero(2, 2);
  negative(0, 0) = 1.5;
  negative(1, 1) = -0.5;
  EXPECT_THROW(DensityMatrix(negative, {2}), PreconditionError);
}

TEST(QubitState, Normalizes) {
  EXPECT_THROW(QubitState(1.0, 1.0), PreconditionError);
  const QubitState q(Complex(0.6), Complex(0.0, 0.8));
  EXPECT_NEAR(q.vector().norm(), 1.0, 1e-15);
}

TEST(Tensor, PartialTraceOfBellPairIsMixed) {
  Vector bell = Vector::Zero(4);
  bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
  const DensityMatrix rho = DensityMatrix::pure(bell, {2, 2});
  const DensityMatrix red = partial_trace(rho, 1);
  EXPECT_NEAR((red.matrix() - 0.5 * Matrix::Identity(2, 2)).norm(), 0.0, 1e-15);
}

TEST(Tensor, PartialTraceOfProductKeepsFactor) {
  std::mt19937_64 rng(3);
  const Matrix a = oracle::random_density(3, rng);
  const Matrix b = oracle::random_density(4, rng);
  const DensityMatrix ab = tensor(DensityMatrix(a, {3}), DensityMatrix(b, {4}));
  EXPECT_EQ(ab.dim(), 12u);
  EXPECT_NEAR((partial_trace(ab, 1).matrix() - a).norm(), 0.0, 1e-13);
  EXPECT_NEAR((partial_trace(ab, 0).matrix() - b).norm(), 0.0, 1e-13);
}

TEST(Propagator, MatchesClosedFormForPauliX) {
  Matrix sx(2, 2);
  sx << 0, 1, 1, 0;
  const Operator h(sx, {2});
  const double t = 0.7;
  const Matrix u = propagator(h, t);
  Matrix expected = std::cos(t) * Matrix::Identity(2, 2) - Complex(0, std::sin(t)) * sx;
  EXPECT_NEAR((u - expected).norm(), 0.0, 1e-14);
  Matrix nh = sx;
  nh(0, 1) = 2.0;
  EXPECT_THROW(propagator(Operator(nh, {2}), t), PreconditionError);
}

TEST(Propagator, AgreesWithRk4) {
  std::mt19937_64 rng(11);
  const Matrix r = oracle::random_density(5, rng);
  const Operator h(r * 3.0, {5});
  Vector psi = Vector::Zero(5);
  psi[0] = 1.0;
  const Vector exact = propagator(h, 1.3) * psi;
  const Vector ref = oracle::rk4_schrodinger(h.matrix(), psi, 1.3, 4000);
  EXPECT_NEAR((exact - ref).norm(), 0.0, 1e-10);
}

TEST(Fidelity, PureStateAndTraceDistance) {
  Vector zero = Vector::Zero(2), one = Vector::Zero(2);
  zero[0] = 1.0;
  one[1] = 1.0;
  const DensityMatrix rho0 = DensityMatrix::pure(zero, {2});
  EXPECT_NEAR(pure_state_fidelity(rho0, zero), 1.0, 1e-15);
  EXPECT_NEAR(pure_state_fidelity(rho0, one), 0.0, 1e-15);
  EXPECT_THROW(pure_state_fidelity(rho0, 2.0 * zero), PreconditionError);
  EXPECT_NEAR(trace_distance(rho0.matrix(), DensityMatrix::pure(one, {2}).matrix()), 1.0,
              1e-14);
}

TEST(QubitChannel, KnownAverages) {
  const QubitChannel identity([](const Matrix2& x) { return x; });
  EXPECT_NEAR(average_qubit_fidelity(identity), 1.0, 1e-15);
  const QubitChannel depolarize(
      [](const Matrix2& x) -> Matrix2 { return 0.5 * x.trace() * Matrix2::Identity(); });
  EXPECT_NEAR(average_qubit_fidelity(depolarize), 0.5, 1e-15);
  const double p = 0.2;
  const QubitChannel dephase([p](const Matrix2& x) -> Matrix2 {
    Matrix2 z;
    z << 1, 0, 0, -1;
    return (1 - p) * x + p * z * x * z;
  });
  EXPECT_NEAR(average_qubit_fidelity(dephase), 1.0 - 2.0 * p / 3.0, 1e-14);
  const QubitChannel lossy([](const Matrix2& x) -> Matrix2 { return 0.5 * x; });
  EXPECT_THROW(average_qubit_fidelity(lossy), PreconditionError);
}

TEST(QubitChannel, AmplitudeDampingMatchesHaarMonteCarlo) {
  const double g = 0.3;
  auto damp = [g](const Matrix2& x) -> Matrix2 {
    Matrix2 k0, k1;
    k0 << 1, 0, 0, std::sqrt(1 - g);
    k1 << 0, std::sqrt(g), 0, 0;
    return k0 * x * k0.adjoint() + k1 * x * k1.adjoint();
  };
  std::mt19937_64 rng(5);
  const double mc = oracle::haar_average_fidelity(damp, 200000, rng);
  const QubitChannel ch(damp);
  EXPECT_NEAR(average_qubit_fidelity(ch), mc, 2e-3);
  EXPECT_GE(ch.min_choi_eigenvalue(), -1e-14);
  EXPECT_LT(ch.trace_defect(), 1e-15);
}

}  // namespace
}  // namespace xferlab
