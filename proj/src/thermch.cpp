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

#include "xferlab/thermch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace xferlab::thermch {
namespace {

long double log_binomial(std::size_t n, std::size_t m) {
  return std::lgamma(static_cast<long double>(n) + 1.0L) -
         std::lgamma(static_cast<long double>(m) + 1.0L) -
         std::lgamma(static_cast<long double>(n - m) + 1.0L);
}

// exponent * log(base) with 0 * log(0) = 0.
long double weighted_log(std::size_t twice_exponent, long double base) {
  if (twice_exponent == 0) return 0.0L;
  if (base <= 0.0L) return -INFINITY;
  return 0.5L * static_cast<long double>(twice_exponent) * std::log(base);
}

std::size_t support_dim(const Matrix& x) {
  const Eigen::Index d = x.rows();
  for (Eigen::Index n = d - 1; n >= 0; --n) {
    if (x.row(n).cwiseAbs().maxCoeff() > 0.0 || x.col(n).cwiseAbs().maxCoeff() > 0.0) {
      return static_cast<std::size_t>(n + 1);
    }
  }
  return 1;
}

// Columns n, rows r: amplitude table for one noise photon number k.
Matrix coefficient_table(std::size_t out_dim, std::size_t in_dim, std::size_t k,
                         double eps) {
  Matrix table = Matrix::Zero(static_cast<Eigen::Index>(out_dim),
                              static_cast<Eigen::Index>(in_dim));
  for (std::size_t n = 0; n < in_dim; ++n) {
    for (std::size_t r = 0; r < out_dim && r <= n + k; ++r) {
      table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n)) =
          kraus_coefficient(r, n, k, eps);
    }
  }
  return table;
}

}  // namespace

double channel_loss(double length, double absorption_length) {
  if (length < 0.0 || absorption_length <= 0.0) {
    throw PreconditionError("channel_loss: need L >= 0 and L_ab > 0");
  }
  return -std::expm1(-length / absorption_length);
}

double absorption_length_from_db(double db_per_metre) {
  if (db_per_metre <= 0.0) {
    throw PreconditionError("absorption_length_from_db: loss must be positive");
  }
  // Power attenuation exp(-L/L_ab) equals 10^(-dB L / 10).
  return 10.0 / (db_per_metre * std::log(10.0));
}

double combine_errors(double eps_p, double eps_ch) {
  if (eps_p < 0.0 || eps_p > 1.0 || eps_ch < 0.0 || eps_ch > 1.0) {
    throw PreconditionError("combine_errors: errors must lie in [0, 1]");
  }
  return eps_ch + eps_p - eps_ch * eps_p;
}

double error_budget(double eps, double gamma_min, double gamma_c, double t_enc) {
  if (gamma_min < 0.0 || t_enc < 0.0 || gamma_c < 0.0) {
    throw PreconditionError("error_budget: rates and times must be non-negative");
  }
  if (gamma_min == 0.0) return eps;
  if (gamma_c <= 0.0) {
    throw PreconditionError("error_budget: cooling rate must be positive");
  }
  return eps + gamma_min / gamma_c + gamma_min * t_enc;
}

double absorption_noise_occupation(const ChannelParams& params) {
  if (params.n_mat.size() < 2) {
    throw PreconditionError(
        "absorption_noise_occupation: material profile needs at least two samples");
  }
  if (params.length <= 0.0 || params.absorption_length <= 0.0) {
    throw PreconditionError("absorption_noise_occupation: need L, L_ab > 0");
  }
  const double l = params.length;
  const double lab = params.absorption_length;
  const std::size_t segments = params.n_mat.size() - 1;
  const double h = l / static_cast<double>(segments);
  // Exact integral of exp(-(L-z)/L_ab) against the piecewise-linear
  // interpolant of N_mat. On [z0, z0 + h] with u = z - z0:
  //   int exp((z0+u-L)/L_ab) (N0 + (N1-N0) u/h) du.
  double integral = 0.0;
  for (std::size_t j = 0; j < segments; ++j) {
    const double z0 = static_cast<double>(j) * h;
    const double n0 = params.n_mat[j];
    const double n1 = params.n_mat[j + 1];
    const double w = std::exp((z0 - l) / lab);
    const double e = std::expm1(h / lab);                // exp(h/Lab) - 1
    const double m0 = lab * e;                           // int exp(u/Lab) du
    const double m1 = lab * (h * (e + 1.0) - lab * e);   // int u exp(u/Lab) du
    integral += w * (n0 * m0 + (n1 - n0) * m1 / h);
  }
  return integral / (channel_loss(l, lab) * lab);
}

double error_rate(double eps, double n_ch) { return eps * (n_ch + 0.5); }

ThermalGaussianMap::ThermalGaussianMap(double eps, double n_ch)
    : eps_(eps), n_ch_(n_ch) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw PreconditionError("ThermalGaussianMap: eps must lie in [0, 1]");
  }
  if (!(n_ch >= 0.0)) {
    throw PreconditionError("ThermalGaussianMap: occupation must be non-negative");
  }
}

double kraus_coefficient(std::size_t r, std::size_t n, std::size_t k, double eps) {
  if (r > n + k) return 0.0;
  const long double le = static_cast<long double>(eps);
  const long double norm =
      0.5L * (log_binomial(n + k, n) - log_binomial(n + k, r));
  const std::size_t i_min = r > k ? r - k : 0;
  const std::size_t i_max = std::min(n, r);
  long double sum = 0.0L;
  for (std::size_t i = i_min; i <= i_max; ++i) {
    const long double log_term = weighted_log(n + r - 2 * i, le) +
                                 weighted_log(k + 2 * i - r, 1.0L - le) +
                                 log_binomial(n, i) + log_binomial(k, r - i) + norm;
    if (!std::isfinite(log_term)) continue;
    const long double term = std::exp(log_term);
    sum += ((n - i) % 2 == 0) ? term : -term;
  }
  return static_cast<double>(sum);
}

Matrix KrausSet::apply(const Matrix& rho) const {
  if (rho.rows() != static_cast<Eigen::Index>(space.dim()) || rho.cols() != rho.rows()) {
    throw PreconditionError("KrausSet::apply: operator does not match the input space");
  }
  const Eigen::Index od = operators.empty() ? rho.rows() : operators.front().matrix.rows();
  Matrix out = Matrix::Zero(od, od);
  for (const auto& op : operators) out += op.matrix * rho * op.matrix.adjoint();
  return out;
}

KrausSet build_kraus_set(const ThermalGaussianMap& map, FockSpace space,
                         std::optional<std::size_t> checked_levels) {
  const std::size_t dim = space.dim();
  const std::size_t k_max = thermal_truncation(map.n_ch());
  const std::vector<double> weights = thermal_weights(map.n_ch(), k_max);
  const std::size_t q_max = dim + k_max;
  const std::size_t checked = checked_levels.value_or(dim / 2);
  if (checked == 0 || checked > dim) {
    throw PreconditionError("build_kraus_set: checked levels out of range");
  }

  KrausSet set{space, {}, weights, k_max, q_max, 0.0, checked};
  const auto d = static_cast<Eigen::Index>(dim);
  const std::size_t out_dim = thermal_map_output_dim(map, dim);
  const auto od = static_cast<Eigen::Index>(out_dim);
  for (std::size_t k = 0; k < k_max; ++k) {
    const Matrix table = coefficient_table(out_dim, dim, k, map.eps());
    const double amp = std::sqrt(weights[k]);
    for (std::size_t q = 0; q <= q_max; ++q) {
      Matrix kq = Matrix::Zero(od, d);
      bool nonzero = false;
      for (std::size_t r = 0; r < out_dim; ++r) {
        if (r + q < k) continue;
        const std::size_t n = r + q - k;
        if (n >= dim) continue;
        const Complex c = amp * table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n));
        if (c == 0.0) continue;
        kq(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n)) = c;
        nonzero = true;
      }
      if (nonzero) set.operators.push_back({k, q, std::move(kq)});
    }
  }

  Matrix completeness = Matrix::Zero(d, d);
  for (const auto& op : set.operators) completeness += op.matrix.adjoint() * op.matrix;
  const auto c = static_cast<Eigen::Index>(checked);
  set.completeness_defect =
      (completeness.topLeftCorner(c, c) - Matrix::Identity(c, c)).cwiseAbs().maxCoeff();
  return set;
}

std::size_t thermal_map_output_dim(const ThermalGaussianMap& map,
                                   std::size_t input_dim) {
  return input_dim + thermal_truncation(map.n_ch()) - 1;
}

Matrix thermal_map_action(const Matrix& x, const ThermalGaussianMap& map,
                          std::optional<std::size_t> output_dim) {
  if (x.rows() != x.cols()) {
    throw PreconditionError("thermal_map_action: operator is not square");
  }
  const std::size_t in_dim = support_dim(x);
  const std::size_t k_max = thermal_truncation(map.n_ch());
  const std::vector<double> weights = thermal_weights(map.n_ch(), k_max);
  const std::size_t out_dim =
      output_dim.value_or(std::max<std::size_t>(
          2, thermal_map_output_dim(map, in_dim)));
  const auto od = static_cast<Eigen::Index>(out_dim);

  Matrix out = Matrix::Zero(od, od);
  for (std::size_t k = 0; k < k_max; ++k) {
    const Matrix table = coefficient_table(out_dim, in_dim, k, map.eps());
    // Photon-number conservation n + k = r + q fixes the shift r - n = k - q,
    // so only pairs with equal shift interfere.
    const long lo = -static_cast<long>(in_dim) + 1;
    const long hi = static_cast<long>(k);
    for (long shift = lo; shift <= hi; ++shift) {
      for (std::size_t n = 0; n < in_dim; ++n) {
        const long r = static_cast<long>(n) + shift;
        if (r < 0 || r >= static_cast<long>(out_dim)) continue;
        const Complex a = table(r, static_cast<Eigen::Index>(n));
        if (a == 0.0) continue;
        for (std::size_t n2 = 0; n2 < in_dim; ++n2) {
          const long r2 = static_cast<long>(n2) + shift;
          if (r2 < 0 || r2 >= static_cast<long>(out_dim)) continue;
          const Complex b = table(r2, static_cast<Eigen::Index>(n2));
          if (b == 0.0) continue;
          out(r, r2) += weights[k] * a * b *
                        x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n2));
        }
      }
    }
  }
  return out;
}

DensityMatrix apply_thermal_map(const DensityMatrix& rho,
                                const ThermalGaussianMap& map,
                                std::size_t max_output_dim) {
  const std::size_t needed = thermal_map_output_dim(map, support_dim(rho.matrix()));
  if (needed > max_output_dim) {
    std::ostringstream os;
    os << "apply_thermal_map: output needs " << needed << " levels, cap is "
       << max_output_dim;
    throw PreconditionError(os.str());
  }
  Matrix out = thermal_map_action(rho.matrix(), map, std::max<std::size_t>(needed, 2));
  out = 0.5 * (out + out.adjoint()).eval();
  const auto d = static_cast<std::size_t>(out.rows());
  return DensityMatrix(std::move(out), {d});
}

JumpOperators jump_operators(double eps, double n_ch, FockSpace space) {
  const Operator a = ladder_operator(space);
  const Operator n = number_operator(space);
  const Operator id = identity_operator(space);
  Operator no_jump =
      id - Complex(eps) * (Complex(n_ch + 0.5) * n + Complex(0.5 * n_ch) * id);
  return {no_jump, Complex(std::sqrt(eps * (n_ch + 1.0))) * a,
          Complex(std::sqrt(eps * n_ch)) * a.adjoint()};
}

Matrix first_order_map(const Matrix& rho, double eps, double n_ch) {
  if (rho.rows() != rho.cols()) {
    throw PreconditionError("first_order_map: operator is not square");
  }
  const auto d = rho.rows();
  Matrix padded = Matrix::Zero(d + 1, d + 1);
  padded.topLeftCorner(d, d) = rho;
  const auto ops = jump_operators(eps, n_ch, FockSpace(static_cast<std::size_t>(d + 1)));
  Matrix out = Matrix::Zero(d + 1, d + 1);
  for (const Operator* e : {&ops.no_jump, &ops.loss, &ops.gain}) {
    out += e->matrix() * padded * e->matrix().adjoint();
  }
  return out;
}

}  // namespace xferlab::thermch
