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

#include "xferlab/toynet.hpp"

#include <Eigen/Sparse>
#include <boost/math/quadrature/gauss.hpp>
#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

#include "xferlab/error.hpp"

namespace xferlab::toynet {
namespace {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

// One conserved-excitation block of H with basis (n1, nc, n2), n1+nc+n2 = E.
struct Sector {
  std::size_t excitations = 0;
  std::vector<std::array<std::size_t, 3>> basis;
  std::vector<long> position;  // indexed by n1 * dc + nc, -1 when absent
  SparseMatrix h;
  double bound = 0.0;  // Gershgorin bound on the spectrum

  long find(std::size_t n1, std::size_t nc, std::size_t dc) const {
    return position[n1 * dc + nc];
  }
};

Sector build_sector(std::size_t e, const ToyDims& d, double g) {
  Sector s;
  s.excitations = e;
  s.position.assign(d.node * d.channel, -1);
  for (std::size_t n1 = 0; n1 < d.node && n1 <= e; ++n1) {
    for (std::size_t nc = 0; nc < d.channel && n1 + nc <= e; ++nc) {
      const std::size_t n2 = e - n1 - nc;
      if (n2 >= d.node) continue;
      s.position[n1 * d.channel + nc] = static_cast<long>(s.basis.size());
      s.basis.push_back({n1, nc, n2});
    }
  }
  std::vector<Eigen::Triplet<Complex>> triplets;
  const auto n = static_cast<long>(s.basis.size());
  std::vector<double> row_sum(s.basis.size(), 0.0);
  for (long col = 0; col < n; ++col) {
    const auto [n1, nc, n2] = s.basis[col];
    if (nc + 1 >= d.channel) continue;
    // L1 c^dag and L2 c^dag; the adjoint terms are added as the transpose.
    auto add = [&](long row, double amp) {
      triplets.emplace_back(row, col, g * amp);
      triplets.emplace_back(col, row, g * amp);
      row_sum[row] += g * amp;
      row_sum[col] += g * amp;
    };
    if (n1 >= 1) {
      const long row = s.find(n1 - 1, nc + 1, d.channel);
      if (row >= 0) add(row, std::sqrt(double(n1) * double(nc + 1)));
    }
    if (n2 >= 1) {
      const long row = s.find(n1, nc + 1, d.channel);
      if (row >= 0) add(row, std::sqrt(double(n2) * double(nc + 1)));
    }
  }
  s.h.resize(n, n);
  s.h.setFromTriplets(triplets.begin(), triplets.end());
  for (double r : row_sum) s.bound = std::max(s.bound, r);
  return s;
}

// exp(-i H t) v by a Chebyshev expansion on [-bound, bound].
Vector chebyshev_evolve(const Sector& s, const Vector& v, double t) {
  if (s.bound == 0.0 || t == 0.0) return v;
  const double a = 1.01 * s.bound;
  const double x = a * t;
  const SparseMatrix hs = s.h / a;
  Vector w_prev = v;
  Vector w = hs * v;
  Vector out = std::cyl_bessel_j(0.0, x) * v;
  Complex phase(0.0, -1.0);
  int small = 0;
  for (std::size_t k = 1;; ++k) {
    const double jk = std::cyl_bessel_j(static_cast<double>(k), x);
    out += 2.0 * phase * jk * w;
    if (static_cast<double>(k) > x && std::abs(jk) < 1e-17) {
      if (++small >= 2) break;
    }
    if (k > 100000) throw NumericalGuard("toy evolution: Chebyshev series did not converge");
    Vector w_next = 2.0 * (hs * w) - w_prev;
    w_prev = std::move(w);
    w = std::move(w_next);
    phase *= Complex(0.0, -1.0);
  }
  return out;
}

struct Accumulator {
  std::vector<std::array<Matrix2, 4>> blocks;  // per time, index 2i+j
  std::vector<std::array<double, 2>> n1;       // per time, per logical input
  std::vector<std::array<double, 2>> n2;
};

class SectorCache {
 public:
  SectorCache(ToyDims d, double g) : d_(d), g_(g) {}
  const Sector& get(std::size_t e) {
    while (sectors_.size() <= e) {
      sectors_.push_back(build_sector(sectors_.size(), d_, g_));
    }
    return sectors_[e];
  }

 private:
  ToyDims d_;
  double g_;
  std::deque<Sector> sectors_;
};

// Adds weight * contributions of |0, n, 0> and |1, n, 0> to the accumulator.
void accumulate_number_state(SectorCache& cache, const ToyDims& d, std::size_t n,
                             double weight, const std::vector<double>& times,
                             Accumulator& acc) {
  const Sector* sec[2] = {&cache.get(n), &cache.get(n + 1)};
  Vector psi[2];
  for (int i = 0; i < 2; ++i) {
    psi[i] = Vector::Zero(static_cast<long>(sec[i]->basis.size()));
    const long p = sec[i]->find(static_cast<std::size_t>(i), n, d.channel);
    if (p < 0) throw PreconditionError("toy model: initial state outside truncation");
    psi[i][p] = 1.0;
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0) {
      const double step = times[k] - times[k - 1];
      for (int i = 0; i < 2; ++i) psi[i] = chebyshev_evolve(*sec[i], psi[i], step);
    }
    for (int i = 0; i < 2; ++i) {
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t b = 0; b < sec[i]->basis.size(); ++b) {
        const double w = std::norm(psi[i][static_cast<long>(b)]);
        m1 += w * double(sec[i]->basis[b][0]);
        m2 += w * double(sec[i]->basis[b][2]);
      }
      acc.n1[k][i] += weight * m1;
      acc.n2[k][i] += weight * m2;
    }
    // B_ij[a][b] = sum_{n1,nc} psi_i(n1,nc,a) conj(psi_j(n1,nc,b)) (-1)^{a+b}.
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        Matrix2& block = acc.blocks[k][2 * i + j];
        for (std::size_t bi = 0; bi < sec[i]->basis.size(); ++bi) {
          const auto [n1, nc, a] = sec[i]->basis[bi];
          if (a > 1) continue;
          const long bb = static_cast<long>(a) + j - i;
          if (bb < 0 || bb > 1) continue;
          const long bj = sec[j]->find(n1, nc, d.channel);
          if (bj < 0) continue;
          const double sign = ((a + static_cast<std::size_t>(bb)) % 2 == 0) ? 1.0 : -1.0;
          block(static_cast<long>(a), bb) += weight * sign * psi[i][static_cast<long>(bi)] *
                                             std::conj(psi[j][bj]);
        }
      }
    }
  }
}

QubitChannel logical_channel(const std::array<Matrix2, 4>& blocks) {
  Matrix4 choi = Matrix4::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Matrix2 out = blocks[2 * i + j];
      // Weight that left the logical block decodes to the maximally mixed state.
      const Complex leak = (i == j ? 1.0 : 0.0) - out.trace();
      out += 0.5 * leak * Matrix2::Identity();
      choi.block<2, 2>(2 * i, 2 * j) = out;
    }
  }
  return QubitChannel(choi);
}

double conditional_fidelity(const std::array<Matrix2, 4>& blocks) {
  using Rule = boost::math::quadrature::gauss<double, 24>;
  constexpr int kAzimuth = 48;
  double total = 0.0;
  double weight_sum = 0.0;
  auto eval = [&](double u, double w) {
    const double c = std::sqrt(0.5 * (1.0 + u));
    const double s = std::sqrt(0.5 * (1.0 - u));
    for (int m = 0; m < kAzimuth; ++m) {
      const double phi = 2.0 * std::numbers::pi * m / kAzimuth;
      const Eigen::Vector2cd z(c, s * std::exp(Complex(0.0, phi)));
      Matrix2 b = Matrix2::Zero();
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) b += z[i] * std::conj(z[j]) * blocks[2 * i + j];
      }
      const double norm = b.trace().real();
      const double f = norm > 1e-14 ? (z.adjoint() * b * z)(0, 0).real() / norm : 0.5;
      total += w * f;
      weight_sum += w;
    }
  };
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] == 0.0) {
      eval(0.0, w[k]);
    } else {
      eval(x[k], w[k]);
      eval(-x[k], w[k]);
    }
  }
  return total / weight_sum;
}

ToyTrace run(const ToyConfig& cfg, const QubitState& psi_q, const ToyDims& d,
             const std::vector<std::pair<std::size_t, double>>& inputs) {
  const double tp = cfg.pulse_time();
  std::vector<double> times(cfg.trace_steps + 1);
  for (std::size_t k = 0; k <= cfg.trace_steps; ++k) {
    times[k] = tp * double(k) / double(cfg.trace_steps);
  }
  Accumulator acc;
  acc.blocks.assign(times.size(), {Matrix2::Zero(), Matrix2::Zero(), Matrix2::Zero(),
                                   Matrix2::Zero()});
  acc.n1.assign(times.size(), {0.0, 0.0});
  acc.n2.assign(times.size(), {0.0, 0.0});
  SectorCache cache(d, cfg.g);
  for (const auto& [n, w] : inputs) accumulate_number_state(cache, d, n, w, times, acc);

  ToyTrace trace;
  trace.t = times;
  const Eigen::Vector2cd v = psi_q.vector();
  const Matrix2 rho_in = v * v.adjoint();
  const double pa = std::norm(psi_q.alpha());
  const double pb = std::norm(psi_q.beta());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const QubitChannel ch = logical_channel(acc.blocks[k]);
    const Matrix2 out = ch.apply(rho_in);
    trace.fidelity.push_back((v.adjoint() * out * v)(0, 0).real());
    trace.fbar.push_back(average_qubit_fidelity(ch));
    trace.fbar_conditional.push_back(conditional_fidelity(acc.blocks[k]));
    trace.n1.push_back(pa * acc.n1[k][0] + pb * acc.n1[k][1]);
    trace.n2.push_back(pa * acc.n2[k][0] + pb * acc.n2[k][1]);
  }
  trace.final_fbar = trace.fbar.back();
  trace.final_fbar_conditional = trace.fbar_conditional.back();
  return trace;
}

}  // namespace

void ToyConfig::validate() const {
  if (!(g > 0.0)) throw PreconditionError("toy model: g must be positive");
  if (!(n_ch >= 0.0)) throw PreconditionError("toy model: n_ch must be non-negative");
  if (encoding == Encoding::kOscillator && n_loc && *n_loc < 2) {
    throw PreconditionError("toy model: n_loc must be at least 2");
  }
  if (t_p && !(*t_p > 0.0)) throw PreconditionError("toy model: t_p must be positive");
  if (trace_steps == 0) throw PreconditionError("toy model: trace_steps must be positive");
  if (dims) {
    if (dims->node < 2 || dims->channel < 2) {
      throw PreconditionError("toy model: subsystem dimensions must be at least 2");
    }
    if (dims->channel < thermal_levels()) {
      std::ostringstream os;
      os << "toy model: channel dimension " << dims->channel << " below the "
         << thermal_levels() << " levels needed for n_ch = " << n_ch;
      throw TruncationError(os.str());
    }
  }
}

double ToyConfig::pulse_time() const {
  return t_p.value_or(std::numbers::pi / (std::numbers::sqrt2 * g));
}

std::size_t ToyConfig::thermal_levels() const { return thermal_truncation(n_ch); }

ToyDims ToyConfig::resolved_dims() const {
  if (dims) return *dims;
  const std::size_t channel = thermal_levels() + 1;
  std::size_t node = channel;
  if (encoding == Encoding::kTwoLevel) {
    node = 2;
  } else if (n_loc) {
    node = *n_loc;
  }
  return {node, channel};
}

Operator build_toy_hamiltonian(const ToyConfig& cfg) {
  cfg.validate();
  const ToyDims d = cfg.resolved_dims();
  const std::size_t total = d.node * d.channel * d.node;
  if (total > cfg.dim_cap) {
    std::ostringstream os;
    os << "build_toy_hamiltonian: dimension " << total << " exceeds cap " << cfg.dim_cap;
    throw PreconditionError(os.str());
  }
  const FockSpace node(d.node);
  const FockSpace chan(d.channel);
  const Operator l = ladder_operator(node);
  const Operator c = ladder_operator(chan);
  const Operator in = identity_operator(node);
  const Operator ic = identity_operator(chan);
  const Operator l1 = tensor(tensor(l, ic), in);
  const Operator l2 = tensor(tensor(in, ic), l);
  const Operator cc = tensor(tensor(in, c), in);
  const Operator sum = l1 + l2;
  return Complex(cfg.g) * (sum * cc.adjoint() + cc * sum.adjoint());
}

ToyTrace simulate_toy_transfer(const ToyConfig& cfg, const QubitState& psi_q) {
  cfg.validate();
  const ToyDims d = cfg.resolved_dims();
  const std::size_t levels = cfg.thermal_levels();
  const auto p = thermal_weights(cfg.n_ch, levels);
  std::vector<std::pair<std::size_t, double>> inputs;
  for (std::size_t n = 0; n < levels; ++n) inputs.emplace_back(n, p[n]);
  return run(cfg, psi_q, d, inputs);
}

ToyTrace simulate_toy_fock_input(const ToyConfig& cfg, const QubitState& psi_q,
                                 std::size_t n) {
  cfg.validate();
  ToyDims d = cfg.resolved_dims();
  if (!cfg.dims) {
    d.channel = std::max(d.channel, n + 2);
    if (cfg.encoding == Encoding::kOscillator && !cfg.n_loc) d.node = d.channel;
  }
  if (n + 1 >= d.channel + 1 || n >= d.channel) {
    throw TruncationError("toy model: channel number state outside truncation");
  }
  return run(cfg, psi_q, d, {{n, 1.0}});
}

}  // namespace xferlab::toynet
