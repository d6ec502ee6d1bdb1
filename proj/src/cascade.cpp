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

#include "xferlab/cascade.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace xferlab::cascade {
namespace {

constexpr Complex kI{0.0, 1.0};

// Stage index: 0 -> t_k, 1 -> t_k + dt/2, 2 -> t_k + dt.
Complex sqrt_rate_at(const PulseProfile& p, std::size_t k, int stage) {
  switch (stage) {
    case 0:
      return p.sqrt_rate(k);
    case 1:
      return p.sqrt_rate_mid(k);
    default:
      return p.sqrt_rate(k + 1);
  }
}

// Cubic (or lower order at the edges) interpolation of samples at j + 1/2.
template <typename T>
T midpoint(const std::vector<T>& v, std::size_t j) {
  const std::size_t n = v.size();
  if (n < 2 || j + 1 >= n) return v[std::min(j, n - 1)];
  if (n == 2) return 0.5 * (v[0] + v[1]);
  if (j >= 1 && j + 2 < n) {
    return (9.0 * (v[j] + v[j + 1]) - (v[j - 1] + v[j + 2])) / 16.0;
  }
  if (j == 0) return 0.375 * v[0] + 0.75 * v[1] - 0.125 * v[2];
  return -0.125 * v[j - 1] + 0.75 * v[j] + 0.375 * v[j + 1];
}

void check_step(const PulseProfile& p, const IntegratorLimits& limits, const char* what) {
  if (p.max_rate() * p.dt() > limits.max_step_rate) {
    std::ostringstream os;
    os << what << ": |gamma| dt = " << p.max_rate() * p.dt() << " exceeds "
       << limits.max_step_rate;
    throw NumericalGuard(os.str());
  }
}

void check_same_grid(const PulseProfile& a, const PulseProfile& b, const char* what) {
  if (!a.same_grid(b)) {
    throw PreconditionError(std::string(what) + ": pulses must share one time grid");
  }
}

template <std::size_t N>
using State = std::array<Complex, N>;

template <std::size_t N>
State<N> axpy(const State<N>& y, double h, const State<N>& k) {
  State<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + h * k[i];
  return out;
}

// Classic RK4 step; rhs(stage, y) with stage in {0, 1, 2}.
template <std::size_t N, typename Rhs>
State<N> rk4_step(const State<N>& y, double h, Rhs&& rhs) {
  const State<N> k1 = rhs(0, y);
  const State<N> k2 = rhs(1, axpy(y, 0.5 * h, k1));
  const State<N> k3 = rhs(1, axpy(y, 0.5 * h, k2));
  const State<N> k4 = rhs(2, axpy(y, h, k3));
  State<N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

double unwrap(double previous, double raw) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return raw + two_pi * std::round((previous - raw) / two_pi);
}

std::size_t grid_delay(double delay, double dt, double* rounding) {
  const double steps = delay / dt;
  const auto m = static_cast<std::size_t>(std::llround(steps));
  if (rounding) *rounding = std::abs(static_cast<double>(m) * dt - delay);
  return m;
}

// Amplitude-equation state: A1, T (lossless), A2, U, P, I.
struct AmplitudeRhs {
  double delta;
  Complex s1;
  Complex s2;

  State<6> operator()(const State<6>& y) const {
    const double g1 = std::norm(s1);
    const double g2 = std::norm(s2);
    const Complex coupling = std::conj(s2) * s1;
    State<6> d;
    d[0] = -(0.5 * g1 + kI * delta) * y[0];
    d[1] = -0.5 * g2 * y[1] - coupling * y[0];
    d[2] = -0.5 * g2 * y[2];
    d[3] = g1 - g1 * y[3].real();
    d[4] = -std::conj(s1) * s2 - (0.5 * g1 - kI * delta + 0.5 * g2) * y[4] +
           coupling * y[3].real();
    d[5] = g2 * (1.0 - y[5].real()) + 2.0 * (coupling * std::conj(y[4])).real();
    return d;
  }
};

void record(TransferSolution& sol, double t, const State<6>& y, Complex s1, Complex s2,
            double eps_ch) {
  const double eta = 1.0 - eps_ch;
  sol.t.push_back(t);
  sol.a1.push_back(y[0]);
  sol.T.push_back(std::sqrt(eta) * y[1]);
  sol.a2.push_back(y[2]);
  sol.noise_weight.push_back(eta * y[5].real());
  sol.absorbed_weight.push_back(eps_ch * (1.0 - std::norm(y[2])));
  sol.darkness.push_back(s1 * y[0] + s2 * y[1]);
}

State<6> initial_amplitudes() {
  return {Complex(1.0), Complex(0.0), Complex(1.0), Complex(0.0), Complex(0.0),
          Complex(0.0)};
}

}  // namespace

PulseProfile::PulseProfile(double t0, double dt, std::vector<double> magnitude,
                           std::vector<double> phase)
    : t0_(t0), dt_(dt), magnitude_(std::move(magnitude)), phase_(std::move(phase)) {
  if (!(dt > 0.0)) throw PreconditionError("PulseProfile: dt must be positive");
  if (magnitude_.size() < 2) {
    throw PreconditionError("PulseProfile: need at least two samples");
  }
  if (phase_.empty()) phase_.assign(magnitude_.size(), 0.0);
  if (phase_.size() != magnitude_.size()) {
    throw PreconditionError("PulseProfile: magnitude and phase sizes differ");
  }
  for (double g : magnitude_) {
    if (!(g >= 0.0) || !std::isfinite(g)) {
      throw PreconditionError("PulseProfile: rates must be finite and non-negative");
    }
  }
}

PulseProfile PulseProfile::constant(double rate, double t0, double tf, double dt) {
  const auto n = static_cast<std::size_t>(std::llround((tf - t0) / dt)) + 1;
  return PulseProfile(t0, dt, std::vector<double>(n, rate));
}

PulseProfile PulseProfile::zeros(double t0, double tf, double dt) {
  return constant(0.0, t0, tf, dt);
}

double PulseProfile::max_rate() const {
  return *std::max_element(magnitude_.begin(), magnitude_.end());
}

Complex PulseProfile::sqrt_rate(std::size_t k) const {
  return std::sqrt(magnitude_[k]) * std::exp(-kI * phase_[k]);
}

Complex PulseProfile::sqrt_rate_mid(std::size_t k) const {
  const std::size_t n = size();
  auto s = [this](std::size_t j) { return sqrt_rate(j); };
  if (k + 1 >= n) return s(n - 1);
  if (n == 2) return 0.5 * (s(0) + s(1));
  if (k >= 1 && k + 2 < n) return (9.0 * (s(k) + s(k + 1)) - (s(k - 1) + s(k + 2))) / 16.0;
  if (k == 0) return 0.375 * s(0) + 0.75 * s(1) - 0.125 * s(2);
  return -0.125 * s(k - 1) + 0.75 * s(k) + 0.375 * s(k + 1);
}

PulseProfile PulseProfile::mirrored() const {
  std::vector<double> mag(magnitude_.rbegin(), magnitude_.rend());
  std::vector<double> ph(phase_.rbegin(), phase_.rend());
  return PulseProfile(t0_, dt_, std::move(mag), std::move(ph));
}

bool PulseProfile::same_grid(const PulseProfile& other) const {
  return size() == other.size() && std::abs(dt_ - other.dt_) <= 1e-12 * dt_ &&
         std::abs(t0_ - other.t0_) <= 1e-12 * std::max(1.0, std::abs(t0_));
}

void NetworkTopology::validate() const {
  if (!(eps_ch >= 0.0 && eps_ch <= 1.0)) {
    throw PreconditionError("NetworkTopology: eps_ch must lie in [0, 1]");
  }
  if (!(n_ch >= 0.0) || (n_absorbed && !(*n_absorbed >= 0.0))) {
    throw PreconditionError("NetworkTopology: occupations must be non-negative");
  }
  if (retardation < 0.0) {
    throw PreconditionError("NetworkTopology: retardation must be non-negative");
  }
  if (scatterer) {
    const double norm = std::norm(scatterer->r) + std::norm(scatterer->t);
    if (std::abs(norm - 1.0) > 1e-12) {
      throw PreconditionError("NetworkTopology: scatterer needs |r|^2 + |t|^2 = 1");
    }
    if (!(scatterer->delay > 0.0)) {
      throw PreconditionError("NetworkTopology: scatterer delay must be positive");
    }
  }
}

double TransferSolution::norm_defect() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    const double total =
        std::norm(a2[k]) + std::norm(T[k]) + noise_weight[k] + absorbed_weight[k];
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

PulseProfile stannigel_pulse(double gamma, double t_p, double dt) {
  if (!(gamma > 0.0)) throw PreconditionError("stannigel_pulse: gamma must be positive");
  if (gamma * t_p < 5.0) {
    throw PreconditionError("stannigel_pulse: need gamma * t_p >= 5");
  }
  if (dt > 1e-2 / gamma) {
    throw PreconditionError("stannigel_pulse: grid too coarse (dt > 1e-2/gamma)");
  }
  const auto steps = static_cast<std::size_t>(std::llround(t_p / dt));
  const double h = t_p / static_cast<double>(steps);
  std::vector<double> samples(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    // Compare on the index so t_p/2 lands on the constant branch exactly.
    if (2 * k >= steps) {
      samples[k] = gamma;
      continue;
    }
    const double e = std::exp(gamma * (static_cast<double>(k) * h - 0.5 * t_p));
    samples[k] = gamma * e / (2.0 - e);
  }
  return PulseProfile(0.0, h, std::move(samples));
}

TransferSolution integrate_amplitudes(const PulseProfile& gamma1,
                                      const PulseProfile& gamma2,
                                      const NetworkTopology& topo,
                                      const IntegratorLimits& limits) {
  topo.validate();
  if (topo.scatterer) {
    throw PreconditionError(
        "integrate_amplitudes: use simulate_scatterer_network with a scatterer");
  }
  check_same_grid(gamma1, gamma2, "integrate_amplitudes");
  check_step(gamma1, limits, "integrate_amplitudes");
  check_step(gamma2, limits, "integrate_amplitudes");

  const double dt = gamma1.dt();
  TransferSolution sol;
  State<6> y = initial_amplitudes();
  record(sol, gamma1.time(0), y, gamma1.sqrt_rate(0), gamma2.sqrt_rate(0), topo.eps_ch);
  for (std::size_t k = 0; k + 1 < gamma1.size(); ++k) {
    y = rk4_step<6>(y, dt, [&](int stage, const State<6>& s) {
      return AmplitudeRhs{topo.delta, sqrt_rate_at(gamma1, k, stage),
                          sqrt_rate_at(gamma2, k, stage)}(s);
    });
    record(sol, gamma1.time(k + 1), y, gamma1.sqrt_rate(k + 1), gamma2.sqrt_rate(k + 1),
           topo.eps_ch);
  }
  return sol;
}

std::vector<Complex> filter_kernel(const PulseProfile& gamma1,
                                   const PulseProfile& gamma2, double delta) {
  check_same_grid(gamma1, gamma2, "filter_kernel");
  const std::size_t n = gamma1.size();
  const double dt = gamma1.dt();
  std::vector<Complex> kernel(n);
  // y = {A2(tf, s), T(tf, s)} integrated from s = tf down to t0.
  State<2> y{Complex(1.0), Complex(0.0)};
  kernel[n - 1] = -y[1] * gamma1.sqrt_rate(n - 1) - y[0] * gamma2.sqrt_rate(n - 1);
  for (std::size_t k = n - 1; k > 0; --k) {
    // Step from grid k to k-1; stage 0 is s = t_k, stage 2 is s = t_{k-1}.
    auto rhs = [&](int stage, const State<2>& s) {
      Complex s1, s2;
      if (stage == 0) {
        s1 = gamma1.sqrt_rate(k);
        s2 = gamma2.sqrt_rate(k);
      } else if (stage == 1) {
        s1 = gamma1.sqrt_rate_mid(k - 1);
        s2 = gamma2.sqrt_rate_mid(k - 1);
      } else {
        s1 = gamma1.sqrt_rate(k - 1);
        s2 = gamma2.sqrt_rate(k - 1);
      }
      State<2> d;
      d[0] = 0.5 * std::norm(s2) * s[0];
      d[1] = std::conj(s2) * s1 * s[0] + (0.5 * std::norm(s1) + kI * delta) * s[1];
      return d;
    };
    y = rk4_step<2>(y, -dt, rhs);
    kernel[k - 1] =
        -y[1] * gamma1.sqrt_rate(k - 1) - y[0] * gamma2.sqrt_rate(k - 1);
  }
  return kernel;
}

SynthesizedPulse synthesize_recovery_pulse(const PulseProfile& gamma1, double gamma_max,
                                           const RecoveryOptions& options) {
  if (!(gamma_max > 0.0)) {
    throw PreconditionError("synthesize_recovery_pulse: gamma_max must be positive");
  }
  IntegratorLimits limits;
  check_step(gamma1, limits, "synthesize_recovery_pulse");
  if (gamma_max * gamma1.dt() > limits.max_step_rate) {
    throw NumericalGuard("synthesize_recovery_pulse: gamma_max * dt too large");
  }
  const double cap = std::sqrt(gamma_max);
  auto choose = [&](Complex s1, const State<6>& y) -> Complex {
    const Complex t = y[1];
    if (std::abs(t) < options.threshold) return Complex(cap);
    Complex s2 = -s1 * y[0] / t;
    if (std::abs(s2) > cap) s2 *= cap / std::abs(s2);
    return s2;
  };

  const std::size_t n = gamma1.size();
  const double dt = gamma1.dt();
  std::vector<double> magnitude(n);
  std::vector<double> phase(n);
  TransferSolution sol;
  State<6> y = initial_amplitudes();
  bool left_regularization = false;
  double last_phase = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Complex s1 = gamma1.sqrt_rate(k);
    const Complex s2 = choose(s1, y);
    if (std::abs(y[1]) >= options.threshold) left_regularization = true;
    magnitude[k] = std::norm(s2);
    if (std::abs(s2) > 0.0) last_phase = unwrap(last_phase, -std::arg(s2));
    phase[k] = last_phase;
    record(sol, gamma1.time(k), y, s1, s2, 0.0);
    if (k + 1 == n) break;
    y = rk4_step<6>(y, dt, [&](int stage, const State<6>& s) {
      const Complex s1_stage = sqrt_rate_at(gamma1, k, stage);
      return AmplitudeRhs{options.delta, s1_stage, choose(s1_stage, s)}(s);
    });
  }
  if (!left_regularization) {
    throw PreconditionError(
        "synthesize_recovery_pulse: |T| never left the regularization region");
  }
  return {PulseProfile(gamma1.t0(), dt, std::move(magnitude), std::move(phase)),
          std::move(sol)};
}

MomentTrajectory moment_trajectories(const PulseProfile& gamma1,
                                     const PulseProfile& gamma2,
                                     const NetworkTopology& topo, double n1_0,
                                     double n2_0, const IntegratorLimits& limits) {
  topo.validate();
  if (topo.scatterer) {
    throw PreconditionError("moment_trajectories: scatterer networks are not supported");
  }
  if (n1_0 < 0.0 || n2_0 < 0.0) {
    throw PreconditionError("moment_trajectories: occupations must be non-negative");
  }
  check_same_grid(gamma1, gamma2, "moment_trajectories");
  check_step(gamma1, limits, "moment_trajectories");
  check_step(gamma2, limits, "moment_trajectories");

  const double n_ch = topo.n_ch;
  const double n_h = topo.n_absorbed.value_or(n_ch);
  const double eta = 1.0 - topo.eps_ch;
  const double root_eta = std::sqrt(eta);
  auto rhs = [&](Complex s1, Complex s2, const State<3>& y) {
    const double g1 = std::norm(s1);
    const double g2 = std::norm(s2);
    const double n1 = y[0].real();
    const double n2 = y[1].real();
    const Complex c = y[2];
    State<3> d;
    d[0] = -g1 * (n1 - n_ch);
    d[1] = -g2 * n2 - 2.0 * root_eta * (std::conj(s1) * s2 * c).real() +
           g2 * (eta * n_ch + (1.0 - eta) * n_h);
    d[2] = -(0.5 * (g1 + g2) - kI * topo.delta) * c -
           root_eta * s1 * std::conj(s2) * (n1 - n_ch);
    return d;
  };

  MomentTrajectory traj;
  State<3> y{Complex(n1_0), Complex(n2_0), Complex(0.0)};
  auto push = [&](double t, const State<3>& s) {
    traj.t.push_back(t);
    traj.n1.push_back(s[0].real());
    traj.n2.push_back(s[1].real());
    traj.c.push_back(s[2]);
  };
  push(gamma1.time(0), y);
  for (std::size_t k = 0; k + 1 < gamma1.size(); ++k) {
    y = rk4_step<3>(y, gamma1.dt(), [&](int stage, const State<3>& s) {
      return rhs(sqrt_rate_at(gamma1, k, stage), sqrt_rate_at(gamma2, k, stage), s);
    });
    push(gamma1.time(k + 1), y);
  }
  return traj;
}

MomentTrajectory detector_signal(const PulseProfile& gamma1, double omega, double n_ch,
                                 double n1_0, double delta,
                                 const IntegratorLimits& limits) {
  if (!(omega > 0.0)) throw PreconditionError("detector_signal: bandwidth must be positive");
  if (n_ch < 0.0 || n1_0 < 0.0) {
    throw PreconditionError("detector_signal: occupations must be non-negative");
  }
  check_step(gamma1, limits, "detector_signal");
  if (omega * gamma1.dt() > limits.max_step_rate) {
    throw NumericalGuard("detector_signal: omega * dt exceeds the step limit");
  }
  const double root_omega = std::sqrt(omega);
  // y = {n1, n_b, <b^dag a1>, |A1|^2}
  auto rhs = [&](Complex s1, const State<4>& y) {
    const double g1 = std::norm(s1);
    const double n1 = y[0].real();
    State<4> d;
    d[0] = -g1 * (n1 - n_ch);
    d[1] = -omega * (y[1].real() - n_ch) + 2.0 * root_omega * (s1 * y[2]).real();
    d[2] = -(0.5 * (omega + g1) + kI * delta) * y[2] +
           root_omega * std::conj(s1) * (n1 - n_ch);
    d[3] = -g1 * y[3];
    return d;
  };
  MomentTrajectory traj;
  State<4> y{Complex(n1_0), Complex(n_ch), Complex(0.0), Complex(1.0)};
  auto push = [&](std::size_t k, const State<4>& s) {
    const double g1 = gamma1.magnitude()[k];
    const double a1sq = s[3].real();
    traj.t.push_back(gamma1.time(k));
    traj.n1.push_back(s[0].real());
    traj.n_filter.push_back(s[1].real());
    traj.n_filter_closed_form.push_back(4.0 * g1 / omega * a1sq * n1_0 +
                                        n_ch * (1.0 - 4.0 * g1 / omega * a1sq));
  };
  push(0, y);
  for (std::size_t k = 0; k + 1 < gamma1.size(); ++k) {
    y = rk4_step<4>(y, gamma1.dt(), [&](int stage, const State<4>& s) {
      return rhs(sqrt_rate_at(gamma1, k, stage), s);
    });
    push(k + 1, y);
  }
  return traj;
}

namespace {

// Shared stepper for the single-excitation scatterer network. `choose`
// returns sqrt(gamma2) for a stage given (k, stage, incident field, psi2).
template <typename Choose>
ScattererResult run_scatterer(const PulseProfile& gamma1, const NetworkTopology& topo,
                              Choose&& choose, std::vector<Complex>* chosen) {
  topo.validate();
  // Without a scatterer the feedback branch is empty (r = 0, t = 1).
  const Scatterer sc = topo.scatterer.value_or(Scatterer{0.0, 1.0, 0.0});
  const double dt = gamma1.dt();
  double rounding = 0.0;
  const std::size_t m = topo.scatterer ? grid_delay(sc.delay, dt, &rounding) : 0;
  if (topo.scatterer && m < 10) {
    throw PreconditionError(
        "simulate_scatterer_network: scatterer delay must span at least 10 steps");
  }
  const std::size_t m_ret = grid_delay(topo.retardation, dt, nullptr);
  if (m_ret == 1) {
    throw PreconditionError(
        "simulate_scatterer_network: retardation must be zero or at least 2 steps");
  }
  check_step(gamma1, {}, "simulate_scatterer_network");

  const std::size_t n = gamma1.size();
  std::vector<Complex> out1(n, 0.0);  // node-1 output field
  std::vector<Complex> in2(n, 0.0);
  std::vector<Complex> out2(n, 0.0);
  std::vector<Complex> cumulative_out1(n, 0.0);

  // Delayed sample of a history vector at grid position j (+ 1/2 if mid).
  auto delayed = [](const std::vector<Complex>& hist, std::size_t k, int stage,
                    std::size_t lag) -> Complex {
    // Requested time t_k + stage*dt/2 - lag*dt.
    if (stage == 0) return k >= lag ? hist[k - lag] : Complex(0.0);
    if (stage == 2) return k + 1 >= lag ? hist[k + 1 - lag] : Complex(0.0);
    if (k < lag) return 0.0;
    return midpoint(hist, k - lag);
  };

  // y = {psi1, psi2, A2, E_out (emitted energy), E_1 (cumulative |out1|^2)}
  auto fields = [&](std::size_t k, int stage, const State<5>& y, Complex s1) {
    const Complex in1 = m > 0 ? sc.r * delayed(out1, k, stage, m) : Complex(0.0);
    const Complex o1 = in1 + s1 * y[0];
    Complex incident;
    if (m_ret == 0) {
      incident = sc.t * o1;
    } else {
      incident = sc.t * delayed(out1, k, stage, m_ret);
    }
    return std::array<Complex, 3>{in1, o1, incident};
  };

  TransferSolution sol;
  State<5> y{Complex(1.0), Complex(0.0), Complex(1.0), Complex(0.0), Complex(0.0)};
  auto record_grid = [&](std::size_t k, const State<5>& s) {
    const Complex s1 = gamma1.sqrt_rate(k);
    const auto f = fields(k, 0, s, s1);
    const Complex s2 = choose(k, 0, f[2], s[1]);
    if (chosen) (*chosen)[k] = s2;
    out1[k] = f[1];
    in2[k] = f[2];
    out2[k] = f[2] + s2 * s[1];
    cumulative_out1[k] = s[4];
    sol.t.push_back(gamma1.time(k));
    sol.a1.push_back(s[0]);
    sol.T.push_back(s[1]);
    sol.a2.push_back(s[2]);
    // Lossless linear network: the commutator identity fixes the noise weight.
    sol.noise_weight.push_back(1.0 - std::norm(s[2]) - std::norm(s[1]));
    sol.absorbed_weight.push_back(0.0);
    sol.darkness.push_back(out2[k]);
  };

  record_grid(0, y);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    y = rk4_step<5>(y, dt, [&](int stage, const State<5>& s) {
      const Complex s1 = sqrt_rate_at(gamma1, k, stage);
      const auto f = fields(k, stage, s, s1);
      const Complex s2 = choose(k, stage, f[2], s[1]);
      const Complex o2 = f[2] + s2 * s[1];
      State<5> d;
      d[0] = -(0.5 * std::norm(s1) + kI * topo.delta) * s[0] - std::conj(s1) * f[0];
      d[1] = -0.5 * std::norm(s2) * s[1] - std::conj(s2) * f[2];
      d[2] = -0.5 * std::norm(s2) * s[2];
      d[3] = std::norm(o2);
      d[4] = std::norm(f[1]);
      return d;
    });
    record_grid(k + 1, y);
  }

  const std::size_t last = n - 1;
  auto window = [&](std::size_t lag) {
    const std::size_t start = last >= lag ? last - lag : 0;
    return cumulative_out1[last].real() - cumulative_out1[start].real();
  };
  double in_flight = m > 0 ? std::norm(sc.r) * window(m) : 0.0;
  if (m_ret > 0) in_flight += std::norm(sc.t) * window(m_ret);
  return {std::move(in2), std::move(out2), std::move(sol), in_flight, y[3].real(),
          rounding};
}

}  // namespace

ScattererResult simulate_scatterer_network(const PulseProfile& gamma1,
                                           const PulseProfile& gamma2,
                                           const NetworkTopology& topo) {
  if (!topo.scatterer) {
    throw PreconditionError("simulate_scatterer_network: topology has no scatterer");
  }
  check_same_grid(gamma1, gamma2, "simulate_scatterer_network");
  check_step(gamma2, {}, "simulate_scatterer_network");
  return run_scatterer(
      gamma1, topo,
      [&](std::size_t k, int stage, Complex, Complex) {
        return sqrt_rate_at(gamma2, k, stage);
      },
      nullptr);
}

OptimizedRecovery optimize_recovery_with_scatterer(const PulseProfile& gamma1,
                                                   const NetworkTopology& topo,
                                                   double gamma_max, double threshold) {
  if (!(gamma_max > 0.0)) {
    throw PreconditionError("optimize_recovery_with_scatterer: gamma_max must be positive");
  }
  if (gamma_max * gamma1.dt() > IntegratorLimits{}.max_step_rate) {
    throw NumericalGuard("optimize_recovery_with_scatterer: gamma_max * dt too large");
  }
  const double cap = std::sqrt(gamma_max);
  bool clamped = false;
  bool captured = false;
  auto choose = [&](std::size_t, int stage, Complex incident, Complex psi2) -> Complex {
    if (std::abs(psi2) < threshold) return Complex(cap);
    Complex s2 = -incident / psi2;
    if (std::abs(s2) > cap) {
      s2 *= cap / std::abs(s2);
      if (stage == 0 && captured) clamped = true;
    }
    if (stage == 0) captured = true;
    return s2;
  };
  std::vector<Complex> chosen(gamma1.size());
  ScattererResult result = run_scatterer(gamma1, topo, choose, &chosen);

  std::vector<double> magnitude(chosen.size());
  std::vector<double> phase(chosen.size());
  double last_phase = 0.0;
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    magnitude[k] = std::norm(chosen[k]);
    if (std::abs(chosen[k]) > 0.0) last_phase = unwrap(last_phase, -std::arg(chosen[k]));
    phase[k] = last_phase;
  }
  const double final_transfer = std::norm(result.solution.T.back());
  PulseProfile pulse(gamma1.t0(), gamma1.dt(), std::move(magnitude), std::move(phase));
  return {std::move(pulse), std::move(result), final_transfer, last_phase, clamped};
}

}  // namespace xferlab::cascade
