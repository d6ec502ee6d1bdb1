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
#include <functional>
#include <random>

#include "oracles.hpp"
#include "xferlab/cascade.hpp"
#include "xferlab/error.hpp"

namespace xferlab::cascade {
namespace {

using RateFn = std::function<double(double)>;

RateFn random_rate(std::mt19937_64& rng, double tf) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Bump {
    double amp, centre, width;
  };
  std::vector<Bump> bumps;
  for (int i = 0; i < 3; ++i) bumps.push_back({1.5 * u(rng), tf * u(rng), 1.0 + 4.0 * u(rng)});
  return [bumps](double t) {
    double g = 0.0;
    for (const auto& b : bumps) g += b.amp * std::exp(-std::pow((t - b.centre) / b.width, 2));
    return g;
  };
}

PulseProfile sample(const RateFn& f, double tf, double dt) {
  const auto n = static_cast<std::size_t>(std::llround(tf / dt));
  std::vector<double> m(n + 1);
  for (std::size_t k = 0; k <= n; ++k) m[k] = f(double(k) * dt);
  return PulseProfile(0.0, dt, m);
}

PulseProfile extend(const PulseProfile& p, std::size_t extra, double value) {
  std::vector<double> m = p.magnitude();
  m.resize(m.size() + extra, value);
  return PulseProfile(p.t0(), p.dt(), m);
}

TEST(Pulse, StannigelShape) {
  const double gamma = 2.0, tp = 10.0, dt = 1e-3;
  const PulseProfile p = stannigel_pulse(gamma, tp, dt);
  EXPECT_EQ(p.size(), 10001u);
  for (std::size_t k = 5000; k < p.size(); ++k) EXPECT_EQ(p.magnitude()[k], gamma);
  for (std::size_t k = 0; k < 5000; k += 97) {
    const double e = std::exp(gamma * (p.time(k) - 0.5 * tp));
    EXPECT_NEAR(p.magnitude()[k], gamma * e / (2 - e), 1e-12);
  }
  // gamma1(tp/2 - ln2/gamma) = gamma/3, by linear interpolation on a fine grid.
  const PulseProfile fine = stannigel_pulse(1.0, 10.0, 1e-5);
  const double t = 5.0 - std::log(2.0);
  const auto k = static_cast<std::size_t>(t / 1e-5);
  const double f = (t - fine.time(k)) / 1e-5;
  EXPECT_NEAR((1 - f) * fine.magnitude()[k] + f * fine.magnitude()[k + 1], 1.0 / 3.0, 1e-9);
  const PulseProfile mirrored = p.mirrored();
  EXPECT_EQ(mirrored.magnitude().front(), gamma);
  EXPECT_EQ(mirrored.magnitude().back(), p.magnitude().front());
}

TEST(Pulse, Preconditions) {
  EXPECT_THROW(stannigel_pulse(1.0, 4.0, 1e-3), PreconditionError);
  EXPECT_THROW(stannigel_pulse(1.0, 20.0, 0.05), PreconditionError);
  EXPECT_THROW(PulseProfile(0.0, 0.1, {1.0, -1.0}), PreconditionError);
  EXPECT_THROW(PulseProfile(0.0, 0.1, {1.0}), PreconditionError);
}

TEST(Amplitudes, ConstantRatesClosedForm) {
  const PulseProfile g = PulseProfile::constant(1.0, 0.0, 8.0, 1e-3);
  const TransferSolution sol = integrate_amplitudes(g, g, {});
  double peak = 0.0;
  for (std::size_t k = 0; k < sol.size(); ++k) {
    const double t = sol.t[k];
    EXPECT_NEAR(std::abs(sol.T[k] - Complex(-t * std::exp(-t / 2))), 0.0, 1e-10);
    peak = std::max(peak, std::abs(sol.T[k]));
  }
  EXPECT_NEAR(peak, 2.0 / std::exp(1.0), 1e-7);
  EXPECT_NEAR(std::abs(sol.T[2000]), 2.0 / std::exp(1.0), 1e-12);
}

TEST(Amplitudes, DecoupledReceiver) {
  const PulseProfile g1 = stannigel_pulse(1.0, 10.0, 1e-3);
  const PulseProfile g2 = PulseProfile::zeros(0.0, 10.0, 1e-3);
  const TransferSolution sol = integrate_amplitudes(g1, g2, {});
  for (std::size_t k = 0; k < sol.size(); ++k) {
    EXPECT_EQ(sol.T[k], Complex(0.0));
    EXPECT_EQ(sol.a2[k], Complex(1.0));
  }
}

TEST(Amplitudes, Guards) {
  const PulseProfile fast = PulseProfile::constant(200.0, 0.0, 1.0, 1e-3);
  EXPECT_THROW(integrate_amplitudes(fast, fast, {}), NumericalGuard);
  const PulseProfile a = PulseProfile::constant(1.0, 0.0, 1.0, 1e-3);
  const PulseProfile b = PulseProfile::constant(1.0, 0.0, 2.0, 1e-3);
  EXPECT_THROW(integrate_amplitudes(a, b, {}), PreconditionError);
  NetworkTopology bad;
  bad.eps_ch = 1.5;
  EXPECT_THROW(integrate_amplitudes(a, a, bad), PreconditionError);
  NetworkTopology scat;
  scat.scatterer = Scatterer{0.6, 0.8, 0.1};
  EXPECT_THROW(integrate_amplitudes(a, a, scat), PreconditionError);
}

TEST(Amplitudes, NormIdentityForRandomPulses) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const PulseProfile g1 = sample(random_rate(rng, 30.0), 30.0, 2e-3);
    const PulseProfile g2 = sample(random_rate(rng, 30.0), 30.0, 2e-3);
    NetworkTopology topo;
    topo.delta = 0.3 * trial;
    EXPECT_LT(integrate_amplitudes(g1, g2, topo).norm_defect(), 1e-6);
    topo.eps_ch = 0.25;
    EXPECT_LT(integrate_amplitudes(g1, g2, topo).norm_defect(), 1e-6);
  }
}

TEST(Amplitudes, TransferMatchesDoubleIntegral) {
  std::mt19937_64 rng(23);
  const double tf = 20.0, dt = 2e-3;
  for (int trial = 0; trial < 10; ++trial) {
    const RateFn f1 = random_rate(rng, tf), f2 = random_rate(rng, tf);
    const TransferSolution sol =
        integrate_amplitudes(sample(f1, tf, dt), sample(f2, tf, dt), {});
    // T(tf) = -int sqrt(g1 g2)(s) exp(-G2(tf,s)/2 - G1(s,0)/2) ds with the
    // cumulative rates from a fine trapezoid rule.
    const std::size_t n = 40000;
    const double h = tf / double(n);
    std::vector<double> c1(n + 1, 0.0), c2(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
      const double a = double(i - 1) * h, b = double(i) * h;
      const double m = 0.5 * (a + b);
      c1[i] = c1[i - 1] + h / 6.0 * (f1(a) + 4.0 * f1(m) + f1(b));
      c2[i] = c2[i - 1] + h / 6.0 * (f2(a) + 4.0 * f2(m) + f2(b));
    }
    std::vector<Complex> integrand(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      const double s = double(i) * h;
      integrand[i] = -std::sqrt(f1(s) * f2(s)) * std::exp(-0.5 * (c2[n] - c2[i]) - 0.5 * c1[i]);
    }
    EXPECT_NEAR(std::abs(sol.T.back() - oracle::simpson(integrand, h)), 0.0, 1e-6);
  }
}

TEST(Amplitudes, NoiseWeightMatchesBackwardKernel) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 5; ++trial) {
    const PulseProfile g1 = sample(random_rate(rng, 20.0), 20.0, 1e-3);
    const PulseProfile g2 = sample(random_rate(rng, 20.0), 20.0, 1e-3);
    const double delta = 0.5 * trial;
    NetworkTopology topo;
    topo.delta = delta;
    const TransferSolution sol = integrate_amplitudes(g1, g2, topo);
    const auto kernel = filter_kernel(g1, g2, delta);
    std::vector<Complex> sq(kernel.size());
    for (std::size_t k = 0; k < kernel.size(); ++k) sq[k] = std::norm(kernel[k]);
    EXPECT_NEAR(oracle::simpson(sq, g1.dt()).real(), sol.noise_weight.back(), 1e-6);
  }
}

TEST(Amplitudes, ResidualErrorOfMirroredPair) {
  const PulseProfile g1 = stannigel_pulse(1.0, 20.0, 1e-3);
  const TransferSolution sol = integrate_amplitudes(g1, g1.mirrored(), {});
  const double eps_p = 1.0 - std::norm(sol.T.back());
  EXPECT_NEAR(std::log(eps_p), -10.0, 0.5);
}

TEST(Amplitudes, RetardationGauge) {
  const double dt = 1e-3, tf = 12.0, tau = 1.5;
  const std::size_t lag = 1500;
  std::mt19937_64 rng(41);
  const RateFn f1 = random_rate(rng, tf);
  const RateFn bumps = random_rate(rng, tf);
  const RateFn f2 = [bumps](double t) {
    return t <= 0.0 ? 0.0 : bumps(t) * std::pow(t, 4) / (1.0 + std::pow(t, 4));
  };
  const TransferSolution direct = integrate_amplitudes(sample(f1, tf, dt), sample(f2, tf, dt), {});
  // Delay the receiver by the propagation time and relabel.
  const RateFn f2_late = [f2, tau](double t) { return f2(t - tau); };
  NetworkTopology topo;
  topo.retardation = double(lag) * dt;
  topo.scatterer = Scatterer{0.0, 1.0, 0.05};
  const auto delayed = simulate_scatterer_network(sample(f1, tf + tau, dt),
                                                  sample(f2_late, tf + tau, dt), topo);
  EXPECT_NEAR(std::abs(delayed.solution.T.back()), std::abs(direct.T.back()), 1e-9);
  EXPECT_GT(std::abs(direct.T.back()), 0.1);
}

TEST(Synthesis, ReproducesMirroredPulseAndConserves) {
  const PulseProfile g1 = stannigel_pulse(1.0, 20.0, 1e-3);
  const SynthesizedPulse s = synthesize_recovery_pulse(g1, 4.0);
  const PulseProfile mirrored = g1.mirrored();
  for (std::size_t k = g1.size() / 4; k < 3 * g1.size() / 4; ++k) {
    EXPECT_NEAR(s.gamma2.magnitude()[k] / mirrored.magnitude()[k], 1.0, 0.01);
  }
  EXPECT_GE(std::norm(s.solution.T.back()), 1.0 - 2.0 * std::exp(-10.0));
  // Wherever the dark condition holds, |A1|^2 + |T|^2 stays constant.
  const auto& sol = s.solution;
  for (std::size_t k = 1; k + 1 < sol.size(); ++k) {
    if (std::abs(sol.darkness[k - 1]) > 1e-8 || std::abs(sol.darkness[k]) > 1e-8 ||
        std::abs(sol.darkness[k + 1]) > 1e-8) {
      continue;
    }
    const double up = std::norm(sol.a1[k + 1]) + std::norm(sol.T[k + 1]);
    const double down = std::norm(sol.a1[k - 1]) + std::norm(sol.T[k - 1]);
    ASSERT_LT(std::abs(up - down) / (2e-3), 1e-6) << "t = " << sol.t[k];
  }
  EXPECT_THROW(synthesize_recovery_pulse(PulseProfile::zeros(0.0, 5.0, 1e-3), 4.0),
               PreconditionError);
}

TEST(Moments, ThermalStateIsStationary) {
  std::mt19937_64 rng(31);
  const PulseProfile g1 = sample(random_rate(rng, 15.0), 15.0, 1e-3);
  const PulseProfile g2 = sample(random_rate(rng, 15.0), 15.0, 1e-3);
  NetworkTopology topo;
  topo.n_ch = 3.0;
  topo.eps_ch = 0.2;
  topo.delta = 0.7;
  const MomentTrajectory m = moment_trajectories(g1, g2, topo, 3.0, 3.0);
  for (std::size_t k = 0; k < m.t.size(); ++k) {
    ASSERT_NEAR(m.n1[k], 3.0, 1e-8);
    ASSERT_NEAR(m.n2[k], 3.0, 1e-8);
    ASSERT_NEAR(std::abs(m.c[k]), 0.0, 1e-8);
  }
}

TEST(Moments, SingleModeRelaxation) {
  const PulseProfile g1 = PulseProfile::constant(0.8, 0.0, 10.0, 1e-3);
  const PulseProfile g2 = PulseProfile::zeros(0.0, 10.0, 1e-3);
  NetworkTopology topo;
  topo.n_ch = 2.0;
  const MomentTrajectory m = moment_trajectories(g1, g2, topo, 0.5);
  for (std::size_t k = 0; k < m.t.size(); k += 500) {
    EXPECT_NEAR(m.n1[k], 2.0 + (0.5 - 2.0) * std::exp(-0.8 * m.t[k]), 1e-10);
    EXPECT_NEAR(m.n2[k], 0.0, 1e-14);
  }
}

TEST(Moments, FinalOccupationMatchesKernel) {
  const PulseProfile g1 = stannigel_pulse(1.0, 20.0, 1e-3);
  for (double eps : {0.0, 0.1}) {
    NetworkTopology topo;
    topo.n_ch = 5.0;
    topo.eps_ch = eps;
    const MomentTrajectory m = moment_trajectories(g1, g1.mirrored(), topo, 1.0);
    const TransferSolution sol = integrate_amplitudes(g1, g1.mirrored(), topo);
    const double kernel = std::norm(sol.T.back()) * 1.0 +
                          (sol.noise_weight.back() + sol.absorbed_weight.back()) * 5.0;
    EXPECT_NEAR(m.n2.back(), kernel, 1e-5);
    if (eps == 0.0) {
      EXPECT_NEAR(m.n2.back(), 1.0, 1e-3);
      EXPECT_GT(*std::max_element(m.n2.begin(), m.n2.end()), 4.0);
    }
  }
}

TEST(Detector, LargeBandwidthClosedForm) {
  const double tp = 20.0;
  const PulseProfile g1 = stannigel_pulse(1.0, tp, 1e-4);
  const MomentTrajectory single = detector_signal(g1, 50.0, 0.0, 1.0);
  double area = 0.0;
  for (std::size_t k = 0; k < single.t.size(); ++k) {
    area += single.n_filter[k] * g1.dt();
    if (std::abs(single.t[k] - tp / 2) < 3.0) {
      EXPECT_NEAR(single.n_filter[k] / single.n_filter_closed_form[k], 1.0, 0.1);
    }
  }
  // One photon through a one-sided filter: 4 / omega per unit flux.
  EXPECT_NEAR(area * 50.0 / 4.0, 1.0, 0.01);
  const MomentTrajectory dip = detector_signal(g1, 50.0, 5.0, 0.0);
  EXPECT_LT(*std::min_element(dip.n_filter.begin(), dip.n_filter.end()), 4.9);
  for (double n : dip.n_filter) EXPECT_LE(n, 5.0 + 1e-6);
  EXPECT_THROW(detector_signal(g1, 0.0, 0.0, 1.0), PreconditionError);
}

TEST(Scatterer, ReflectionlessMatchesAmplitudes) {
  const PulseProfile g1 = stannigel_pulse(1.0, 20.0, 1e-3);
  NetworkTopology topo;
  topo.scatterer = Scatterer{0.0, 1.0, 3.0};
  topo.delta = 0.4;
  const auto r = simulate_scatterer_network(g1, g1.mirrored(), topo);
  NetworkTopology plain;
  plain.delta = 0.4;
  const TransferSolution sol = integrate_amplitudes(g1, g1.mirrored(), plain);
  for (std::size_t k = 0; k < sol.size(); k += 100) {
    EXPECT_NEAR(std::abs(r.solution.T[k] - sol.T[k]), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(r.solution.a1[k] - sol.a1[k]), 0.0, 1e-12);
  }
}

TEST(Scatterer, EnergyBookkeepingWithoutAbsorber) {
  const PulseProfile base = stannigel_pulse(1.0, 20.0, 1e-3);
  const PulseProfile g1 = extend(base, 20000, 1.0);
  NetworkTopology topo;
  topo.scatterer = Scatterer{0.6, 0.8, 3.0};
  topo.delta = 1.0;
  const auto r = simulate_scatterer_network(
      g1, PulseProfile::zeros(0.0, g1.tf(), g1.dt()), topo);
  const double total = std::norm(r.solution.a1.back()) + r.emitted_energy + r.buffer_energy;
  EXPECT_NEAR(total, 1.0, 1e-6);
  EXPECT_EQ(r.delay_rounding, 0.0);
}

TEST(Scatterer, DistortsPacketAndValidates) {
  const PulseProfile g1 = stannigel_pulse(1.0, 20.0, 1e-3);
  const PulseProfile zero = PulseProfile::zeros(0.0, 20.0, 1e-3);
  NetworkTopology topo;
  topo.delta = 1.0;
  topo.scatterer = Scatterer{0.6, 0.8, 3.0};
  const auto distorted = simulate_scatterer_network(g1, zero, topo);
  topo.scatterer = Scatterer{0.0, 1.0, 3.0};
  const auto clean = simulate_scatterer_network(g1, zero, topo);
  double diff = 0.0;
  for (std::size_t k = 0; k < clean.incident.size(); ++k) {
    diff = std::max(diff, std::abs(distorted.incident[k] - clean.incident[k]));
  }
  EXPECT_GT(diff, 0.1);
  topo.scatterer = Scatterer{0.6, 0.8, 5e-3};
  EXPECT_THROW(simulate_scatterer_network(g1, zero, topo), PreconditionError);
  topo.scatterer = Scatterer{0.6, 0.7, 3.0};
  EXPECT_THROW(simulate_scatterer_network(g1, zero, topo), PreconditionError);
  EXPECT_THROW(simulate_scatterer_network(g1, zero, NetworkTopology{}), PreconditionError);
  topo.scatterer = Scatterer{0.6, 0.8, 3.0004};
  EXPECT_NEAR(simulate_scatterer_network(g1, zero, topo).delay_rounding, 4e-4, 1e-12);
}

TEST(Optimized, ReducesToSynthesisWithoutScatterer) {
  const PulseProfile g1 = stannigel_pulse(1.0, 20.0, 1e-3);
  const auto opt = optimize_recovery_with_scatterer(g1, NetworkTopology{}, 4.0);
  const auto syn = synthesize_recovery_pulse(g1, 4.0);
  for (std::size_t k = 0; k < g1.size(); ++k) {
    ASSERT_NEAR(opt.gamma2.magnitude()[k], syn.gamma2.magnitude()[k], 1e-9);
  }
  EXPECT_NEAR(opt.final_transfer, std::norm(syn.solution.T.back()), 1e-9);
}

TEST(Optimized, RecoversBackscatteredPacket) {
  const double tp = 20.0;
  const PulseProfile base = stannigel_pulse(1.0, tp, 1e-3);
  const PulseProfile g1 = extend(base, base.size() - 1, 1.0);
  NetworkTopology topo;
  topo.delta = 1.0;
  topo.scatterer = Scatterer{0.6, 0.8, 0.15 * tp};
  const auto opt = optimize_recovery_with_scatterer(g1, topo, 4.0);
  EXPECT_GE(opt.final_transfer, 0.99);
  EXPECT_NEAR(opt.final_phase / tp, 2.03, 0.05 * 2.03);
}

}  // namespace
}  // namespace xferlab::cascade
