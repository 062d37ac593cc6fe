// Copyright 2026 The qecbath Authors
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

#include "qecbath/dynamics.hpp"
#include "test_util.hpp"

namespace qecbath {
namespace {

BathSpec spec_with(double temperature, double kappa,
                   ResonanceConvention conv = ResonanceConvention::kResonant) {
  BathSpec s;
  s.temperature = temperature;
  s.kappa = kappa;
  s.convention = conv;
  return s;
}

// Dense oracle: explicit sandwich sums over qubit pairs of the group, with
// every operator formed through embed().
ComplexMatrix dense_rhs(const ComplexMatrix& rho, const SystemModel& model, double t) {
  const int n = model.n_qubits;
  const ComplexMatrix h = system_hamiltonian(model);
  ComplexMatrix out = Complex(0.0, -1.0) * (h * rho - rho * h);
  for (const auto& g : model.groups) {
    Complex cd, cu;
    if (model.backend == Backend::kLindblad) {
      const auto r = lindblad_rates(g.spec, model.omegas[g.qubits[0]]);
      cd = 0.5 * r.gamma_down;
      cu = 0.5 * r.gamma_up;
    } else {
      const auto c = rate_coefficients(t, g.spec, model.omegas[g.qubits[0]]);
      cd = c.c_down;
      cu = c.c_up;
    }
    ComplexMatrix term = ComplexMatrix::Zero(rho.rows(), rho.cols());
    for (int j : g.qubits) {
      for (int k : g.qubits) {
        const ComplexMatrix pj = embed(ops::sigma_plus(), j, n), mj = embed(ops::sigma_minus(), j, n);
        const ComplexMatrix pk = embed(ops::sigma_plus(), k, n), mk = embed(ops::sigma_minus(), k, n);
        term += cd * (mj * rho * pk - pj * mk * rho) + cu * (pj * rho * mk - mj * pk * rho);
      }
    }
    out += term + term.adjoint();
  }
  return out;
}

TEST(Hamiltonian, Diagonal) {
  BathSpec s;
  const auto h1 = system_hamiltonian(SystemModel::local(1, s));
  EXPECT_NEAR(h1(0, 0).real(), 0.5, 0);
  EXPECT_NEAR(h1(1, 1).real(), -0.5, 0);
  const auto h2 = system_hamiltonian(SystemModel::local(2, s));
  EXPECT_NEAR(h2(0, 0).real(), 1.0, 0);
  EXPECT_NEAR(h2(1, 1).real(), 0.0, 0);
  EXPECT_NEAR(h2(3, 3).real(), -1.0, 0);
  EXPECT_NEAR(std::abs(h2.trace()), 0.0, 1e-15);
}

TEST(InteractionOps, Properties) {
  BathSpec s;
  const auto m1 = SystemModel::local(1, s);
  const auto a = interaction_ops(m1, 0.0)[0];
  EXPECT_LT(max_abs_diff(a.s1, ops::sigma_plus()), 1e-15);
  const auto b = interaction_ops(m1, 2.3)[0];
  EXPECT_LT(max_abs_diff(b.s1 * b.s2, ops::sigma_plus() * ops::sigma_minus()), 1e-15);
  const auto m3 = SystemModel::collective(3, s);
  EXPECT_NEAR(interaction_ops(m3, 0.0)[0].s1.norm(), interaction_ops(m3, 4.1)[0].s1.norm(), 1e-13);
  EXPECT_THROW(interaction_ops(m3, -1.0), DomainError);
}

TEST(Model, Validation) {
  BathSpec s;
  SystemModel m = SystemModel::local(2, s);
  m.groups.pop_back();
  EXPECT_THROW(m.validate(), DomainError);
  m = SystemModel::collective(2, s);
  m.omegas = {1.0, 1.1};
  EXPECT_THROW(m.validate(), DomainError);
  m = SystemModel::local(2, s);
  m.groups[1].qubits = {0};
  EXPECT_THROW(m.validate(), DomainError);
}

TEST(Rhs, MatchesDenseOracle) {
  std::mt19937_64 rng(1);
  for (auto backend : {Backend::kTimeLocal, Backend::kLindblad}) {
    for (auto conv : {ResonanceConvention::kResonant, ResonanceConvention::kCounterRotating}) {
      const BathSpec s = spec_with(0.7, 0.3, conv);
      SystemModel m;
      m.n_qubits = 4;
      m.omegas = {1.0, 1.0, 1.0, 1.3};
      m.backend = backend;
      m.groups = {{{0, 1, 2}, s}, {{3}, s}};
      const DensityMatrix rho = testutil::random_mixed(4, rng);
      for (double t : {0.0, 0.7, 12.0}) {
        EXPECT_LT(max_abs_diff(me_rhs(rho, t, m), dense_rhs(rho.matrix(), m, t)), 1e-13);
      }
    }
  }
}

TEST(Rhs, TracelessAndHermitian) {
  std::mt19937_64 rng(2);
  const auto m = SystemModel::collective(3, spec_with(1.0, 0.2));
  for (int i = 0; i < 3; ++i) {
    const DensityMatrix rho = testutil::random_mixed(3, rng);
    const ComplexMatrix r = me_rhs(rho, 3.0 * i, m);
    EXPECT_LT(std::abs(r.trace()), 1e-14);
    EXPECT_LT(hermiticity_deviation(r), 1e-15);
  }
}

TEST(Rhs, FreeEvolutionFixesDiagonalStates) {
  const auto m = SystemModel::local(2, spec_with(0.2, 0.0));
  ComplexMatrix d = ComplexMatrix::Zero(4, 4);
  d.diagonal() << 0.1, 0.2, 0.3, 0.4;
  EXPECT_LT(me_rhs(DensityMatrix(d), 1.0, m).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Rhs, LindbladExcitedDecayRate) {
  const BathSpec s = spec_with(0.5, 0.2);
  const auto m = SystemModel::local(1, s, 1.0, Backend::kLindblad);
  const auto r = me_rhs(DensityMatrix::basis_state(0, 1), 0.0, m);
  EXPECT_NEAR(r(0, 0).real(), -lindblad_rates(s, 1.0).gamma_down, 1e-15);
}

TEST(Rhs, DimensionMismatch) {
  const auto m = SystemModel::local(2, spec_with(0.2, 0.1));
  EXPECT_THROW(me_rhs(DensityMatrix::maximally_mixed(1), 0.0, m), DomainError);
}

TEST(Integrate, FreePrecessionPeriod) {
  const auto m = SystemModel::local(1, spec_with(0.2, 0.0));
  const DensityMatrix plus = DensityMatrix::from_pure(testutil::plus_state());
  const auto traj = integrate(plus, m, 2.0 * M_PI, 1e-3);
  EXPECT_LT(max_abs_diff(traj.states.back().matrix(), plus.matrix()), 1e-8);
  // Coherence phase follows exp(-i w t).
  const auto quarter = integrate(plus, m, 0.5 * M_PI, 1e-3);
  EXPECT_NEAR(std::abs(quarter.states.back()(0, 1) - 0.5 * std::exp(Complex(0.0, -0.5 * M_PI))), 0.0, 1e-10);
}

TEST(Integrate, FreeEvolutionIsUnitary) {
  std::mt19937_64 rng(4);
  SystemModel m = SystemModel::local(3, spec_with(0.2, 0.0));
  m.omegas = {1.0, 0.7, 1.9};
  const ComplexMatrix h = system_hamiltonian(m);
  for (int trial = 0; trial < 3; ++trial) {
    const DensityMatrix rho = DensityMatrix::from_pure(testutil::random_pure(3, rng));
    const double t = 3.7;
    const auto out = integrate(rho, m, t, 1e-3).states.back();
    ComplexMatrix u = ComplexMatrix::Zero(8, 8);
    for (int a = 0; a < 8; ++a) u(a, a) = std::exp(Complex(0.0, h(a, a).real() * t));
    EXPECT_NEAR(fidelity(rho, DensityMatrix(hermitian_part(u * out.matrix() * u.adjoint()))), 1.0, 1e-8);
  }
}

double lindblad_closed_form(double p0, double n, double gamma, double t) {
  const double eq = n / (2.0 * n + 1.0);
  return std::exp(-gamma * (2.0 * n + 1.0) * t) * (p0 - eq) + eq;
}

TEST(Integrate, LindbladClosedForm) {
  for (double temp : {0.2, 10.0}) {
    const BathSpec s = spec_with(temp, 0.1);
    const auto m = SystemModel::local(1, s, 1.0, Backend::kLindblad);
    const double n = bose_occupation(1.0, temp);
    const double tf = 5.0 / s.gamma();
    IntegrateOptions opt;
    opt.dt = 0.1;
    opt.frame = Frame::kInteraction;
    std::vector<double> times;
    for (int i = 0; i <= 50; ++i) times.push_back(tf * i / 50);
    const auto traj = integrate_to(DensityMatrix::basis_state(0, 1), m, times, opt);
    double err = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      err = std::max(err, std::abs(traj.states[i](0, 0).real() - lindblad_closed_form(1.0, n, s.gamma(), times[i])));
    }
    EXPECT_LT(err, 1e-6) << "T=" << temp;
  }
}

TEST(Integrate, LindbladThermalization) {
  const BathSpec s = spec_with(0.7, 0.3);
  const double n = bose_occupation(1.0, 0.7);
  const double eq = n / (2.0 * n + 1.0);
  IntegrateOptions opt;
  opt.dt = 0.05;
  opt.frame = Frame::kInteraction;
  const auto one = integrate_to(DensityMatrix::basis_state(0, 1), SystemModel::local(1, s, 1.0, Backend::kLindblad),
                                {0.0, 40.0 / s.gamma()}, opt);
  EXPECT_NEAR(one.states.back()(0, 0).real(), eq, 1e-6);
  const auto two = integrate_to(DensityMatrix::basis_state(1, 2), SystemModel::local(2, s, 1.0, Backend::kLindblad),
                                {0.0, 40.0 / s.gamma()}, opt);
  ComplexMatrix thermal = ComplexMatrix::Zero(2, 2);
  thermal(0, 0) = eq;
  thermal(1, 1) = 1.0 - eq;
  EXPECT_LT(max_abs_diff(two.states.back().matrix(), kron(thermal, thermal)), 1e-6);
}

TEST(Integrate, InteractionFrameMatchesLab) {
  std::mt19937_64 rng(6);
  const auto m = SystemModel::collective(3, spec_with(0.5, 0.2));
  const DensityMatrix rho = testutil::random_mixed(3, rng);
  IntegrateOptions lab, inter;
  lab.dt = inter.dt = 1e-3;
  inter.frame = Frame::kInteraction;
  const auto a = integrate_to(rho, m, {0.0, 1.3, 4.0}, lab);
  const auto b = integrate_to(rho, m, {0.0, 1.3, 4.0}, inter);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(max_abs_diff(a.states[i].matrix(), b.states[i].matrix()), 1e-9);
}

TEST(Integrate, ReportFrameIsIndependentOfIntegrationFrame) {
  std::mt19937_64 rng(16);
  const auto m = SystemModel::collective(2, spec_with(0.5, 0.2));
  const DensityMatrix rho = testutil::random_mixed(2, rng);
  IntegrateOptions lab, inter;
  lab.report_frame = inter.report_frame = Frame::kInteraction;
  inter.frame = Frame::kInteraction;
  const auto a = integrate_to(rho, m, {0.0, 2.5}, lab);
  const auto b = integrate_to(rho, m, {0.0, 2.5}, inter);
  EXPECT_LT(max_abs_diff(a.states[1].matrix(), b.states[1].matrix()), 1e-9);
  // Rotating-frame states are static under free evolution.
  const auto free = SystemModel::local(1, spec_with(0.5, 0.0));
  const DensityMatrix plus = DensityMatrix::from_pure(testutil::plus_state());
  const auto c = integrate_to(plus, free, {0.0, 1.0}, lab);
  EXPECT_LT(max_abs_diff(c.states[1].matrix(), plus.matrix()), 1e-12);
}

TEST(Integrate, ConservationInvariants) {
  std::mt19937_64 rng(8);
  for (auto backend : {Backend::kTimeLocal, Backend::kMemory, Backend::kLindblad}) {
    const auto m = SystemModel::collective(3, spec_with(0.2, 0.1), 1.0, backend);
    const auto traj = integrate(testutil::random_mixed(3, rng), m, 20.0, 1e-2, 100);
    EXPECT_EQ(traj.times.size(), 21u);
    for (const auto& d : traj.diagnostics) {
      EXPECT_LT(d.trace_deviation, 1e-8);
      EXPECT_LT(d.hermiticity_deviation, 1e-9);
      EXPECT_GT(d.min_eigenvalue, -1e-8);
    }
    EXPECT_LT(traj.max_step_trace_deviation, 1e-8);
  }
}

TEST(Integrate, DtHalvingConverges) {
  const auto m = SystemModel::collective(3, spec_with(0.2, 0.1));
  const DensityMatrix rho0 = DensityMatrix::basis_state(0, 3);
  double previous = -1.0;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const double f = fidelity(rho0, integrate(rho0, m, 30.0, dt).states.back());
    if (previous >= 0.0) {
      EXPECT_LT(std::abs(f - previous), 1e-6);
    }
    previous = f;
  }
}

TEST(Integrate, MemoryBackendAgreesWithClosedForm) {
  std::mt19937_64 rng(10);
  for (auto conv : {ResonanceConvention::kResonant, ResonanceConvention::kCounterRotating}) {
    const BathSpec s = spec_with(0.5, 0.2, conv);
    const DensityMatrix rho = testutil::random_mixed(3, rng);
    const auto a = integrate(rho, SystemModel::collective(3, s, 1.0, Backend::kTimeLocal), 10.0, 1e-3);
    const auto b = integrate(rho, SystemModel::collective(3, s, 1.0, Backend::kMemory), 10.0, 1e-3);
    EXPECT_NEAR(fidelity(rho, a.states.back()), fidelity(rho, b.states.back()), 1e-6);
    EXPECT_LT(max_abs_diff(a.states.back().matrix(), b.states.back().matrix()), 1e-6);
  }
}

TEST(MemoryRhs, QuadratureMatchesClosedForm) {
  std::mt19937_64 rng(12);
  const BathSpec s = spec_with(0.5, 0.3, ResonanceConvention::kCounterRotating);
  const auto model = SystemModel::collective(2, s, 1.0, Backend::kMemory);
  Trajectory hist;
  const int steps = 4000;
  const double t = 2.0;
  for (int i = 0; i <= steps; ++i) {
    hist.times.push_back(t * i / steps);
    hist.states.push_back(DensityMatrix::maximally_mixed(2));
  }
  hist.states.back() = testutil::random_mixed(2, rng);
  SystemModel closed = model;
  closed.backend = Backend::kTimeLocal;
  EXPECT_LT(max_abs_diff(memory_rhs(hist, model), me_rhs(hist.states.back(), t, closed)), 1e-6);
  // A history of one point is the bare commutator.
  Trajectory start;
  start.times = {0.0};
  start.states = {hist.states.back()};
  const ComplexMatrix h = system_hamiltonian(model);
  const ComplexMatrix& r = hist.states.back().matrix();
  EXPECT_LT(max_abs_diff(memory_rhs(start, model), Complex(0.0, -1.0) * (h * r - r * h)), 1e-15);
  EXPECT_THROW(memory_rhs(Trajectory{}, model), DomainError);
}

TEST(Integrate, NoSignalingAcrossLocalBaths) {
  std::mt19937_64 rng(14);
  const BathSpec s = spec_with(0.5, 0.2);
  const DensityMatrix a = testutil::random_mixed(1, rng);
  const DensityMatrix b = testutil::random_mixed(1, rng);
  const auto alone = integrate(a, SystemModel::local(1, s), 8.0, 1e-3).states.back();
  const auto pair = integrate(kron(a, b), SystemModel::local(2, s), 8.0, 1e-3).states.back();
  EXPECT_LT(max_abs_diff(partial_trace(pair, {0}).matrix(), alone.matrix()), 1e-8);
}

TEST(Integrate, StoreEveryAndEndpoints) {
  const auto m = SystemModel::local(1, spec_with(0.2, 0.1));
  const auto traj = integrate(DensityMatrix::basis_state(0, 1), m, 1.0, 0.1, 3);
  ASSERT_EQ(traj.times.size(), 5u);
  EXPECT_NEAR(traj.times[1], 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(traj.times.back(), 1.0);
  EXPECT_EQ(integrate(DensityMatrix::basis_state(0, 1), m, 0.0, 0.1).times.size(), 1u);
  EXPECT_THROW(integrate(DensityMatrix::basis_state(0, 1), m, 1.0, 0.0), DomainError);
}

TEST(Integrate, OversizedStepRaisesTraceDrift) {
  // Unstable step for a strongly coupled collective register.
  const auto m = SystemModel::collective(4, spec_with(10.0, 1.0));
  EXPECT_THROW(integrate(DensityMatrix::basis_state(0, 4), m, 50.0, 5.0), Error);
}

TEST(Integrate, KernelOffsetContinuesTheClock) {
  const auto m = SystemModel::collective(2, spec_with(0.5, 0.2));
  const DensityMatrix rho = DensityMatrix::basis_state(0, 2);
  IntegrateOptions opt;
  opt.frame = Frame::kInteraction;
  opt.dt = 1e-2;
  const auto whole = integrate_to(rho, m, {0.0, 6.0}, opt);
  const auto first = integrate_to(rho, m, {0.0, 3.0}, opt);
  IntegrateOptions later = opt;
  later.kernel_offset = 3.0;
  // Interaction-frame states rotate with elapsed time; undo the lab rotation of
  // the first half before continuing.
  const auto second = integrate_to(first.states.back(), m, {0.0, 3.0}, later);
  EXPECT_LT(max_abs_diff(second.states.back().matrix(), whole.states.back().matrix()), 1e-10);
}

}  // namespace
}  // namespace qecbath
