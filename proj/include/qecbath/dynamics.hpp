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

#pragma once

// Reduced master equation for a qubit register attached to local or
// collective thermal baths, and a fixed-step RK4 integrator.
//
// Per bath group g with S- = sum_{j in g} sigma-_j the dissipator is
//   T = c_down (S- rho S+ - S+ S- rho) + c_up (S+ rho S- - S- S+ rho)
//   drho/dt += T + T^dagger
// The sandwich operators never get formed as matrices: the ladder kernels
// below act on rows or columns directly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qecbath/bath_model.hpp"
#include "qecbath/errors.hpp"
#include "qecbath/quantum_core.hpp"

namespace qecbath {

enum class Backend { kTimeLocal, kMemory, kLindblad };

inline std::string to_string(Backend b) {
  switch (b) {
    case Backend::kTimeLocal: return "time_local";
    case Backend::kMemory: return "memory";
    case Backend::kLindblad: return "lindblad";
  }
  return "?";
}

inline Backend backend_from_string(const std::string& s) {
  if (s == "time_local") return Backend::kTimeLocal;
  if (s == "memory") return Backend::kMemory;
  if (s == "lindblad") return Backend::kLindblad;
  throw DomainError("unknown backend '" + s + "' (expected time_local|memory|lindblad)");
}

/// kLab integrates -i[H,rho] explicitly. kInteraction drops it, which is exact
/// because every group shares one frequency. Either way the stored states can
/// be reported in either frame.
enum class Frame { kLab, kInteraction };

inline std::string to_string(Frame f) { return f == Frame::kLab ? "lab" : "interaction"; }

inline Frame frame_from_string(const std::string& s) {
  if (s == "lab") return Frame::kLab;
  if (s == "interaction") return Frame::kInteraction;
  throw DomainError("unknown frame '" + s + "' (expected lab|interaction)");
}

struct BathGroup {
  std::vector<int> qubits;
  BathSpec spec;
};

struct SystemModel {
  int n_qubits = 1;
  std::vector<double> omegas{1.0};
  std::vector<BathGroup> groups;
  Backend backend = Backend::kTimeLocal;

  /// Every qubit gets its own copy of `spec`.
  static SystemModel local(int n, const BathSpec& spec, double omega = 1.0,
                           Backend backend = Backend::kTimeLocal) {
    SystemModel m;
    m.n_qubits = n;
    m.omegas.assign(n, omega);
    m.backend = backend;
    for (int j = 0; j < n; ++j) m.groups.push_back({{j}, spec});
    m.validate();
    return m;
  }

  /// Consecutive blocks of `block_size` qubits each share one bath.
  static SystemModel collective_blocks(int n_blocks, int block_size, const BathSpec& spec,
                                       double omega = 1.0, Backend backend = Backend::kTimeLocal) {
    SystemModel m;
    m.n_qubits = n_blocks * block_size;
    m.omegas.assign(m.n_qubits, omega);
    m.backend = backend;
    for (int b = 0; b < n_blocks; ++b) {
      BathGroup g{{}, spec};
      for (int j = 0; j < block_size; ++j) g.qubits.push_back(b * block_size + j);
      m.groups.push_back(std::move(g));
    }
    m.validate();
    return m;
  }

  static SystemModel collective(int n, const BathSpec& spec, double omega = 1.0,
                                Backend backend = Backend::kTimeLocal) {
    return collective_blocks(1, n, spec, omega, backend);
  }

  Eigen::Index dim() const { return Eigen::Index{1} << n_qubits; }

  void validate() const {
    if (n_qubits < 1 || n_qubits > 12) throw DomainError("register must hold 1..12 qubits");
    if (static_cast<int>(omegas.size()) != n_qubits) throw DomainError("one frequency per qubit required");
    for (double w : omegas) {
      if (!(w > 0.0)) throw DomainError("qubit frequencies must be > 0");
    }
    std::vector<int> seen(n_qubits, 0);
    for (const auto& g : groups) {
      if (g.qubits.empty()) throw DomainError("empty bath group");
      g.spec.validate();
      for (int q : g.qubits) {
        if (q < 0 || q >= n_qubits) throw DomainError("bath group names qubit outside register");
        if (seen[q]++) throw DomainError("qubit " + std::to_string(q) + " bound to more than one bath");
        if (omegas[q] != omegas[g.qubits.front()]) {
          throw DomainError("qubits sharing a bath must share one frequency");
        }
      }
    }
    for (int q = 0; q < n_qubits; ++q) {
      if (!seen[q]) throw DomainError("qubit " + std::to_string(q) + " has no bath");
    }
  }
};

inline ComplexMatrix system_hamiltonian(const SystemModel& model) {
  model.validate();
  const Eigen::Index d = model.dim();
  ComplexMatrix h = ComplexMatrix::Zero(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    double e = 0.0;
    for (int j = 0; j < model.n_qubits; ++j) {
      // |0> is the sigma_z = +1 level.
      const bool one = static_cast<std::size_t>(a) & qubit_mask(j, model.n_qubits);
      e += 0.5 * model.omegas[j] * (one ? -1.0 : 1.0);
    }
    h(a, a) = e;
  }
  return h;
}

struct InteractionOps {
  ComplexMatrix s1;  // raising, carries exp(+i w t)
  ComplexMatrix s2;  // lowering
};

inline std::vector<InteractionOps> interaction_ops(const SystemModel& model, double t) {
  if (t < 0.0) throw DomainError("interaction_ops: t must be >= 0");
  model.validate();
  std::vector<InteractionOps> out;
  for (const auto& g : model.groups) {
    ComplexMatrix s1 = ComplexMatrix::Zero(model.dim(), model.dim());
    for (int j : g.qubits) {
      s1 += std::exp(Complex(0.0, model.omegas[j] * t)) * embed(ops::sigma_plus(), j, model.n_qubits);
    }
    ComplexMatrix s2 = s1.adjoint();
    out.push_back({std::move(s1), std::move(s2)});
  }
  return out;
}

namespace detail {

// out += alpha * S- m, with S- = sum sigma-_j = sum |1><0|_j.
inline void add_lower_left(const ComplexMatrix& m, const std::vector<Eigen::Index>& masks, Complex alpha,
                           ComplexMatrix& out) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index c = 0; c < d; ++c) {
    const Complex* src = m.data() + c * d;
    Complex* dst = out.data() + c * d;
    for (Eigen::Index mask : masks) {
      for (Eigen::Index r = 0; r < d; ++r) {
        if (r & mask) dst[r] += alpha * src[r ^ mask];
      }
    }
  }
}

// out += alpha * S+ m.
inline void add_raise_left(const ComplexMatrix& m, const std::vector<Eigen::Index>& masks, Complex alpha,
                           ComplexMatrix& out) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index c = 0; c < d; ++c) {
    const Complex* src = m.data() + c * d;
    Complex* dst = out.data() + c * d;
    for (Eigen::Index mask : masks) {
      for (Eigen::Index r = 0; r < d; ++r) {
        if (!(r & mask)) dst[r] += alpha * src[r | mask];
      }
    }
  }
}

// out += alpha * m S+  (column c picks up column c^mask when bit set).
inline void add_right_raise(const ComplexMatrix& m, const std::vector<Eigen::Index>& masks, Complex alpha,
                            ComplexMatrix& out) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index mask : masks) {
    for (Eigen::Index c = 0; c < d; ++c) {
      if (c & mask) out.col(c) += alpha * m.col(c ^ mask);
    }
  }
}

// out += alpha * m S-.
inline void add_right_lower(const ComplexMatrix& m, const std::vector<Eigen::Index>& masks, Complex alpha,
                            ComplexMatrix& out) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index mask : masks) {
    for (Eigen::Index c = 0; c < d; ++c) {
      if (!(c & mask)) out.col(c) += alpha * m.col(c | mask);
    }
  }
}

// out = S- m (overwrites).
inline void lower_left(const ComplexMatrix& m, const std::vector<Eigen::Index>& masks, ComplexMatrix& out) {
  out.setZero(m.rows(), m.cols());
  add_lower_left(m, masks, 1.0, out);
}

inline void raise_left(const ComplexMatrix& m, const std::vector<Eigen::Index>& masks, ComplexMatrix& out) {
  out.setZero(m.rows(), m.cols());
  add_raise_left(m, masks, 1.0, out);
}

struct GroupCoefficients {
  Complex c_down;
  Complex c_up;
};

/// Precomputed register layout shared by every RHS evaluation.
struct Prepared {
  std::vector<std::vector<Eigen::Index>> masks;  // per group
  std::vector<double> energies;                  // diagonal of H_S
  std::vector<double> group_omega;

  explicit Prepared(const SystemModel& model) {
    model.validate();
    for (const auto& g : model.groups) {
      std::vector<Eigen::Index> m;
      for (int q : g.qubits) m.push_back(static_cast<Eigen::Index>(qubit_mask(q, model.n_qubits)));
      masks.push_back(std::move(m));
      group_omega.push_back(model.omegas[g.qubits.front()]);
    }
    const ComplexMatrix h = system_hamiltonian(model);
    energies.resize(h.rows());
    for (Eigen::Index a = 0; a < h.rows(); ++a) energies[a] = h(a, a).real();
  }
};

struct Workspace {
  ComplexMatrix a, b, t;
};

inline void assemble_rhs(const ComplexMatrix& rho, const Prepared& prep,
                         const std::vector<GroupCoefficients>& coeffs, bool with_commutator,
                         ComplexMatrix& out, Workspace& ws) {
  const Eigen::Index d = rho.rows();
  out.setZero(d, d);
  if (with_commutator) {
    for (Eigen::Index c = 0; c < d; ++c) {
      for (Eigen::Index r = 0; r < d; ++r) {
        out(r, c) = Complex(0.0, -(prep.energies[r] - prep.energies[c])) * rho(r, c);
      }
    }
  }
  for (std::size_t g = 0; g < prep.masks.size(); ++g) {
    const auto& masks = prep.masks[g];
    const Complex cd = coeffs[g].c_down;
    const Complex cu = coeffs[g].c_up;
    if (cd == Complex(0.0) && cu == Complex(0.0)) continue;
    lower_left(rho, masks, ws.a);  // S- rho
    raise_left(rho, masks, ws.b);  // S+ rho
    ws.t.setZero(d, d);
    add_right_raise(ws.a, masks, cd, ws.t);   // S- rho S+
    add_raise_left(ws.a, masks, -cd, ws.t);   // S+ S- rho
    add_right_lower(ws.b, masks, cu, ws.t);   // S+ rho S-
    add_lower_left(ws.b, masks, -cu, ws.t);   // S- S+ rho
    out += ws.t;
    out += ws.t.adjoint();
  }
}

inline GroupCoefficients closed_form(const BathGroup& g, double omega, double t, Backend backend) {
  if (backend == Backend::kLindblad) {
    const auto r = lindblad_rates(g.spec, omega);
    return {0.5 * r.gamma_down, 0.5 * r.gamma_up};
  }
  const auto c = rate_coefficients(t, g.spec, omega);
  return {c.c_down, c.c_up};
}

/// Running trapezoid of the kernel integrands over a monotone sequence of
/// evaluation times.
class KernelAccumulator {
 public:
  KernelAccumulator(const BathSpec& spec, double omega, double t0) : spec_(spec), omega_(omega), last_t_(t0) {
    // The integral starts at kernel time zero even when the segment does not.
    if (t0 > 0.0) advance_from_zero(t0);
    last_f_ = kernel_integrand(last_t_, spec_, omega_);
  }

  GroupCoefficients at(double t) {
    if (t < last_t_ - 1e-9 * std::max(1.0, last_t_)) throw DomainError("memory kernel evaluated backwards in time");
    if (t > last_t_) {
      const KernelIntegrand f = kernel_integrand(t, spec_, omega_);
      const double h = t - last_t_;
      down_ += 0.5 * h * (last_f_.down + f.down);
      up_ += 0.5 * h * (last_f_.up + f.up);
      last_t_ = t;
      last_f_ = f;
    }
    return {down_, up_};
  }

 private:
  void advance_from_zero(double t0) {
    // Fine uniform grid for the part before the segment.
    const int n = std::max(1, static_cast<int>(std::ceil(t0 / 1e-3)));
    KernelIntegrand prev = kernel_integrand(0.0, spec_, omega_);
    for (int i = 1; i <= n; ++i) {
      const double s = t0 * i / n;
      const KernelIntegrand f = kernel_integrand(s, spec_, omega_);
      down_ += 0.5 * (t0 / n) * (prev.down + f.down);
      up_ += 0.5 * (t0 / n) * (prev.up + f.up);
      prev = f;
    }
  }

  BathSpec spec_;
  double omega_;
  double last_t_;
  KernelIntegrand last_f_{};
  Complex down_{0.0, 0.0};
  Complex up_{0.0, 0.0};
};

}  // namespace detail

/// Lab-frame right-hand side with closed-form (or Lindblad) coefficients.
inline ComplexMatrix me_rhs(const DensityMatrix& rho, double t, const SystemModel& model) {
  if (rho.dim() != model.dim()) throw DomainError("me_rhs: state dimension does not match register");
  if (model.backend == Backend::kMemory) {
    throw DomainError("me_rhs: memory backend needs a history; use memory_rhs");
  }
  const detail::Prepared prep(model);
  std::vector<detail::GroupCoefficients> coeffs;
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    coeffs.push_back(detail::closed_form(model.groups[g], prep.group_omega[g], t, model.backend));
  }
  ComplexMatrix out;
  detail::Workspace ws;
  detail::assemble_rhs(rho.matrix(), prep, coeffs, true, out, ws);
  return out;
}

struct StepDiagnostics {
  double time = 0.0;
  double trace_deviation = 0.0;        // before renormalization
  double hermiticity_deviation = 0.0;  // before symmetrization
  double min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  std::vector<StepDiagnostics> diagnostics;  // one per stored point
  double max_step_trace_deviation = 0.0;     // over every RK4 step
  double max_step_hermiticity_deviation = 0.0;
};

/// Quadrature route: coefficients from the trapezoid of the correlation
/// kernels over the history grid, assembled with the same bracket structure.
inline ComplexMatrix memory_rhs(const Trajectory& history, const SystemModel& model) {
  if (history.times.empty() || history.states.size() != history.times.size()) {
    throw DomainError("memory_rhs: empty history");
  }
  if (history.times.front() != 0.0) throw DomainError("memory_rhs: history must start at t = 0");
  const DensityMatrix& rho = history.states.back();
  if (rho.dim() != model.dim()) throw DomainError("memory_rhs: state dimension does not match register");
  const detail::Prepared prep(model);
  std::vector<detail::GroupCoefficients> coeffs;
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    detail::KernelAccumulator acc(model.groups[g].spec, prep.group_omega[g], 0.0);
    detail::GroupCoefficients c{};
    for (double s : history.times) c = acc.at(s);
    coeffs.push_back(c);
  }
  ComplexMatrix out;
  detail::Workspace ws;
  detail::assemble_rhs(rho.matrix(), prep, coeffs, true, out, ws);
  return out;
}

struct IntegrateOptions {
  double dt = 1e-3;
  Frame frame = Frame::kLab;
  /// Kernel time at the start of this integration (segments of a longer run).
  double kernel_offset = 0.0;
  bool check_positivity = true;
  /// Frame of the stored states. kInteraction reports states rotating with the
  /// bare qubits, where free evolution is the identity.
  Frame report_frame = Frame::kLab;
};

/// Integrates and stores the state at every entry of `times` (ascending,
/// starting at 0). Between consecutive outputs the interval is split into
/// ceil(gap/dt) equal steps.
inline Trajectory integrate_to(const DensityMatrix& rho0, const SystemModel& model,
                               const std::vector<double>& times, const IntegrateOptions& opt = {}) {
  model.validate();
  if (rho0.dim() != model.dim()) throw DomainError("integrate: state dimension does not match register");
  if (!(opt.dt > 0.0)) throw DomainError("integrate: dt must be > 0");
  if (opt.kernel_offset < 0.0) throw DomainError("integrate: kernel offset must be >= 0");
  if (times.empty() || times.front() != 0.0) throw DomainError("integrate: output times must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] >= times[i - 1])) throw DomainError("integrate: output times must be ascending");
  }

  const detail::Prepared prep(model);
  const bool lab = opt.frame == Frame::kLab;
  // +1: rotate interaction to lab, -1: lab to interaction, 0: none.
  const double rotate = opt.frame == opt.report_frame ? 0.0 : (lab ? -1.0 : 1.0);
  const std::size_t ng = model.groups.size();
  std::vector<detail::KernelAccumulator> memory;
  if (model.backend == Backend::kMemory) {
    for (std::size_t g = 0; g < ng; ++g) {
      memory.emplace_back(model.groups[g].spec, prep.group_omega[g], opt.kernel_offset);
    }
  }
  std::vector<detail::GroupCoefficients> coeffs(ng);
  auto coefficients_at = [&](double elapsed) {
    const double tk = opt.kernel_offset + elapsed;
    for (std::size_t g = 0; g < ng; ++g) {
      coeffs[g] = model.backend == Backend::kMemory
                      ? memory[g].at(tk)
                      : detail::closed_form(model.groups[g], prep.group_omega[g], tk, model.backend);
    }
  };

  const Eigen::Index d = model.dim();
  ComplexMatrix rho = rho0.matrix();
  ComplexMatrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);
  detail::Workspace ws;
  Trajectory traj;

  auto store = [&](double t) {
    ComplexMatrix m = rho;
    if (rotate != 0.0) {
      for (Eigen::Index c = 0; c < d; ++c) {
        for (Eigen::Index r = 0; r < d; ++r) {
          m(r, c) *= std::exp(Complex(0.0, -rotate * (prep.energies[r] - prep.energies[c]) * t));
        }
      }
    }
    StepDiagnostics diag;
    diag.time = t;
    diag.hermiticity_deviation = hermiticity_deviation(m);
    const Complex tr = m.trace();
    diag.trace_deviation = std::abs(tr - Complex(1.0, 0.0));
    if (!std::isfinite(diag.trace_deviation) || diag.trace_deviation > 1e-6) {
      throw TraceDriftError("trace drifted by " + std::to_string(diag.trace_deviation) + " at t = " +
                            std::to_string(t) + "; reduce dt");
    }
    m = hermitian_part(m) / tr.real();
    DensityMatrix state(std::move(m));
    if (opt.check_positivity) {
      diag.min_eigenvalue = state.min_eigenvalue();
      if (diag.min_eigenvalue < -tol::kPositivityAbort) {
        throw PositivityError("eigenvalue " + std::to_string(diag.min_eigenvalue) + " at t = " +
                              std::to_string(t));
      }
    }
    traj.times.push_back(t);
    traj.states.push_back(std::move(state));
    traj.diagnostics.push_back(diag);
  };

  store(0.0);
  double t = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double gap = times[i] - times[i - 1];
    const long steps = gap > 0.0 ? std::max(1L, static_cast<long>(std::ceil(gap / opt.dt - 1e-9))) : 0L;
    const double h = steps > 0 ? gap / steps : 0.0;
    for (long s = 0; s < steps; ++s) {
      const double t0 = times[i - 1] + h * s;
      coefficients_at(t0);
      detail::assemble_rhs(rho, prep, coeffs, lab, k1, ws);
      coefficients_at(t0 + 0.5 * h);
      tmp = rho + (0.5 * h) * k1;
      detail::assemble_rhs(tmp, prep, coeffs, lab, k2, ws);
      tmp = rho + (0.5 * h) * k2;
      detail::assemble_rhs(tmp, prep, coeffs, lab, k3, ws);
      coefficients_at(t0 + h);
      tmp = rho + h * k3;
      detail::assemble_rhs(tmp, prep, coeffs, lab, k4, ws);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      traj.max_step_trace_deviation =
          std::max(traj.max_step_trace_deviation, std::abs(rho.trace() - Complex(1.0, 0.0)));
      if (!(traj.max_step_trace_deviation <= 1e-6)) {
        throw TraceDriftError("trace drifted by " + std::to_string(traj.max_step_trace_deviation) +
                              " during integration; reduce dt");
      }
    }
    traj.max_step_hermiticity_deviation =
        std::max(traj.max_step_hermiticity_deviation, hermiticity_deviation(rho));
    t = times[i];
    store(t);
  }
  return traj;
}

/// Fixed-step integration to t_final; stores every `store_every` steps (0 means
/// only the endpoints) and always the final state.
inline Trajectory integrate(const DensityMatrix& rho0, const SystemModel& model, double t_final, double dt,
                            int store_every = 0, IntegrateOptions opt = {}) {
  if (!(t_final >= 0.0)) throw DomainError("integrate: t_final must be >= 0");
  if (!(dt > 0.0)) throw DomainError("integrate: dt must be > 0");
  if (store_every < 0) throw DomainError("integrate: store_every must be >= 0");
  opt.dt = dt;
  std::vector<double> times{0.0};
  if (t_final > 0.0) {
    const long steps = std::max(1L, static_cast<long>(std::ceil(t_final / dt - 1e-9)));
    const double h = t_final / steps;
    if (store_every > 0) {
      for (long s = store_every; s < steps; s += store_every) times.push_back(h * s);
    }
    times.push_back(t_final);
    // Each output gap is a whole number of steps of size h.
    opt.dt = h * (1.0 + 1e-12);
  }
  return integrate_to(rho0, model, times, opt);
}

}  // namespace qecbath
