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

// Measurement protocols: fidelity against time with and without error
// correction, multi-cycle schedules, crossover search and parameter sweeps.
//
// Every fidelity is taken in the frame rotating with the bare qubits, so free
// precession alone never lowers it.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qecbath/bath_model.hpp"
#include "qecbath/dynamics.hpp"
#include "qecbath/errors.hpp"
#include "qecbath/qec_codes.hpp"
#include "qecbath/quantum_core.hpp"

namespace qecbath {

enum class Topology { kCollective, kLocal };

inline std::string to_string(Topology t) { return t == Topology::kLocal ? "local" : "collective"; }

inline Topology topology_from_string(const std::string& s) {
  if (s == "collective") return Topology::kCollective;
  if (s == "local") return Topology::kLocal;
  throw DomainError("unknown topology '" + s + "' (expected collective|local)");
}

/// Collective baths for a multi-block register: one per code block, or one
/// shared by the whole register.
enum class CollectiveScope { kPerBlock, kGlobal };

inline std::string to_string(CollectiveScope s) { return s == CollectiveScope::kGlobal ? "global" : "per_block"; }

inline CollectiveScope collective_scope_from_string(const std::string& s) {
  if (s == "per_block") return CollectiveScope::kPerBlock;
  if (s == "global") return CollectiveScope::kGlobal;
  throw DomainError("unknown collective scope '" + s + "' (expected per_block|global)");
}

/// Whether the bath kernel restarts after each recovery or keeps running.
enum class KernelClock { kPerCycle, kGlobal };

inline std::string to_string(KernelClock c) { return c == KernelClock::kGlobal ? "global" : "per_cycle"; }

inline KernelClock kernel_clock_from_string(const std::string& s) {
  if (s == "per_cycle") return KernelClock::kPerCycle;
  if (s == "global") return KernelClock::kGlobal;
  throw DomainError("unknown kernel clock '" + s + "' (expected per_cycle|global)");
}

/// p |psi-><psi-| + (1 - p) I/4 with |psi-> = (|01> - |10>)/sqrt(2).
inline DensityMatrix werner_state(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("werner_state: p must lie in [0, 1]");
  ComplexVector s = ComplexVector::Zero(4);
  s(1) = 1.0 / std::sqrt(2.0);
  s(2) = -1.0 / std::sqrt(2.0);
  ComplexMatrix m = p * (s * s.adjoint()) + (1.0 - p) * ComplexMatrix::Identity(4, 4) / 4.0;
  return DensityMatrix(hermitian_part(m));
}

inline int state_logical_qubits(const std::string& name) {
  if (name == "zero" || name == "one" || name == "plus") return 1;
  if (name == "werner") return 2;
  throw DomainError("unknown initial state '" + name + "' (expected zero|one|plus|werner)");
}

inline DensityMatrix initial_state(const std::string& name, double p = 0.5) {
  if (name == "zero") return DensityMatrix::basis_state(0, 1);
  if (name == "one") return DensityMatrix::basis_state(1, 1);
  if (name == "plus") {
    ComplexVector v(2);
    v << 1.0, 1.0;
    return DensityMatrix::from_pure(v);
  }
  if (name == "werner") return werner_state(p);
  throw DomainError("unknown initial state '" + name + "' (expected zero|one|plus|werner)");
}

struct ProtocolSpec {
  std::string initial_state = "zero";
  double werner_p = 0.5;
  std::string code = "five_qubit";  // "none" disables the QEC branch
  std::vector<int> cycles{1};
  BathSpec bath;
  double omega = 1.0;
  Topology topology = Topology::kCollective;
  CollectiveScope scope = CollectiveScope::kPerBlock;
  Backend backend = Backend::kTimeLocal;
  Frame frame = Frame::kInteraction;
  KernelClock clock = KernelClock::kPerCycle;
  RecoveryMode recovery = RecoveryMode::kMixing;
  std::uint64_t seed = 0;
  double dt = 1e-3;
  std::vector<double> t_grid{0.0};
  bool comparison = true;

  bool has_code() const { return code != "none"; }

  void validate() const {
    const int nl = state_logical_qubits(initial_state);
    if (initial_state == "werner" && !(werner_p >= 0.0 && werner_p <= 1.0)) {
      throw DomainError("werner p must lie in [0, 1]");
    }
    bath.validate();
    if (!(omega > 0.0)) throw DomainError("omega must be > 0");
    if (!(dt > 0.0)) throw DomainError("dt must be > 0");
    if (t_grid.empty()) throw DomainError("time grid is empty");
    if (!(t_grid.front() >= 0.0)) throw DomainError("time grid must start at t >= 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
      if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("time grid must be strictly ascending");
    }
    if (cycles.empty()) throw DomainError("at least one cycle count is required");
    for (int c : cycles) {
      if (c < 1) throw DomainError("cycle counts must be >= 1");
    }
    if (!has_code()) {
      if (!comparison) throw DomainError("nothing to compute: no code and no comparison branch");
      return;
    }
    if (code == "five_qubit") {
      if (nl > 2) throw DomainError("five_qubit: at most two logical qubits");
    } else if (code == "steane") {
      if (nl != 1) throw DomainError("steane: single-qubit states only (two blocks exceed 12 qubits)");
    } else if (code == "toric_822") {
      if (nl != 2) throw DomainError("toric_822 encodes two logical qubits; use the werner state");
    } else {
      throw DomainError("unknown code '" + code + "' (expected five_qubit|steane|toric_822|none)");
    }
    if (recovery == RecoveryMode::kStochastic && code != "toric_822") {
      throw DomainError("stochastic recovery only applies to toric_822");
    }
  }
};

struct ExperimentResult {
  std::vector<double> t_grid;
  std::vector<double> fidelity_no_qec;            // empty without the comparison branch
  std::vector<int> cycles;                        // one QEC variant per entry
  std::vector<std::vector<double>> fidelity_qec;  // [variant][t]
  std::map<std::string, std::string> metadata;    // resolved topology and evaluation path
  double max_trace_deviation = 0.0;
  double max_hermiticity_deviation = 0.0;
  double min_eigenvalue = 1.0;
};

namespace detail {

inline std::uint64_t time_key(double t) { return std::bit_cast<std::uint64_t>(t); }

/// Logical channel of one code block from its action on |0>, |1>, |+>, |+i>.
struct BlockChannel {
  ComplexMatrix e[2][2];  // image of |a><b|

  static std::vector<DensityMatrix> probes() {
    ComplexVector plus(2), plus_i(2);
    plus << 1.0, 1.0;
    plus_i << 1.0, kI;
    return {DensityMatrix::basis_state(0, 1), DensityMatrix::basis_state(1, 1), DensityMatrix::from_pure(plus),
            DensityMatrix::from_pure(plus_i)};
  }

  static BlockChannel from_outputs(const std::vector<ComplexMatrix>& out) {
    BlockChannel ch;
    const ComplexMatrix half_id = 0.5 * (out[0] + out[1]);
    ch.e[0][0] = out[0];
    ch.e[1][1] = out[1];
    // |0><1| = (|+><+| - I/2) + i (|+i><+i| - I/2)
    ch.e[0][1] = (out[2] - half_id) + kI * (out[3] - half_id);
    ch.e[1][0] = ch.e[0][1].adjoint();
    return ch;
  }

  /// (L (x) L)(rho) for a two-qubit input.
  ComplexMatrix apply_pair(const ComplexMatrix& rho) const {
    ComplexMatrix out = ComplexMatrix::Zero(4, 4);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        for (int c = 0; c < 2; ++c) {
          for (int d = 0; d < 2; ++d) {
            const Complex w = rho(2 * a + b, 2 * c + d);
            if (w != Complex(0.0)) out += w * kron(e[a][c], e[b][d]);
          }
        }
      }
    }
    return out;
  }
};

inline DensityMatrix normalized(const ComplexMatrix& m) {
  const ComplexMatrix h = hermitian_part(m);
  return DensityMatrix(h / h.trace().real());
}

}  // namespace detail

/// Evaluates both protocol branches. Block channels are cached by
/// (cycle count, t), so repeated queries across inputs reuse integrations.
class ProtocolEngine {
 public:
  explicit ProtocolEngine(ProtocolSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    n_logical_ = state_logical_qubits(spec_.initial_state);
    if (spec_.has_code()) {
      code_ = std::make_shared<QecCode>(build_code(spec_.code));
      blocks_ = n_logical_ / code_->k_logical;
      factorized_ = blocks_ > 1 && !(spec_.topology == Topology::kCollective && spec_.scope == CollectiveScope::kGlobal);
      const int block_n = factorized_ ? code_->n_physical : blocks_ * code_->n_physical;
      const int per_bath = spec_.topology == Topology::kLocal ? 1
                           : (spec_.scope == CollectiveScope::kGlobal || factorized_) ? block_n
                                                                                       : code_->n_physical;
      qec_model_ = make_model(block_n, per_bath);
    }
    // Bare qubits that would share a code block share a bath.
    const int k = spec_.has_code() ? code_->k_logical : 1;
    const int bare_per_bath = spec_.topology == Topology::kLocal ? 1
                              : spec_.scope == CollectiveScope::kGlobal ? n_logical_
                                                                        : k;
    bare_model_ = make_model(n_logical_, bare_per_bath);
  }

  const ProtocolSpec& spec() const { return spec_; }
  bool factorized() const { return factorized_; }
  const SystemModel& bare_model() const { return bare_model_; }
  const std::optional<SystemModel>& qec_model() const { return qec_model_; }

  IntegrateOptions integrate_options(double kernel_offset = 0.0) const {
    IntegrateOptions opt;
    opt.dt = spec_.dt;
    opt.frame = spec_.frame;
    opt.report_frame = Frame::kInteraction;
    opt.kernel_offset = kernel_offset;
    return opt;
  }

  /// Bare logical register at each grid time (grid must start at 0).
  Trajectory bare_trajectory(const DensityMatrix& rho0, const std::vector<double>& grid) {
    auto traj = integrate_to(rho0, bare_model_, with_zero(grid), integrate_options());
    note(traj);
    if (grid.front() != 0.0) strip_zero(traj);
    return traj;
  }

  /// Decoded logical state after the QEC protocol with `n_cycles` equal
  /// segments, at each grid time.
  std::vector<DensityMatrix> qec_states(const DensityMatrix& rho0, int n_cycles, const std::vector<double>& grid) {
    if (!code_) throw DomainError("protocol has no code");
    if (!factorized_) return run_block(rho0, n_cycles, grid);
    // Fill the channel cache for every missing time, then compose.
    std::vector<double> missing;
    for (double t : grid) {
      if (!channels_.count({n_cycles, detail::time_key(t)})) missing.push_back(t);
    }
    if (!missing.empty()) {
      const auto probes = detail::BlockChannel::probes();
      std::vector<std::vector<DensityMatrix>> outs;
      for (const auto& p : probes) outs.push_back(run_block(p, n_cycles, missing));
      for (std::size_t i = 0; i < missing.size(); ++i) {
        std::vector<ComplexMatrix> o;
        for (const auto& v : outs) o.push_back(v[i].matrix());
        channels_[{n_cycles, detail::time_key(missing[i])}] = detail::BlockChannel::from_outputs(o);
      }
    }
    std::vector<DensityMatrix> result;
    for (double t : grid) {
      const auto& ch = channels_.at({n_cycles, detail::time_key(t)});
      result.push_back(detail::normalized(ch.apply_pair(rho0.matrix())));
    }
    return result;
  }

  ExperimentResult run(const DensityMatrix& rho0) {
    ExperimentResult r;
    r.t_grid = spec_.t_grid;
    if (spec_.comparison) {
      const auto traj = bare_trajectory(rho0, spec_.t_grid);
      for (const auto& s : traj.states) r.fidelity_no_qec.push_back(fidelity(rho0, s));
    }
    if (code_) {
      for (int c : spec_.cycles) {
        r.cycles.push_back(c);
        std::vector<double> f;
        for (const auto& s : qec_states(rho0, c, spec_.t_grid)) f.push_back(fidelity(rho0, s));
        r.fidelity_qec.push_back(std::move(f));
      }
    }
    r.metadata["evaluation"] = !code_ ? "bare_only" : factorized_ ? "block_factorized" : "direct";
    r.metadata["qec_register_qubits"] = code_ ? std::to_string(qec_model_->n_qubits) : "0";
    r.metadata["qec_baths"] = code_ ? std::to_string(qec_model_->groups.size()) : "0";
    r.metadata["bare_baths"] = std::to_string(bare_model_.groups.size());
    r.metadata["fidelity_frame"] = "rotating";
    r.max_trace_deviation = max_trace_;
    r.max_hermiticity_deviation = max_herm_;
    r.min_eigenvalue = min_eig_;
    return r;
  }

  ExperimentResult run() { return run(initial_state(spec_.initial_state, spec_.werner_p)); }

 private:
  SystemModel make_model(int n, int per_bath) const {
    per_bath = std::clamp(per_bath, 1, n);
    if (per_bath == 1) return SystemModel::local(n, spec_.bath, spec_.omega, spec_.backend);
    return SystemModel::collective_blocks(n / per_bath, per_bath, spec_.bath, spec_.omega, spec_.backend);
  }

  static std::vector<double> with_zero(const std::vector<double>& grid) {
    std::vector<double> g = grid;
    if (g.empty() || g.front() != 0.0) g.insert(g.begin(), 0.0);
    return g;
  }

  static void strip_zero(Trajectory& traj) {
    traj.times.erase(traj.times.begin());
    traj.states.erase(traj.states.begin());
    traj.diagnostics.erase(traj.diagnostics.begin());
  }

  void note(const Trajectory& traj) {
    max_trace_ = std::max(max_trace_, traj.max_step_trace_deviation);
    max_herm_ = std::max(max_herm_, traj.max_step_hermiticity_deviation);
    for (const auto& d : traj.diagnostics) {
      if (!std::isnan(d.min_eigenvalue)) min_eig_ = std::min(min_eig_, d.min_eigenvalue);
    }
  }

  /// QEC branch on the evaluated register (one block, or the whole register
  /// when it cannot be factorized).
  std::vector<DensityMatrix> run_block(const DensityMatrix& rho0, int n_cycles, const std::vector<double>& grid) {
    const DensityMatrix enc = encode(*code_, rho0);
    std::vector<DensityMatrix> out;
    if (n_cycles == 1) {
      // One trajectory serves every grid time; recovery happens only at the end.
      const auto traj = integrate_to(enc, *qec_model_, with_zero(grid), integrate_options());
      note(traj);
      const std::size_t skip = grid.front() == 0.0 ? 0 : 1;
      for (std::size_t i = skip; i < traj.states.size(); ++i) {
        std::mt19937_64 rng(spec_.seed);
        out.push_back(decode(*code_, recover(*code_, traj.states[i], {spec_.recovery, &rng})));
      }
      return out;
    }
    for (double t : grid) {
      std::mt19937_64 rng(spec_.seed);
      const double seg = t / n_cycles;
      DensityMatrix rho = enc;
      for (int k = 0; k < n_cycles; ++k) {
        const double offset = spec_.clock == KernelClock::kGlobal ? seg * k : 0.0;
        const auto traj = integrate_to(rho, *qec_model_, {0.0, seg}, integrate_options(offset));
        note(traj);
        rho = recover(*code_, traj.states.back(), {spec_.recovery, &rng});
      }
      out.push_back(decode(*code_, rho));
    }
    return out;
  }

  ProtocolSpec spec_;
  int n_logical_ = 1;
  int blocks_ = 1;
  bool factorized_ = false;
  std::shared_ptr<QecCode> code_;
  std::optional<SystemModel> qec_model_;
  SystemModel bare_model_;
  std::map<std::pair<int, std::uint64_t>, detail::BlockChannel> channels_;
  double max_trace_ = 0.0;
  double max_herm_ = 0.0;
  double min_eig_ = 1.0;
};

inline ExperimentResult run_protocol(const ProtocolSpec& spec) { return ProtocolEngine(spec).run(); }

// ---------------------------------------------------------------------------
// Crossover search.

struct CriticalTimeOptions {
  double kt_max = 5.0;
  int coarse_points = 50;
  double g_tol = 1e-6;
  double kt_tol = 1e-4;
};

struct CriticalTimeResult {
  bool found = false;
  double kappa_tc = std::numeric_limits<double>::quiet_NaN();
  double gap_at_root = std::numeric_limits<double>::quiet_NaN();
  int evaluations = 0;
  std::string note;  // "ok" or why nothing was found
};

/// kappa * t at the first sign change of F_qec - F_no_qec on (0, kt_max / kappa].
/// The engine's initial state is replaced by `rho0`.
inline CriticalTimeResult critical_time(ProtocolEngine& engine, const DensityMatrix& rho0, int n_cycles,
                                        const CriticalTimeOptions& opt = {}) {
  if (opt.coarse_points < 2) throw DomainError("critical_time: need at least two coarse points");
  if (!(opt.kt_max > 0.0)) throw DomainError("critical_time: window must be positive");
  CriticalTimeResult res;
  const double kappa = engine.spec().bath.kappa;
  if (kappa == 0.0) {
    res.note = "no crossover in window (kappa = 0)";
    return res;
  }
  auto gaps = [&](const std::vector<double>& ts) {
    const auto bare = engine.bare_trajectory(rho0, ts);
    const auto qec = engine.qec_states(rho0, n_cycles, ts);
    std::vector<double> g;
    for (std::size_t i = 0; i < ts.size(); ++i) g.push_back(fidelity(rho0, qec[i]) - fidelity(rho0, bare.states[i]));
    res.evaluations += static_cast<int>(ts.size());
    return g;
  };
  const double t_max = opt.kt_max / kappa;
  std::vector<double> ts;
  for (int i = 1; i <= opt.coarse_points; ++i) ts.push_back(t_max * i / opt.coarse_points);
  const auto g = gaps(ts);
  std::optional<std::size_t> hit;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 0.0 || (i > 0 && std::signbit(g[i]) != std::signbit(g[i - 1]))) {
      hit = i;
      break;
    }
  }
  if (!hit) {
    res.note = std::string("no crossover in window (QEC ") + (g.back() > 0.0 ? "ahead" : "behind") +
               " throughout)";
    return res;
  }
  if (g[*hit] == 0.0) {
    res.found = true;
    res.kappa_tc = kappa * ts[*hit];
    res.gap_at_root = 0.0;
    res.note = "ok";
    return res;
  }
  double lo = ts[*hit - 1], hi = ts[*hit];
  double glo = g[*hit - 1];
  double mid = 0.5 * (lo + hi), gm = glo;
  while (hi - lo > opt.kt_tol / kappa) {
    mid = 0.5 * (lo + hi);
    gm = gaps({mid})[0];
    if (std::abs(gm) < opt.g_tol) break;
    if (std::signbit(gm) == std::signbit(glo)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  if (hi - lo <= opt.kt_tol / kappa) {
    mid = 0.5 * (lo + hi);
    gm = gaps({mid})[0];
  }
  res.found = true;
  res.kappa_tc = kappa * mid;
  res.gap_at_root = gm;
  res.note = "ok";
  return res;
}

inline CriticalTimeResult critical_time(const ProtocolSpec& spec, int n_cycles, const CriticalTimeOptions& opt = {}) {
  ProtocolEngine engine(spec);
  return critical_time(engine, initial_state(spec.initial_state, spec.werner_p), n_cycles, opt);
}

// ---------------------------------------------------------------------------
// Parameter sweeps.

struct SweepGrid {
  std::vector<double> kappas{0.01};
  std::vector<double> temperatures{0.2};
  std::vector<double> ps{0.5};
  std::vector<std::string> codes{"five_qubit"};
  std::vector<int> cycles{1};
  std::vector<Topology> topologies{Topology::kCollective};
  /// Interpret the base time grid as kappa * t.
  bool kappa_time_units = false;
};

struct SweepPoint {
  std::size_t index = 0;
  double kappa = 0.0;
  double temperature = 0.0;
  double p = 0.0;
  std::string code;
  int n_cycles = 1;
  Topology topology = Topology::kCollective;
};

struct SweepRow {
  SweepPoint point;
  bool ok = false;
  std::string error;
  ExperimentResult result;
};

/// Cartesian product; kappa varies slowest and topology fastest.
inline std::vector<SweepPoint> expand_grid(const SweepGrid& grid) {
  std::vector<SweepPoint> out;
  for (double k : grid.kappas)
    for (double t : grid.temperatures)
      for (double p : grid.ps)
        for (const auto& c : grid.codes)
          for (int n : grid.cycles)
            for (Topology top : grid.topologies) out.push_back({out.size(), k, t, p, c, n, top});
  return out;
}

inline ProtocolSpec point_spec(const ProtocolSpec& base, const SweepGrid& grid, const SweepPoint& pt) {
  ProtocolSpec s = base;
  s.bath.kappa = pt.kappa;
  s.bath.temperature = pt.temperature;
  s.werner_p = pt.p;
  s.code = pt.code;
  s.cycles = {pt.n_cycles};
  s.topology = pt.topology;
  s.seed = base.seed + pt.index;
  if (grid.kappa_time_units) {
    if (!(pt.kappa > 0.0)) throw DomainError("kappa-scaled time grid needs kappa > 0");
    for (double& t : s.t_grid) t /= pt.kappa;
  }
  return s;
}

inline SweepRow run_point(const ProtocolSpec& base, const SweepGrid& grid, const SweepPoint& pt) {
  SweepRow row;
  row.point = pt;
  try {
    row.result = run_protocol(point_spec(base, grid, pt));
    row.ok = true;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// Runs every point not in `skip` on `workers` threads and hands finished rows
/// to `emit` in grid order, from the calling thread only.
inline void run_sweep(const ProtocolSpec& base, const SweepGrid& grid, int workers, const std::set<std::size_t>& skip,
                      const std::function<void(const SweepRow&)>& emit) {
  std::vector<SweepPoint> todo;
  for (const auto& pt : expand_grid(grid)) {
    if (!skip.count(pt.index)) todo.push_back(pt);
  }
  workers = std::max(1, std::min<int>(workers, static_cast<int>(todo.size())));
  if (workers == 1) {
    for (const auto& pt : todo) emit(run_point(base, grid, pt));
    return;
  }
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, SweepRow> ready;  // keyed by position in todo
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < todo.size(); i = next++) {
        SweepRow row = run_point(base, grid, todo[i]);
        std::lock_guard<std::mutex> lock(mu);
        ready.emplace(i, std::move(row));
        cv.notify_one();
      }
    });
  }
  for (std::size_t i = 0; i < todo.size(); ++i) {
    SweepRow row;
    {
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&] { return ready.count(i) > 0; });
      row = std::move(ready.at(i));
      ready.erase(i);
    }
    emit(row);
  }
  for (auto& t : pool) t.join();
}

}  // namespace qecbath
