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

// Bosonic thermal bath: occupations, discretized spectra, two-point
// correlation functions and the time-dependent second-order rate
// coefficients. Units: hbar = k_B = 1, frequencies and temperatures in units
// of the qubit frequency.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qecbath/errors.hpp"
#include "qecbath/quantum_core.hpp"

namespace qecbath {

/// Sign of the detuning entering the rate denominators.
///  - kCounterRotating: d_k = w + W_k
///  - kResonant:        d_k = w - W_k (energy-conserving sigma+ b pairing)
enum class ResonanceConvention { kCounterRotating, kResonant };

inline std::string to_string(ResonanceConvention c) {
  return c == ResonanceConvention::kResonant ? "resonant" : "as_written";
}

inline ResonanceConvention resonance_from_string(const std::string& s) {
  if (s == "resonant") return ResonanceConvention::kResonant;
  if (s == "as_written") return ResonanceConvention::kCounterRotating;
  throw DomainError("unknown resonance convention '" + s + "' (expected resonant|as_written)");
}

struct BathSpec {
  double temperature = 0.2;
  double kappa = 0.01;  // total strength Gamma = sum_k g_k^2 = kappa^2
  int n_modes = 1;
  double omega_min = 1.0;
  double omega_max = 1.0;
  ResonanceConvention convention = ResonanceConvention::kResonant;

  double gamma() const { return kappa * kappa; }

  void validate() const {
    if (!(temperature > 0.0)) throw DomainError("bath temperature must be > 0");
    if (!(kappa >= 0.0)) throw DomainError("bath coupling kappa must be >= 0");
    if (n_modes < 1) throw DomainError("bath needs at least one mode");
    if (!(omega_min >= 0.0) || !(omega_min <= omega_max)) {
      throw DomainError("bath window must satisfy 0 <= omega_min <= omega_max");
    }
  }
};

struct Mode {
  double frequency = 0.0;
  double coupling = 0.0;  // g_k >= 0
};

using ModeSet = std::vector<Mode>;

/// Bose-Einstein occupation 1/(exp(w/T) - 1).
inline double bose_occupation(double omega, double temperature) {
  if (!(omega > 0.0)) throw DomainError("bose_occupation: omega must be > 0");
  if (!(temperature > 0.0)) throw DomainError("bose_occupation: temperature must be > 0");
  const double x = omega / temperature;
  if (x > 700.0) return 0.0;
  return 1.0 / std::expm1(x);
}

/// Uniform grid on [omega_min, omega_max] (endpoints included; a single mode
/// sits at the window midpoint) with equal weights g_k^2 = kappa^2 / N.
inline ModeSet discretize_spectrum(const BathSpec& spec) {
  spec.validate();
  ModeSet modes(spec.n_modes);
  const double g = std::sqrt(spec.gamma() / spec.n_modes);
  for (int k = 0; k < spec.n_modes; ++k) {
    double w = 0.5 * (spec.omega_min + spec.omega_max);
    if (spec.n_modes > 1) {
      w = spec.omega_min + (spec.omega_max - spec.omega_min) * k / (spec.n_modes - 1);
    }
    modes[k] = {w, g};
  }
  return modes;
}

/// Phi_{alpha alpha'}(tau) for alpha, alpha' in {1, 2}. The occupation is
/// evaluated at the qubit frequency.
inline Complex correlation_kernel(int alpha, int alpha_prime, double tau, const BathSpec& spec,
                                  double qubit_omega) {
  if (alpha < 1 || alpha > 2 || alpha_prime < 1 || alpha_prime > 2) {
    throw DomainError("correlation_kernel: indices must be in {1,2}");
  }
  if (alpha == alpha_prime) return {0.0, 0.0};
  const double n = bose_occupation(qubit_omega, spec.temperature);
  const double occupation = (alpha == 1) ? n + 1.0 : n;
  const double sign = (alpha == 1) ? 1.0 : -1.0;
  Complex acc = 0.0;
  for (const auto& mode : discretize_spectrum(spec)) {
    acc += mode.coupling * mode.coupling * std::exp(Complex(0.0, sign * mode.frequency * tau));
  }
  return acc * occupation;
}

/// int_0^t exp(i x s) ds = (sin(xt) + 2i sin^2(xt/2)) / x, free of the
/// cancellation in 1 - cos(xt) as x -> 0.
inline Complex phase_integral(double x, double t) {
  if (x == 0.0) return {t, 0.0};
  const double half = std::sin(0.5 * x * t);
  return {std::sin(x * t) / x, 2.0 * half * half / x};
}

struct RateCoefficients {
  Complex c_down{0.0, 0.0};  // multiplies (s- rho s+ - s+ s- rho)
  Complex c_up{0.0, 0.0};    // multiplies (s+ rho s- - s- s+ rho)
};

/// Closed-form time-dependent coefficients:
///   c_up   = sum_k g_k^2 (i n / d_k) (exp(-i t d_k) - 1)
///   c_down = sum_k g_k^2 (-i (n+1) / d_k) (exp(i t d_k) - 1)
inline RateCoefficients rate_coefficients(double t, const BathSpec& spec, double qubit_omega) {
  if (t < 0.0) throw DomainError("rate_coefficients: t must be >= 0");
  const double n = bose_occupation(qubit_omega, spec.temperature);
  RateCoefficients out;
  for (const auto& mode : discretize_spectrum(spec)) {
    const double g2 = mode.coupling * mode.coupling;
    const double d = spec.convention == ResonanceConvention::kResonant ? qubit_omega - mode.frequency
                                                                        : qubit_omega + mode.frequency;
    out.c_down += g2 * (n + 1.0) * phase_integral(d, t);
    out.c_up += g2 * n * phase_integral(-d, t);
  }
  return out;
}

/// Integrands whose time integrals are the rate coefficients, assembled from
/// the correlation functions rather than the closed form. The memory backend
/// integrates these by quadrature.
struct KernelIntegrand {
  Complex down;
  Complex up;
};

inline KernelIntegrand kernel_integrand(double s, const BathSpec& spec, double qubit_omega) {
  const double orientation = spec.convention == ResonanceConvention::kResonant ? -1.0 : 1.0;
  const Complex rot = std::exp(Complex(0.0, qubit_omega * s));
  return {correlation_kernel(1, 2, orientation * s, spec, qubit_omega) * rot,
          correlation_kernel(2, 1, orientation * s, spec, qubit_omega) * std::conj(rot)};
}

struct LindbladRates {
  double gamma_down = 0.0;
  double gamma_up = 0.0;
};

/// Stationary rates: gamma_down = Gamma (n+1), gamma_up = Gamma n.
inline LindbladRates lindblad_rates(const BathSpec& spec, double qubit_omega) {
  spec.validate();
  const double n = bose_occupation(qubit_omega, spec.temperature);
  return {spec.gamma() * (n + 1.0), spec.gamma() * n};
}

}  // namespace qecbath
