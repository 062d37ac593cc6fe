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

// Dense complex linear algebra and quantum-state primitives.
//
// Register convention: the computational basis |q0 q1 ... q_{n-1}> is indexed
// big-endian, so qubit 0 is the most significant bit of a basis label.
// sigma_z |0> = +|0>; |0> is the excited state and |1> the ground state for
// H = (w/2) sigma_z. sigma_plus = |0><1| raises energy, sigma_minus = |1><0|
// mediates decay of |0>.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qecbath/errors.hpp"

namespace qecbath {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Tolerances shared across modules.
namespace tol {
inline constexpr double kHermitian = 1e-10;      // DensityMatrix construction
inline constexpr double kTrace = 1e-10;          // DensityMatrix construction
inline constexpr double kEigenInput = 1e-8;      // herm_eig input check
inline constexpr double kNegativeClamp = 1e-8;   // clamp to zero before roots
inline constexpr double kPositivityAbort = 1e-6; // hard failure
}  // namespace tol

// ---------------------------------------------------------------------------
// Single-qubit operator library.

namespace ops {

inline ComplexMatrix make2(Complex a, Complex b, Complex c, Complex d) {
  ComplexMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline const ComplexMatrix& identity() {
  static const ComplexMatrix m = make2(1.0, 0.0, 0.0, 1.0);
  return m;
}
inline const ComplexMatrix& sigma_x() {
  static const ComplexMatrix m = make2(0.0, 1.0, 1.0, 0.0);
  return m;
}
inline const ComplexMatrix& sigma_y() {
  static const ComplexMatrix m = make2(0.0, -kI, kI, 0.0);
  return m;
}
inline const ComplexMatrix& sigma_z() {
  static const ComplexMatrix m = make2(1.0, 0.0, 0.0, -1.0);
  return m;
}
/// (sigma_x + i sigma_y)/2 = |0><1|
inline const ComplexMatrix& sigma_plus() {
  static const ComplexMatrix m = make2(0.0, 1.0, 0.0, 0.0);
  return m;
}
/// (sigma_plus)^dagger = |1><0|
inline const ComplexMatrix& sigma_minus() {
  static const ComplexMatrix m = make2(0.0, 0.0, 1.0, 0.0);
  return m;
}

}  // namespace ops

// ---------------------------------------------------------------------------
// Small helpers.

inline bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline int log2_exact(std::size_t v) {
  if (!is_power_of_two(v)) {
    throw DomainError("dimension " + std::to_string(v) + " is not a power of two");
  }
  int n = 0;
  while ((std::size_t{1} << n) < v) ++n;
  return n;
}

/// Bit mask of qubit `j` in an `n`-qubit big-endian basis label.
inline std::size_t qubit_mask(int j, int n) { return std::size_t{1} << (n - 1 - j); }

/// max_ij |m_ij - conj(m_ji)|
inline double hermiticity_deviation(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DomainError("max_abs_diff: shape mismatch");
  }
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

// ---------------------------------------------------------------------------
// Tensor products and embedding.

/// Kronecker product; entry ((i1,i2),(j1,j2)) = a(i1,j1) * b(i2,j2).
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j1 = 0; j1 < a.cols(); ++j1) {
    for (Eigen::Index i1 = 0; i1 < a.rows(); ++i1) {
      out.block(i1 * b.rows(), j1 * b.cols(), b.rows(), b.cols()) = a(i1, j1) * b;
    }
  }
  return out;
}

inline ComplexMatrix kron_all(std::span<const ComplexMatrix> factors) {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

/// I^{(x)j} (x) op (x) I^{(x)(n-1-j)}
inline ComplexMatrix embed(const ComplexMatrix& op, int j, int n) {
  if (op.rows() != 2 || op.cols() != 2) throw DomainError("embed: operator must be 2x2");
  if (n < 1 || j < 0 || j >= n) {
    throw DomainError("embed: qubit index " + std::to_string(j) + " out of range for " +
                      std::to_string(n) + " qubits");
  }
  const std::size_t left = std::size_t{1} << j;
  const std::size_t right = std::size_t{1} << (n - 1 - j);
  return kron(kron(ComplexMatrix::Identity(left, left), op), ComplexMatrix::Identity(right, right));
}

/// out = (op on qubit j) * m, without forming the 2^n operator.
inline ComplexMatrix apply_left(const ComplexMatrix& op, int j, int n, const ComplexMatrix& m) {
  const std::size_t mask = qubit_mask(j, n);
  const Eigen::Index dim = m.rows();
  ComplexMatrix out(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < dim; ++r) {
      if (static_cast<std::size_t>(r) & mask) continue;
      const Eigen::Index r1 = r | static_cast<Eigen::Index>(mask);
      const Complex v0 = m(r, c);
      const Complex v1 = m(r1, c);
      out(r, c) = op(0, 0) * v0 + op(0, 1) * v1;
      out(r1, c) = op(1, 0) * v0 + op(1, 1) * v1;
    }
  }
  return out;
}

/// out = m * (op on qubit j).
inline ComplexMatrix apply_right(const ComplexMatrix& m, const ComplexMatrix& op, int j, int n) {
  const std::size_t mask = qubit_mask(j, n);
  const Eigen::Index dim = m.cols();
  ComplexMatrix out(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < dim; ++c) {
    if (static_cast<std::size_t>(c) & mask) continue;
    const Eigen::Index c1 = c | static_cast<Eigen::Index>(mask);
    out.col(c) = m.col(c) * op(0, 0) + m.col(c1) * op(1, 0);
    out.col(c1) = m.col(c) * op(0, 1) + m.col(c1) * op(1, 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Density matrices.

class DensityMatrix {
 public:
  /// Validates squareness, power-of-two dimension, Hermiticity and unit trace.
  /// Positivity is checked separately (validate_positivity) because it needs a
  /// full eigendecomposition.
  explicit DensityMatrix(ComplexMatrix m, std::vector<int> labels = {}) : matrix_(std::move(m)) {
    if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols()) {
      throw DomainError("density matrix must be square and nonempty");
    }
    n_qubits_ = log2_exact(static_cast<std::size_t>(matrix_.rows()));
    if (labels.empty()) {
      labels.resize(n_qubits_);
      std::iota(labels.begin(), labels.end(), 0);
    }
    if (static_cast<int>(labels.size()) != n_qubits_) {
      throw DomainError("qubit label count does not match dimension");
    }
    labels_ = std::move(labels);
    const double herm = hermiticity_deviation(matrix_);
    if (herm >= tol::kHermitian) {
      throw HermiticityError("density matrix not Hermitian (deviation " + std::to_string(herm) + ")");
    }
    const double tr_dev = std::abs(matrix_.trace() - Complex(1.0, 0.0));
    if (tr_dev >= tol::kTrace) {
      throw DomainError("density matrix trace deviates from 1 by " + std::to_string(tr_dev));
    }
  }

  static DensityMatrix from_pure(const ComplexVector& psi) {
    const double norm = psi.norm();
    if (norm == 0.0) throw DomainError("zero state vector");
    const ComplexVector v = psi / norm;
    ComplexMatrix m = v * v.adjoint();
    return DensityMatrix(hermitian_part(m));
  }

  static DensityMatrix basis_state(std::size_t index, int n) {
    const std::size_t dim = std::size_t{1} << n;
    if (index >= dim) throw DomainError("basis index out of range");
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    m(index, index) = 1.0;
    return DensityMatrix(std::move(m));
  }

  static DensityMatrix maximally_mixed(int n) {
    const std::size_t dim = std::size_t{1} << n;
    return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  const ComplexMatrix& matrix() const { return matrix_; }
  int num_qubits() const { return n_qubits_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  const std::vector<int>& qubit_labels() const { return labels_; }
  Complex operator()(Eigen::Index r, Eigen::Index c) const { return matrix_(r, c); }

  double trace_deviation() const { return std::abs(matrix_.trace() - Complex(1.0, 0.0)); }

  /// Smallest eigenvalue.
  double min_eigenvalue() const;

  /// Throws PositivityError if an eigenvalue is below -kNegativeClamp.
  void validate_positivity(double floor = tol::kNegativeClamp) const {
    const double lo = min_eigenvalue();
    if (lo < -floor) {
      throw PositivityError("density matrix has eigenvalue " + std::to_string(lo));
    }
  }

 private:
  ComplexMatrix matrix_;
  int n_qubits_ = 0;
  std::vector<int> labels_;
};

inline DensityMatrix kron(const DensityMatrix& a, const DensityMatrix& b) {
  std::vector<int> labels;
  labels.reserve(a.num_qubits() + b.num_qubits());
  for (int i = 0; i < a.num_qubits() + b.num_qubits(); ++i) labels.push_back(i);
  return DensityMatrix(kron(a.matrix(), b.matrix()), std::move(labels));
}

/// Reduced state on `keep` (positions in the register), in ascending position order.
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<int> keep) {
  const int n = rho.num_qubits();
  if (keep.empty()) throw DomainError("partial_trace: keep set is empty");
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (int q : keep) {
    if (q < 0 || q >= n) throw DomainError("partial_trace: qubit " + std::to_string(q) + " not in register");
  }
  std::vector<int> traced;
  for (int q = 0; q < n; ++q) {
    if (!std::binary_search(keep.begin(), keep.end(), q)) traced.push_back(q);
  }
  const int nk = static_cast<int>(keep.size());
  const int nt = static_cast<int>(traced.size());
  // Scatter a compact index over the chosen qubit positions.
  auto scatter = [n](std::size_t compact, const std::vector<int>& qubits) {
    std::size_t full = 0;
    const int m = static_cast<int>(qubits.size());
    for (int b = 0; b < m; ++b) {
      if (compact & (std::size_t{1} << (m - 1 - b))) full |= qubit_mask(qubits[b], n);
    }
    return full;
  };
  const std::size_t dk = std::size_t{1} << nk;
  const std::size_t dt = std::size_t{1} << nt;
  std::vector<std::size_t> keep_idx(dk), trace_idx(dt);
  for (std::size_t i = 0; i < dk; ++i) keep_idx[i] = scatter(i, keep);
  for (std::size_t i = 0; i < dt; ++i) trace_idx[i] = scatter(i, traced);

  ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
  const auto& m = rho.matrix();
  for (std::size_t b = 0; b < dk; ++b) {
    for (std::size_t a = 0; a < dk; ++a) {
      Complex acc = 0.0;
      for (std::size_t t = 0; t < dt; ++t) {
        acc += m(keep_idx[a] | trace_idx[t], keep_idx[b] | trace_idx[t]);
      }
      out(a, b) = acc;
    }
  }
  std::vector<int> labels;
  for (int q : keep) labels.push_back(rho.qubit_labels()[q]);
  // Rounding can leave a ~1e-16 anti-Hermitian residue; the reduced state is Hermitian.
  return DensityMatrix(hermitian_part(out), std::move(labels));
}

// ---------------------------------------------------------------------------
// Spectral tools.

struct EigenDecomposition {
  RealVector eigenvalues;     // ascending
  ComplexMatrix eigenvectors; // columns, unitary
};

inline EigenDecomposition herm_eig(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DomainError("herm_eig: matrix not square");
  const double herm = hermiticity_deviation(m);
  if (herm >= tol::kEigenInput) {
    throw HermiticityError("herm_eig: input not Hermitian (deviation " + std::to_string(herm) + ")");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m));
  if (solver.info() != Eigen::Success) throw Error("herm_eig: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(matrix_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

/// Square root of a Hermitian PSD matrix. Small negative eigenvalues from
/// rounding are set to zero; anything below -abort raises PositivityError.
inline ComplexMatrix psd_sqrt(const ComplexMatrix& m, double abort = tol::kPositivityAbort) {
  const auto eig = herm_eig(m);
  RealVector roots(eig.eigenvalues.size());
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    const double lambda = eig.eigenvalues(i);
    if (lambda < -abort) {
      throw PositivityError("psd_sqrt: eigenvalue " + std::to_string(lambda) + " below positivity floor");
    }
    roots(i) = lambda > 0.0 ? std::sqrt(lambda) : 0.0;
  }
  ComplexMatrix out = eig.eigenvectors * roots.asDiagonal() * eig.eigenvectors.adjoint();
  return hermitian_part(out);
}

inline ComplexMatrix psd_sqrt(const DensityMatrix& rho) { return psd_sqrt(rho.matrix()); }

/// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2.
///
/// Evaluated on the support of rho0: with rho0 = V diag(p) V^dagger the inner
/// matrix is diag(sqrt p) V^dagger rho_t V diag(sqrt p) restricted to p > 0.
/// Eigenvalues at rounding level are dropped before the square roots; taking
/// sqrt of a 1e-16 residue would otherwise add 1e-8 errors for pure inputs.
inline double fidelity(const DensityMatrix& rho0, const DensityMatrix& rho_t) {
  if (rho0.dim() != rho_t.dim()) {
    throw DomainError("fidelity: dimension mismatch (" + std::to_string(rho0.dim()) + " vs " +
                      std::to_string(rho_t.dim()) + ")");
  }
  const double floor = 64.0 * std::numeric_limits<double>::epsilon();
  const auto eig = herm_eig(rho0.matrix());
  if (eig.eigenvalues.minCoeff() < -tol::kPositivityAbort) {
    throw PositivityError("fidelity: reference state has a negative eigenvalue");
  }
  const double pmax = eig.eigenvalues.maxCoeff();
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
    if (eig.eigenvalues(i) > floor * pmax) support.push_back(i);
  }
  const Eigen::Index r = static_cast<Eigen::Index>(support.size());
  ComplexMatrix v(rho0.dim(), r);
  for (Eigen::Index k = 0; k < r; ++k) v.col(k) = eig.eigenvectors.col(support[k]) * std::sqrt(eig.eigenvalues(support[k]));
  const ComplexMatrix inner = hermitian_part(v.adjoint() * rho_t.matrix() * v);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(inner, Eigen::EigenvaluesOnly);
  const double lmax = solver.eigenvalues().maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double lambda = solver.eigenvalues()(i);
    if (lambda > floor * lmax) acc += std::sqrt(lambda);
  }
  return acc * acc;
}

}  // namespace qecbath
