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

#include <string>
#include <vector>

#include "qecbath/errors.hpp"
#include "qecbath/quantum_core.hpp"

namespace qecbath {

/// Signed Pauli string. Character i acts on qubit i (qubit 0 leftmost).
class PauliString {
 public:
  PauliString() = default;

  explicit PauliString(std::string ops, int sign = 1) : ops_(std::move(ops)), sign_(sign) {
    if (ops_.empty()) throw DomainError("empty Pauli string");
    for (char c : ops_) {
      if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') {
        throw DomainError("invalid Pauli character '" + std::string(1, c) + "'");
      }
    }
    if (sign_ != 1 && sign_ != -1) throw DomainError("Pauli sign must be +1 or -1");
  }

  /// Parses "XIZ", "+XIZ" or "-XIZ".
  static PauliString parse(const std::string& s) {
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) return PauliString(s.substr(1), s[0] == '-' ? -1 : 1);
    return PauliString(s);
  }

  /// Weight-1 operator `op` on qubit j of n.
  static PauliString single(char op, int j, int n) {
    std::string s(n, 'I');
    s.at(j) = op;
    return PauliString(s);
  }

  const std::string& ops() const { return ops_; }
  int sign() const { return sign_; }
  int size() const { return static_cast<int>(ops_.size()); }
  std::string str() const { return (sign_ < 0 ? "-" : "") + ops_; }

  int weight() const {
    int w = 0;
    for (char c : ops_) w += c != 'I';
    return w;
  }

  bool has_x(int j) const { return ops_[j] == 'X' || ops_[j] == 'Y'; }
  bool has_z(int j) const { return ops_[j] == 'Z' || ops_[j] == 'Y'; }

  bool commutes_with(const PauliString& other) const {
    if (other.size() != size()) throw DomainError("Pauli strings of different length");
    int anti = 0;
    for (int j = 0; j < size(); ++j) anti += (has_x(j) && other.has_z(j)) != (has_z(j) && other.has_x(j));
    return anti % 2 == 0;
  }

  ComplexMatrix matrix() const {
    ComplexMatrix m = ComplexMatrix::Identity(1, 1);
    for (char c : ops_) {
      switch (c) {
        case 'X': m = kron(m, ops::sigma_x()); break;
        case 'Y': m = kron(m, ops::sigma_y()); break;
        case 'Z': m = kron(m, ops::sigma_z()); break;
        default: m = kron(m, ops::identity()); break;
      }
    }
    return static_cast<double>(sign_) * m;
  }

  /// P|psi> without forming the matrix.
  ComplexVector apply(const ComplexVector& psi) const {
    const int n = size();
    if (psi.size() != (Eigen::Index{1} << n)) throw DomainError("Pauli apply: dimension mismatch");
    std::size_t xmask = 0, zmask = 0;
    int ny = 0;
    for (int j = 0; j < n; ++j) {
      if (has_x(j)) xmask |= qubit_mask(j, n);
      if (has_z(j)) zmask |= qubit_mask(j, n);
      ny += ops_[j] == 'Y';
    }
    // Y = i X Z, so P = sign * i^ny * X^x Z^z.
    static const Complex kPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    const Complex phase = static_cast<double>(sign_) * kPow[ny % 4];
    ComplexVector out(psi.size());
    for (Eigen::Index b = 0; b < psi.size(); ++b) {
      const bool odd = __builtin_popcountll(static_cast<unsigned long long>(b) & zmask) & 1;
      out(static_cast<Eigen::Index>(b ^ xmask)) = phase * (odd ? -1.0 : 1.0) * psi(b);
    }
    return out;
  }

  /// Product of two unsigned strings up to a global phase (qubitwise).
  PauliString times_unsigned(const PauliString& other) const {
    if (other.size() != size()) throw DomainError("Pauli strings of different length");
    std::string s(size(), 'I');
    for (int j = 0; j < size(); ++j) {
      const bool x = has_x(j) != other.has_x(j);
      const bool z = has_z(j) != other.has_z(j);
      s[j] = x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
    }
    return PauliString(s);
  }

  bool operator==(const PauliString& o) const { return ops_ == o.ops_ && sign_ == o.sign_; }

 private:
  std::string ops_ = "I";
  int sign_ = 1;
};

/// All weight-1 Paulis on n qubits ordered by qubit index, then X < Y < Z.
inline std::vector<PauliString> weight_one_paulis(int n) {
  std::vector<PauliString> out;
  for (int j = 0; j < n; ++j) {
    for (char c : {'X', 'Y', 'Z'}) out.push_back(PauliString::single(c, j, n));
  }
  return out;
}

}  // namespace qecbath
