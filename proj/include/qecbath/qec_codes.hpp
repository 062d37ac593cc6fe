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

// Stabilizer codes as encode unitary + syndrome-pattern recovery.
//
// Decoded frame: after U^dagger the ancilla qubits hold the syndrome pattern
// and the main qubits hold the logical content up to a known logical Pauli.
// Every recovery Kraus operator there has the form |0..0><s| (x) L, so the
// channel is applied by moving matrix blocks rather than multiplying 2^n
// matrices.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "qecbath/errors.hpp"
#include "qecbath/pauli.hpp"
#include "qecbath/quantum_core.hpp"

namespace qecbath {

enum class RecoveryMode { kMixing, kFirst, kStochastic };

inline std::string to_string(RecoveryMode m) {
  switch (m) {
    case RecoveryMode::kMixing: return "mixing";
    case RecoveryMode::kFirst: return "first";
    case RecoveryMode::kStochastic: return "stochastic";
  }
  return "?";
}

inline RecoveryMode recovery_mode_from_string(const std::string& s) {
  if (s == "mixing") return RecoveryMode::kMixing;
  if (s == "first") return RecoveryMode::kFirst;
  if (s == "stochastic") return RecoveryMode::kStochastic;
  throw DomainError("unknown recovery mode '" + s + "' (expected mixing|first|stochastic)");
}

struct SyndromeEntry {
  std::string syndrome;  // one character per generator, first generator leftmost
  std::vector<PauliString> corrections;
  std::vector<double> weights;
};

using SyndromeTable = std::vector<SyndromeEntry>;

/// Recovery branch for one ancilla pattern: candidate logical corrections and
/// their mixing weights.
struct PatternRecovery {
  std::size_t pattern = 0;
  std::vector<double> weights;
  std::vector<ComplexMatrix> logical;
  std::vector<PauliString> corrections;  // physical Pauli behind each candidate
};

struct QecCode {
  std::string name;
  int n_physical = 0;
  int k_logical = 0;
  std::vector<int> main_positions;
  std::vector<int> ancilla_positions;
  ComplexMatrix encode_unitary;
  // Sparse copies of the encode unitary and its adjoint, filled by the builders.
  Eigen::SparseMatrix<Complex> encode_sparse;
  Eigen::SparseMatrix<Complex> decode_sparse;
  ComplexMatrix codewords;  // 2^n x 2^k isometry, column b = |b_L>
  std::vector<PauliString> stabilizer_generators;
  SyndromeTable reference_table;  // rows as published; empty for the five-qubit code
  std::vector<PatternRecovery> recovery;

  Eigen::Index dim() const { return Eigen::Index{1} << n_physical; }

  /// Block-local basis index with `pattern` on the ancillas and `logical` on
  /// the main qubits (first listed position = most significant bit).
  std::size_t decoded_index(std::size_t pattern, std::size_t logical) const {
    std::size_t idx = 0;
    const int na = static_cast<int>(ancilla_positions.size());
    const int nm = static_cast<int>(main_positions.size());
    for (int i = 0; i < na; ++i) {
      if (pattern & (std::size_t{1} << (na - 1 - i))) idx |= qubit_mask(ancilla_positions[i], n_physical);
    }
    for (int i = 0; i < nm; ++i) {
      if (logical & (std::size_t{1} << (nm - 1 - i))) idx |= qubit_mask(main_positions[i], n_physical);
    }
    return idx;
  }

  /// Dense Kraus operators in the decoded frame (for completeness checks).
  std::vector<ComplexMatrix> recovery_kraus(RecoveryMode mode = RecoveryMode::kMixing) const {
    std::vector<ComplexMatrix> out;
    const std::size_t dk = std::size_t{1} << k_logical;
    for (const auto& pr : recovery) {
      const std::size_t nc = mode == RecoveryMode::kMixing ? pr.logical.size() : 1;
      for (std::size_t c = 0; c < nc; ++c) {
        const double w = mode == RecoveryMode::kMixing ? pr.weights[c] : 1.0;
        ComplexMatrix k = ComplexMatrix::Zero(dim(), dim());
        for (std::size_t a = 0; a < dk; ++a) {
          for (std::size_t b = 0; b < dk; ++b) {
            k(decoded_index(0, a), decoded_index(pr.pattern, b)) = std::sqrt(w) * pr.logical[c](a, b);
          }
        }
        out.push_back(std::move(k));
      }
    }
    return out;
  }
};

namespace detail {

inline std::size_t bits_to_index(const std::string& bits) {
  std::size_t v = 0;
  for (char c : bits) v = (v << 1) | static_cast<std::size_t>(c == '1');
  return v;
}

inline std::string index_to_bits(std::size_t v, int width) {
  std::string s(width, '0');
  for (int i = 0; i < width; ++i) {
    if (v & (std::size_t{1} << (width - 1 - i))) s[i] = '1';
  }
  return s;
}

/// Syndrome from commutation with the generators (anticommuting = '1').
inline std::string symplectic_syndrome(const std::vector<PauliString>& gens, const PauliString& e) {
  std::string s;
  for (const auto& g : gens) s += g.commutes_with(e) ? '0' : '1';
  return s;
}

/// L_ab = <a_L| P Q |b_L> for Paulis whose product preserves the code space.
inline ComplexMatrix logical_action(const ComplexMatrix& codewords, const PauliString& p, const PauliString& q) {
  const Eigen::Index k = codewords.cols();
  ComplexMatrix l(k, k);
  for (Eigen::Index b = 0; b < k; ++b) {
    const ComplexVector v = p.apply(q.apply(codewords.col(b)));
    for (Eigen::Index a = 0; a < k; ++a) l(a, b) = codewords.col(a).dot(v);
  }
  if (max_abs_diff(l.adjoint() * l, ComplexMatrix::Identity(k, k)) > 1e-10) {
    throw Error("correction " + p.str() + " does not return to the code space");
  }
  return l;
}

inline bool is_z_type(const PauliString& g) {
  return std::all_of(g.ops().begin(), g.ops().end(), [](char c) { return c == 'I' || c == 'Z'; });
}

inline bool is_x_type(const PauliString& g) {
  return std::all_of(g.ops().begin(), g.ops().end(), [](char c) { return c == 'I' || c == 'X'; });
}

/// Lowest-weight Pauli built from `op` only whose syndrome restricted to
/// `positions` equals `target` (lexicographic within a weight).
inline PauliString min_weight_pauli(char op, int n, const std::vector<PauliString>& gens,
                                    const std::vector<int>& positions, const std::string& target) {
  for (int w = 1; w <= n; ++w) {
    std::vector<int> pick(w);
    for (int i = 0; i < w; ++i) pick[i] = i;
    while (true) {
      std::string s(n, 'I');
      for (int q : pick) s[q] = op;
      const PauliString p(s);
      const std::string full = symplectic_syndrome(gens, p);
      std::string part;
      for (int pos : positions) part += full[pos];
      if (part == target) return p;
      int i = w - 1;
      while (i >= 0 && pick[i] == n - w + i) --i;
      if (i < 0) break;
      ++pick[i];
      for (int j = i + 1; j < w; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  throw Error("no Pauli reaches syndrome part " + target);
}

/// Builds encode unitary and recovery for a CSS code from its published table.
/// X and Z halves of the syndrome are decoded independently; half-patterns
/// missing from the table fall back to a minimum-weight Pauli.
inline void finish_css_code(QecCode& code) {
  const int n = code.n_physical;
  const auto& gens = code.stabilizer_generators;
  const int ng = static_cast<int>(gens.size());
  std::vector<int> xgen, zgen;  // X-type gens detect Z errors and vice versa
  for (int i = 0; i < ng; ++i) {
    if (is_x_type(gens[i])) xgen.push_back(i);
    else if (is_z_type(gens[i])) zgen.push_back(i);
    else throw Error("generator " + gens[i].str() + " is not CSS");
  }
  using Half = std::map<std::string, std::pair<std::vector<PauliString>, std::vector<double>>>;
  Half x_half, z_half;  // keyed by the syndrome part each error type fires
  auto key = [](const std::string& syn, const std::vector<int>& pos) {
    std::string k;
    for (int p : pos) k += syn[p];
    return k;
  };
  for (const auto& row : code.reference_table) {
    if (row.corrections.size() == 1 && row.corrections[0].weight() == 0) continue;
    const bool x_row = std::all_of(row.corrections.begin(), row.corrections.end(), is_x_type);
    const bool z_row = std::all_of(row.corrections.begin(), row.corrections.end(), is_z_type);
    if (x_row) x_half[key(row.syndrome, zgen)] = {row.corrections, row.weights};
    else if (z_row) z_half[key(row.syndrome, xgen)] = {row.corrections, row.weights};
    else throw Error("table row " + row.syndrome + " mixes X and Z corrections");
  }
  auto fill = [&](Half& half, char op, const std::vector<int>& pos) {
    const int w = static_cast<int>(pos.size());
    for (std::size_t v = 0; v < (std::size_t{1} << w); ++v) {
      const std::string k = index_to_bits(v, w);
      if (half.count(k)) continue;
      if (v == 0) {
        half[k] = {{PauliString(std::string(n, 'I'))}, {1.0}};
      } else {
        half[k] = {{min_weight_pauli(op, n, gens, pos, k)}, {1.0}};
      }
    }
  };
  fill(x_half, 'X', zgen);
  fill(z_half, 'Z', xgen);

  const std::size_t n_patterns = std::size_t{1} << ng;
  if (static_cast<int>(code.ancilla_positions.size()) != ng) {
    throw Error("one ancilla per generator required");
  }
  const Eigen::Index dk = Eigen::Index{1} << code.k_logical;
  code.encode_unitary = ComplexMatrix::Zero(code.dim(), code.dim());
  code.recovery.clear();
  for (std::size_t s = 0; s < n_patterns; ++s) {
    const std::string syn = index_to_bits(s, ng);
    const auto& xs = x_half.at(key(syn, zgen));
    const auto& zs = z_half.at(key(syn, xgen));
    const PauliString rep = xs.first[0].times_unsigned(zs.first[0]);
    if (symplectic_syndrome(gens, rep) != syn) {
      throw Error("representative " + rep.str() + " does not produce syndrome " + syn);
    }
    for (Eigen::Index b = 0; b < dk; ++b) {
      code.encode_unitary.col(static_cast<Eigen::Index>(code.decoded_index(s, b))) =
          rep.apply(code.codewords.col(b));
    }
    PatternRecovery pr;
    pr.pattern = s;
    for (std::size_t i = 0; i < xs.first.size(); ++i) {
      for (std::size_t j = 0; j < zs.first.size(); ++j) {
        const PauliString c = xs.first[i].times_unsigned(zs.first[j]);
        pr.corrections.push_back(c);
        pr.weights.push_back(xs.second[i] * zs.second[j]);
        // c rep lies in the normalizer; its matrix on the codewords is the logical residue.
        pr.logical.push_back(logical_action(code.codewords, c, rep));
      }
    }
    code.recovery.push_back(std::move(pr));
  }
}

inline ComplexMatrix codewords_from_kets(int n, const std::vector<std::vector<std::pair<std::size_t, double>>>& kets) {
  ComplexMatrix cw = ComplexMatrix::Zero(Eigen::Index{1} << n, static_cast<Eigen::Index>(kets.size()));
  for (std::size_t b = 0; b < kets.size(); ++b) {
    for (const auto& [idx, amp] : kets[b]) cw(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(b)) = amp;
  }
  return cw;
}

inline void check_code(QecCode& code) {
  code.encode_sparse = code.encode_unitary.sparseView(1.0, 1e-14);
  code.decode_sparse = code.encode_sparse.adjoint();
  const Eigen::Index d = code.dim();
  if (max_abs_diff(code.encode_unitary.adjoint() * code.encode_unitary, ComplexMatrix::Identity(d, d)) > 1e-10) {
    throw Error(code.name + ": encode unitary is not unitary");
  }
  for (const auto& g : code.stabilizer_generators) {
    for (Eigen::Index b = 0; b < code.codewords.cols(); ++b) {
      const ComplexVector v = g.apply(code.codewords.col(b));
      if ((v - code.codewords.col(b)).cwiseAbs().maxCoeff() > 1e-10) {
        throw Error(code.name + ": generator " + g.str() + " does not fix codeword " + std::to_string(b));
      }
    }
  }
}

}  // namespace detail

inline QecCode build_steane() {
  QecCode code;
  code.name = "steane";
  code.n_physical = 7;
  code.k_logical = 1;
  code.main_positions = {0};
  code.ancilla_positions = {1, 2, 3, 4, 5, 6};
  const double a = 1.0 / (2.0 * std::sqrt(2.0));
  const char* zero[] = {"0000000", "1010101", "0110011", "1100110", "0001111", "1011010", "0111100", "1101001"};
  const char* one[] = {"1111111", "0101010", "1001100", "0011001", "1110000", "0100101", "1000011", "0010110"};
  std::vector<std::vector<std::pair<std::size_t, double>>> kets(2);
  for (const char* s : zero) kets[0].push_back({detail::bits_to_index(s), a});
  for (const char* s : one) kets[1].push_back({detail::bits_to_index(s), a});
  code.codewords = detail::codewords_from_kets(7, kets);
  for (const char* g : {"IIIXXXX", "IXXIIXX", "XIXIXIX", "IIIZZZZ", "IZZIIZZ", "ZIZIZIZ"}) {
    code.stabilizer_generators.push_back(PauliString(g));
  }
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"000000", "IIIIIII"}, {"000001", "XIIIIII"}, {"000010", "IXIIIII"}, {"000011", "IIXIIII"},
      {"000100", "IIIXIII"}, {"000101", "IIIIXII"}, {"000110", "IIIIIXI"}, {"000111", "IIIIIIX"},
      {"001000", "ZIIIIII"}, {"010000", "IZIIIII"}, {"011000", "IIZIIII"}, {"100000", "IIIZIII"},
      {"101000", "IIIIZII"}, {"110000", "IIIIIZI"}, {"111000", "IIIIIIZ"}};
  for (const auto& [syn, corr] : rows) code.reference_table.push_back({syn, {PauliString(corr)}, {1.0}});
  detail::finish_css_code(code);
  detail::check_code(code);
  return code;
}

inline QecCode build_toric_822() {
  QecCode code;
  code.name = "toric_822";
  code.n_physical = 8;
  code.k_logical = 2;
  code.main_positions = {0, 1};
  code.ancilla_positions = {2, 3, 4, 5, 6, 7};
  const double a = 1.0 / (2.0 * std::sqrt(2.0));
  const std::vector<std::vector<std::size_t>> ints = {{0, 29, 46, 51, 204, 209, 226, 255},
                                                      {68, 89, 106, 119, 136, 149, 166, 187},
                                                      {3, 30, 45, 48, 207, 210, 225, 252},
                                                      {71, 90, 105, 116, 139, 150, 165, 184}};
  std::vector<std::vector<std::pair<std::size_t, double>>> kets(4);
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t i : ints[b]) kets[b].push_back({i, a});
  }
  code.codewords = detail::codewords_from_kets(8, kets);
  for (const char* g : {"XXXIIIXI", "XXIXIIIX", "IIXIXXXI", "ZIZZZIII", "IZZZIZII", "ZIIIZIZZ"}) {
    code.stabilizer_generators.push_back(PauliString(g));
  }
  code.reference_table.push_back({"000000", {PauliString("IIIIIIII")}, {1.0}});
  const std::vector<std::array<std::string, 3>> rows = {
      {"000001", "IIIIIIXI", "IIIIIIIX"}, {"000010", "IXIIIIII", "IIIIIXII"},
      {"000101", "XIIIIIII", "IIIIXIII"}, {"000110", "IIXIIIII", "IIIXIIII"},
      {"001000", "IIIIZIII", "IIIIIZII"}, {"010000", "IIIZIIII", "IIIIIIIZ"},
      {"101000", "IIZIIIII", "IIIIIIZI"}, {"110000", "ZIIIIIII", "IZIIIIII"}};
  for (const auto& r : rows) {
    code.reference_table.push_back({r[0], {PauliString(r[1]), PauliString(r[2])}, {0.5, 0.5}});
  }
  detail::finish_css_code(code);
  detail::check_code(code);
  return code;
}

/// Signed stabilizer group of a code, by brute force over all 4^n strings.
inline std::vector<PauliString> stabilizer_group(const ComplexMatrix& codewords, int n) {
  std::vector<PauliString> out;
  const char letters[4] = {'I', 'X', 'Y', 'Z'};
  const std::size_t total = std::size_t{1} << (2 * n);
  for (std::size_t code = 0; code < total; ++code) {
    std::string s(n, 'I');
    for (int j = 0; j < n; ++j) s[j] = letters[(code >> (2 * (n - 1 - j))) & 3];
    const PauliString p(s);
    int sign = 0;
    bool ok = true;
    for (Eigen::Index b = 0; b < codewords.cols() && ok; ++b) {
      const ComplexVector v = p.apply(codewords.col(b));
      for (int sg : {1, -1}) {
        if ((v - static_cast<double>(sg) * codewords.col(b)).cwiseAbs().maxCoeff() < 1e-10) {
          if (sign == 0) sign = sg;
          else if (sign != sg) ok = false;
        }
      }
      if (sign == 0) ok = false;
    }
    if (ok && sign != 0) out.push_back(PauliString(s, sign));
  }
  return out;
}

/// Greedy independent subset (GF(2) rank over the symplectic vectors).
inline std::vector<PauliString> independent_generators(const std::vector<PauliString>& group) {
  std::vector<std::vector<int>> basis;  // reduced rows
  std::vector<int> pivots;
  std::vector<PauliString> out;
  for (const auto& p : group) {
    if (p.weight() == 0) continue;
    std::vector<int> v;
    for (int j = 0; j < p.size(); ++j) v.push_back(p.has_x(j));
    for (int j = 0; j < p.size(); ++j) v.push_back(p.has_z(j));
    for (std::size_t r = 0; r < basis.size(); ++r) {
      if (v[pivots[r]]) {
        for (std::size_t c = 0; c < v.size(); ++c) v[c] ^= basis[r][c];
      }
    }
    const auto it = std::find(v.begin(), v.end(), 1);
    if (it == v.end()) continue;
    pivots.push_back(static_cast<int>(it - v.begin()));
    basis.push_back(v);
    out.push_back(p);
  }
  return out;
}

inline QecCode build_five_qubit() {
  QecCode code;
  code.name = "five_qubit";
  code.n_physical = 5;
  code.k_logical = 1;
  code.main_positions = {2};
  code.ancilla_positions = {0, 1, 3, 4};
  const double a = 1.0 / (2.0 * std::sqrt(2.0));
  const std::vector<std::pair<const char*, double>> zero = {
      {"00000", -a}, {"00110", a}, {"01001", a}, {"01111", a},
      {"10011", -a}, {"10101", a}, {"11010", a}, {"11100", a}};
  const std::vector<std::pair<const char*, double>> one = {
      {"11111", -a}, {"11001", a}, {"10110", a}, {"10000", a},
      {"01100", a}, {"01010", -a}, {"00101", -a}, {"00011", -a}};
  std::vector<std::vector<std::pair<std::size_t, double>>> kets(2);
  for (const auto& [s, amp] : zero) kets[0].push_back({detail::bits_to_index(s), amp});
  for (const auto& [s, amp] : one) kets[1].push_back({detail::bits_to_index(s), amp});
  code.codewords = detail::codewords_from_kets(5, kets);
  code.stabilizer_generators = independent_generators(stabilizer_group(code.codewords, 5));
  if (code.stabilizer_generators.size() != 4) throw Error("five-qubit code: expected 4 generators");

  // Published recovery set: R_k = |00><s1 s2| (x) C_k (x) |00><s4 s5| with
  // k = 4 (s1 s2) + (s4 s5). 'W' stands for sigma_x sigma_z.
  const char kC[16] = {'I', 'Z', 'I', 'I', 'I', 'Z', 'X', 'X', 'I', 'X', 'Z', 'X', 'Z', 'W', 'X', 'Z'};
  auto logical = [](char c) -> ComplexMatrix {
    switch (c) {
      case 'X': return ops::sigma_x();
      case 'Z': return ops::sigma_z();
      case 'W': return ops::sigma_x() * ops::sigma_z();
      default: return ops::identity();
    }
  };

  // Pattern k is assigned to the error whose generator syndrome reads k.
  std::vector<PauliString> errors{PauliString(std::string(5, 'I'))};
  for (const auto& e : weight_one_paulis(5)) errors.push_back(e);
  std::vector<int> owner(16, -1);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const std::size_t s = detail::bits_to_index(detail::symplectic_syndrome(code.stabilizer_generators, errors[i]));
    if (owner[s] >= 0) throw Error("five-qubit code: syndromes are not distinct");
    owner[s] = static_cast<int>(i);
  }
  code.encode_unitary = ComplexMatrix::Zero(32, 32);
  for (std::size_t k = 0; k < 16; ++k) {
    const PauliString& e = errors[owner[k]];
    const ComplexMatrix c = logical(kC[k]);
    // U|k, b> = E_k (C_k |b>)_L, so that R_k undoes E_k.
    for (Eigen::Index b = 0; b < 2; ++b) {
      const ComplexVector logical_vec = code.codewords * c.col(b);
      code.encode_unitary.col(static_cast<Eigen::Index>(code.decoded_index(k, b))) = e.apply(logical_vec);
    }
    PatternRecovery pr;
    pr.pattern = k;
    pr.weights = {1.0};
    pr.logical = {c};
    pr.corrections = {e};
    code.recovery.push_back(std::move(pr));
  }
  detail::check_code(code);
  return code;
}

inline QecCode build_code(const std::string& name) {
  if (name == "five_qubit") return build_five_qubit();
  if (name == "steane") return build_steane();
  if (name == "toric_822") return build_toric_822();
  throw DomainError("unknown code '" + name + "' (expected five_qubit|steane|toric_822)");
}

/// Groups {I} and all weight-1 errors by the syndrome measured with exact
/// generator projectors on every encoded basis state.
inline SyndromeTable derive_syndrome_table(const QecCode& code) {
  if (code.stabilizer_generators.empty()) throw DomainError("derive_syndrome_table: code has no generators");
  const int n = code.n_physical;
  std::vector<ComplexMatrix> gmats;
  for (const auto& g : code.stabilizer_generators) gmats.push_back(g.matrix());
  std::vector<PauliString> errors{PauliString(std::string(n, 'I'))};
  for (const auto& e : weight_one_paulis(n)) errors.push_back(e);
  SyndromeTable table;
  for (const auto& e : errors) {
    std::string syn;
    for (std::size_t gi = 0; gi < gmats.size(); ++gi) {
      char bit = '?';
      for (Eigen::Index b = 0; b < code.codewords.cols(); ++b) {
        const ComplexVector v = e.apply(code.codewords.col(b));
        // Projector onto the -1 eigenspace: (1 - G)/2.
        const double p_minus = 0.5 * (v.squaredNorm() - v.dot(gmats[gi] * v).real());
        char here;
        if (std::abs(p_minus) < 1e-9) here = '0';
        else if (std::abs(p_minus - 1.0) < 1e-9) here = '1';
        else throw Error("error " + e.str() + " does not have a definite syndrome");
        if (bit != '?' && bit != here) {
          throw Error("error " + e.str() + " gives inconsistent syndromes across codewords");
        }
        bit = here;
      }
      syn += bit;
    }
    auto it = std::find_if(table.begin(), table.end(), [&](const SyndromeEntry& r) { return r.syndrome == syn; });
    if (it == table.end()) {
      table.push_back({syn, {e}, {}});
    } else {
      it->corrections.push_back(e);
    }
  }
  for (auto& row : table) row.weights.assign(row.corrections.size(), 1.0 / row.corrections.size());
  return table;
}

// ---------------------------------------------------------------------------
// Register operations. A register holds one or more consecutive code blocks.

namespace detail {

inline std::vector<Eigen::Index> block_rows(int first, int m, int n, std::size_t hi, std::size_t lo_val) {
  const int lo = n - first - m;
  std::vector<Eigen::Index> idx(std::size_t{1} << m);
  for (std::size_t u = 0; u < idx.size(); ++u) {
    idx[u] = static_cast<Eigen::Index>((hi << (m + lo)) | (u << lo) | lo_val);
  }
  return idx;
}

/// M <- (I (x) op (x) I) M with op on qubits [first, first+m).
template <typename Op>
void block_left(ComplexMatrix& mat, const Op& op, int first, int m, int n) {
  if (m == n) {
    mat = op * mat;
    return;
  }
  const int lo = n - first - m;
  for (std::size_t hi = 0; hi < (std::size_t{1} << first); ++hi) {
    for (std::size_t l = 0; l < (std::size_t{1} << lo); ++l) {
      const auto idx = block_rows(first, m, n, hi, l);
      const ComplexMatrix g = mat(idx, Eigen::all);
      mat(idx, Eigen::all) = (op * g).eval();
    }
  }
}

/// M <- M (I (x) op (x) I).
template <typename Op>
void block_right(ComplexMatrix& mat, const Op& op, int first, int m, int n) {
  if (m == n) {
    mat = mat * op;
    return;
  }
  const int lo = n - first - m;
  for (std::size_t hi = 0; hi < (std::size_t{1} << first); ++hi) {
    for (std::size_t l = 0; l < (std::size_t{1} << lo); ++l) {
      const auto idx = block_rows(first, m, n, hi, l);
      const ComplexMatrix g = mat(Eigen::all, idx);
      mat(Eigen::all, idx) = (g * op).eval();
    }
  }
}

inline int register_blocks(const QecCode& code, int n_qubits) {
  if (n_qubits % code.n_physical != 0) {
    throw DomainError(code.name + ": register of " + std::to_string(n_qubits) +
                      " qubits is not a whole number of blocks");
  }
  return n_qubits / code.n_physical;
}

/// Kraus branches in the decoded frame on block `b`.
inline ComplexMatrix apply_pattern_recovery(const ComplexMatrix& mat, const QecCode& code, int b, int n,
                                            RecoveryMode mode, std::mt19937_64* rng) {
  const int nb = code.n_physical;
  const int first = b * nb;
  const int lo = n - first - nb;
  const std::size_t rest = std::size_t{1} << (n - nb);
  const std::size_t dk = std::size_t{1} << code.k_logical;
  auto global = [&](std::size_t r, std::size_t u) {
    const std::size_t hi = r >> lo;
    const std::size_t l = r & ((std::size_t{1} << lo) - 1);
    return static_cast<Eigen::Index>((hi << (nb + lo)) | (u << lo) | l);
  };
  std::vector<Eigen::Index> out_idx;
  for (std::size_t r = 0; r < rest; ++r) {
    for (std::size_t a = 0; a < dk; ++a) out_idx.push_back(global(r, code.decoded_index(0, a)));
  }
  ComplexMatrix out = ComplexMatrix::Zero(mat.rows(), mat.cols());
  ComplexMatrix acc = ComplexMatrix::Zero(out_idx.size(), out_idx.size());
  const ComplexMatrix id_rest = ComplexMatrix::Identity(rest, rest);
  for (const auto& pr : code.recovery) {
    std::vector<Eigen::Index> in_idx;
    for (std::size_t r = 0; r < rest; ++r) {
      for (std::size_t a = 0; a < dk; ++a) in_idx.push_back(global(r, code.decoded_index(pr.pattern, a)));
    }
    const ComplexMatrix sub = mat(in_idx, in_idx);
    auto add = [&](const ComplexMatrix& l, double w) {
      const ComplexMatrix big = kron(id_rest, l);
      acc += w * (big * sub * big.adjoint());
    };
    switch (mode) {
      case RecoveryMode::kMixing:
        for (std::size_t c = 0; c < pr.logical.size(); ++c) add(pr.logical[c], pr.weights[c]);
        break;
      case RecoveryMode::kFirst:
        add(pr.logical[0], 1.0);
        break;
      case RecoveryMode::kStochastic: {
        if (rng == nullptr) throw DomainError("stochastic recovery needs a random generator");
        std::discrete_distribution<std::size_t> pick(pr.weights.begin(), pr.weights.end());
        add(pr.logical[pick(*rng)], 1.0);
        break;
      }
    }
  }
  out(out_idx, out_idx) = acc;
  return out;
}

}  // namespace detail

struct RecoveryOptions {
  RecoveryMode mode = RecoveryMode::kMixing;
  std::mt19937_64* rng = nullptr;  // stochastic mode only
};

/// Encodes each logical qubit group of size k into its own block.
inline DensityMatrix encode(const QecCode& code, const DensityMatrix& rho_logical) {
  const int nl = rho_logical.num_qubits();
  if (nl % code.k_logical != 0) {
    throw DomainError(code.name + ": logical register of " + std::to_string(nl) +
                      " qubits does not fill whole blocks");
  }
  const int blocks = nl / code.k_logical;
  if (blocks * code.n_physical > 12) throw DomainError(code.name + ": encoded register exceeds 12 qubits");
  ComplexMatrix v = ComplexMatrix::Identity(1, 1);
  for (int b = 0; b < blocks; ++b) v = kron(v, code.codewords);
  return DensityMatrix(hermitian_part(v * rho_logical.matrix() * v.adjoint()));
}

inline DensityMatrix decode(const QecCode& code, const DensityMatrix& rho_physical) {
  const int n = rho_physical.num_qubits();
  const int blocks = detail::register_blocks(code, n);
  ComplexMatrix m = rho_physical.matrix();
  std::vector<int> keep;
  for (int b = 0; b < blocks; ++b) {
    detail::block_left(m, code.decode_sparse, b * code.n_physical, code.n_physical, n);
    detail::block_right(m, code.encode_sparse, b * code.n_physical, code.n_physical, n);
    for (int q : code.main_positions) keep.push_back(b * code.n_physical + q);
  }
  return partial_trace(DensityMatrix(hermitian_part(m)), keep);
}

/// Applies the recovery channel to every block; output stays encoded.
inline DensityMatrix recover(const QecCode& code, const DensityMatrix& rho_physical, RecoveryOptions opt = {}) {
  const int n = rho_physical.num_qubits();
  const int blocks = detail::register_blocks(code, n);
  ComplexMatrix m = rho_physical.matrix();
  for (int b = 0; b < blocks; ++b) {
    const int first = b * code.n_physical;
    detail::block_left(m, code.decode_sparse, first, code.n_physical, n);
    detail::block_right(m, code.encode_sparse, first, code.n_physical, n);
    m = detail::apply_pattern_recovery(m, code, b, n, opt.mode, opt.rng);
    detail::block_left(m, code.encode_sparse, first, code.n_physical, n);
    detail::block_right(m, code.decode_sparse, first, code.n_physical, n);
  }
  const Complex tr = m.trace();
  return DensityMatrix(hermitian_part(m) / tr.real());
}

/// Conjugates a register by a Pauli string (an injected error).
inline DensityMatrix apply_pauli(const PauliString& p, const DensityMatrix& rho) {
  if (p.size() != rho.num_qubits()) throw DomainError("apply_pauli: length does not match register");
  ComplexMatrix m(rho.dim(), rho.dim());
  for (Eigen::Index c = 0; c < rho.dim(); ++c) m.col(c) = p.apply(rho.matrix().col(c));
  ComplexMatrix out(rho.dim(), rho.dim());
  const ComplexMatrix madj = m.adjoint();
  for (Eigen::Index c = 0; c < rho.dim(); ++c) out.col(c) = p.apply(madj.col(c));
  return DensityMatrix(hermitian_part(out.adjoint()));
}

/// One verified error/syndrome pair.
struct CodeCheck {
  std::string code;
  std::string error;       // injected Pauli
  std::string syndrome;
  std::string correction;  // tabulated correction(s), '|' separated
  bool passed = false;
  std::string detail;
};

/// Brute-force check of a code's correction table:
///  - every weight-one error (and the identity) has a definite syndrome;
///  - every published row agrees with the derived syndrome grouping;
///  - recovery restores `n_states` random logical states to fidelity 1
///    within 1e-9 (first candidate where rows are degenerate).
inline std::vector<CodeCheck> verify_code(const QecCode& code, int n_states, std::mt19937_64& rng) {
  const SyndromeTable derived = derive_syndrome_table(code);
  std::vector<DensityMatrix> states;
  std::normal_distribution<double> gauss;
  const Eigen::Index dk = Eigen::Index{1} << code.k_logical;
  for (int i = 0; i < n_states; ++i) {
    ComplexVector v(dk);
    for (Eigen::Index j = 0; j < dk; ++j) v(j) = Complex(gauss(rng), gauss(rng));
    states.push_back(DensityMatrix::from_pure(v));
  }
  const RecoveryMode mode = code.reference_table.empty() ? RecoveryMode::kMixing : RecoveryMode::kFirst;
  auto worst_fidelity = [&](const PauliString& e) {
    double worst = 1.0;
    for (const auto& rho : states) {
      const DensityMatrix out = decode(code, recover(code, apply_pauli(e, encode(code, rho)), {mode, nullptr}));
      worst = std::min(worst, fidelity(rho, out));
    }
    return worst;
  };
  auto joined = [](const std::vector<PauliString>& ps) {
    std::string out;
    for (const auto& p : ps) out += (out.empty() ? "" : "|") + p.str();
    return out;
  };
  std::vector<CodeCheck> checks;
  if (code.reference_table.empty()) {
    // No published rows: each derived row must be a distinct single error.
    for (const auto& row : derived) {
      CodeCheck c{code.name, row.corrections[0].str(), row.syndrome, joined(row.corrections), false, ""};
      const double f = worst_fidelity(row.corrections[0]);
      c.passed = row.corrections.size() == 1 && f > 1.0 - 1e-9;
      c.detail = "min fidelity " + std::to_string(f);
      checks.push_back(std::move(c));
    }
    return checks;
  }
  for (const auto& row : code.reference_table) {
    CodeCheck c{code.name, row.corrections[0].str(), row.syndrome, joined(row.corrections), false, ""};
    auto it = std::find_if(derived.begin(), derived.end(),
                           [&](const SyndromeEntry& d) { return d.syndrome == row.syndrome; });
    if (it == derived.end()) {
      c.detail = "syndrome not produced by any weight-one error";
    } else if (joined(it->corrections) != c.correction) {
      c.detail = "derived errors " + joined(it->corrections);
    } else {
      const double f = worst_fidelity(row.corrections[0]);
      c.passed = f > 1.0 - 1e-9;
      c.detail = "min fidelity " + std::to_string(f);
    }
    checks.push_back(std::move(c));
  }
  // A degenerate table belongs to a detecting code; its other syndromes carry
  // no correction promise.
  const bool degenerate = std::any_of(code.reference_table.begin(), code.reference_table.end(),
                                      [](const SyndromeEntry& r) { return r.corrections.size() > 1; });
  if (degenerate) return checks;
  // Derived rows absent from the published table must still be corrected.
  for (const auto& row : derived) {
    const bool listed = std::any_of(code.reference_table.begin(), code.reference_table.end(),
                                    [&](const SyndromeEntry& r) { return r.syndrome == row.syndrome; });
    if (listed) continue;
    for (const auto& e : row.corrections) {
      CodeCheck c{code.name, e.str(), row.syndrome, "derived", false, ""};
      const double f = worst_fidelity(e);
      c.passed = f > 1.0 - 1e-9;
      c.detail = "min fidelity " + std::to_string(f);
      checks.push_back(std::move(c));
    }
  }
  return checks;
}

}  // namespace qecbath
