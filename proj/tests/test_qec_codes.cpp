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
#include <set>

#include "qecbath/qec_codes.hpp"
#include "test_util.hpp"

namespace qecbath {
namespace {

const QecCode& five() {
  static const QecCode c = build_five_qubit();
  return c;
}
const QecCode& steane() {
  static const QecCode c = build_steane();
  return c;
}
const QecCode& toric() {
  static const QecCode c = build_toric_822();
  return c;
}

ComplexMatrix apply_pauli(const PauliString& p, const ComplexMatrix& m) {
  ComplexMatrix left(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) left.col(c) = p.apply(m.col(c));
  const ComplexMatrix la = left.adjoint();
  ComplexMatrix out(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.col(c) = p.apply(la.col(c));
  return out.adjoint();
}

// Oracle: dense recovery channel sum_s sum_c w c P_s rho P_s c with P_s the
// product of generator projectors, all in the physical frame.
ComplexMatrix projector_recovery(const QecCode& code, const ComplexMatrix& rho, RecoveryMode mode) {
  const Eigen::Index d = code.dim();
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  const int ng = static_cast<int>(code.stabilizer_generators.size());
  for (const auto& pr : code.recovery) {
    ComplexMatrix proj = ComplexMatrix::Identity(d, d);
    for (int i = 0; i < ng; ++i) {
      const bool fired = pr.pattern & (std::size_t{1} << (ng - 1 - i));
      ComplexMatrix gp(d, d);
      for (Eigen::Index c = 0; c < d; ++c) gp.col(c) = code.stabilizer_generators[i].apply(proj.col(c));
      proj = 0.5 * (proj + (fired ? -1.0 : 1.0) * gp);
    }
    const ComplexMatrix sandwiched = proj * rho * proj;
    const std::size_t nc = mode == RecoveryMode::kMixing ? pr.corrections.size() : 1;
    for (std::size_t c = 0; c < nc; ++c) {
      const double w = mode == RecoveryMode::kMixing ? pr.weights[c] : 1.0;
      out += w * apply_pauli(pr.corrections[c], sandwiched);
    }
  }
  return out;
}

TEST(FiveQubit, CodewordAmplitudes) {
  const auto& c = five();
  EXPECT_NEAR(c.codewords(0, 0).real(), -1.0 / (2.0 * std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(std::abs(c.codewords.col(0).dot(c.codewords.col(1))), 0.0, 1e-15);
  int nonzero0 = 0, nonzero1 = 0;
  for (Eigen::Index i = 0; i < 32; ++i) {
    nonzero0 += std::abs(c.codewords(i, 0)) > 0;
    nonzero1 += std::abs(c.codewords(i, 1)) > 0;
  }
  EXPECT_EQ(nonzero0, 8);
  EXPECT_EQ(nonzero1, 8);
}

TEST(FiveQubit, UnitaryMapsPinnedColumns) {
  const auto& c = five();
  EXPECT_LT(max_abs_diff(c.encode_unitary.adjoint() * c.encode_unitary, ComplexMatrix::Identity(32, 32)), 1e-10);
  EXPECT_LT((c.encode_unitary.col(0) - c.codewords.col(0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((c.encode_unitary.col(0b00100) - c.codewords.col(1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FiveQubit, SyndromesDistinctAndExhaustive) {
  const auto table = derive_syndrome_table(five());
  EXPECT_EQ(table.size(), 16u);
  std::set<std::string> seen;
  for (const auto& row : table) {
    EXPECT_EQ(row.corrections.size(), 1u);
    seen.insert(row.syndrome);
  }
  EXPECT_EQ(seen.size(), 16u);
}

TEST(FiveQubit, GeneratorsFixCodewords) {
  for (const auto& g : five().stabilizer_generators) {
    for (Eigen::Index b = 0; b < 2; ++b) {
      EXPECT_LT((g.apply(five().codewords.col(b)) - five().codewords.col(b)).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(FiveQubit, PublishedKrausMatchesProjectorOracle) {
  std::mt19937_64 rng(11);
  const auto& c = five();
  for (int trial = 0; trial < 3; ++trial) {
    const DensityMatrix rho = testutil::random_mixed(5, rng);
    const ComplexMatrix oracle = projector_recovery(c, rho.matrix(), RecoveryMode::kMixing);
    // Decoded-frame Kraus set, conjugated back to the physical frame.
    ComplexMatrix dense = ComplexMatrix::Zero(32, 32);
    const ComplexMatrix dec = c.encode_unitary.adjoint() * rho.matrix() * c.encode_unitary;
    for (const auto& k : c.recovery_kraus()) dense += k * dec * k.adjoint();
    dense = c.encode_unitary * dense * c.encode_unitary.adjoint();
    EXPECT_LT(max_abs_diff(dense, oracle), 1e-12);
    EXPECT_LT(max_abs_diff(recover(c, rho).matrix(), oracle), 1e-12);
  }
}

TEST(Codes, KrausCompleteness) {
  for (const QecCode* c : {&five(), &steane(), &toric()}) {
    for (auto mode : {RecoveryMode::kMixing, RecoveryMode::kFirst}) {
      ComplexMatrix acc = ComplexMatrix::Zero(c->dim(), c->dim());
      for (const auto& k : c->recovery_kraus(mode)) acc += k.adjoint() * k;
      EXPECT_LT(max_abs_diff(acc, ComplexMatrix::Identity(c->dim(), c->dim())), 1e-9) << c->name;
    }
  }
}

TEST(Codes, RecoveryMatchesProjectorOracle) {
  std::mt19937_64 rng(5);
  for (const QecCode* c : {&steane(), &toric()}) {
    for (auto mode : {RecoveryMode::kMixing, RecoveryMode::kFirst}) {
      const DensityMatrix rho = testutil::random_mixed(c->n_physical, rng);
      const ComplexMatrix oracle = projector_recovery(*c, rho.matrix(), mode);
      EXPECT_LT(max_abs_diff(recover(*c, rho, {mode, nullptr}).matrix(), oracle), 1e-11) << c->name;
    }
  }
}

TEST(Codes, RoundTripIsIdentity) {
  std::mt19937_64 rng(7);
  for (const QecCode* c : {&five(), &steane(), &toric()}) {
    const DensityMatrix rho = testutil::random_mixed(c->k_logical, rng);
    const DensityMatrix enc = encode(*c, rho);
    EXPECT_NEAR(enc.matrix().trace().real(), 1.0, 1e-12);
    EXPECT_LT(max_abs_diff(decode(*c, enc).matrix(), rho.matrix()), 1e-10) << c->name;
    EXPECT_LT(max_abs_diff(recover(*c, enc).matrix(), enc.matrix()), 1e-10) << c->name;
  }
}

TEST(Codes, DecodeOfMaximallyMixedIsMaximallyMixed) {
  for (const QecCode* c : {&five(), &steane(), &toric()}) {
    const DensityMatrix out = decode(*c, DensityMatrix::maximally_mixed(c->n_physical));
    EXPECT_LT(max_abs_diff(out.matrix(), DensityMatrix::maximally_mixed(c->k_logical).matrix()), 1e-12);
  }
}

TEST(Codes, RecoverPreservesTrace) {
  std::mt19937_64 rng(9);
  for (const QecCode* c : {&five(), &steane(), &toric()}) {
    const DensityMatrix rho = testutil::random_mixed(c->n_physical, rng);
    EXPECT_NEAR(recover(*c, rho).matrix().trace().real(), 1.0, 1e-10);
  }
}

double corrected_fidelity(const QecCode& c, const PauliString& e, const DensityMatrix& rho, RecoveryMode mode) {
  const DensityMatrix hit = apply_pauli(e, encode(c, rho));
  return fidelity(rho, decode(c, recover(c, hit, {mode, nullptr})));
}

TEST(FiveQubit, CorrectsEveryWeightOneError) {
  std::mt19937_64 rng(21);
  std::vector<PauliString> errors{PauliString("IIIII")};
  for (const auto& e : weight_one_paulis(5)) errors.push_back(e);
  for (int trial = 0; trial < 5; ++trial) {
    const DensityMatrix rho = DensityMatrix::from_pure(testutil::random_pure(1, rng));
    for (const auto& e : errors) {
      EXPECT_NEAR(corrected_fidelity(five(), e, rho, RecoveryMode::kMixing), 1.0, 1e-9) << e.str();
    }
  }
}

TEST(FiveQubit, BitFlipOnSecondQubitOfOne) {
  const DensityMatrix one = DensityMatrix::basis_state(1, 1);
  const DensityMatrix enc = encode(five(), one);
  const DensityMatrix out = recover(five(), apply_pauli(PauliString("IXIII"), enc));
  EXPECT_LT(max_abs_diff(out.matrix(), enc.matrix()), 1e-9);
}

TEST(Steane, PublishedRowsReproduced) {
  const auto derived = derive_syndrome_table(steane());
  for (const auto& row : steane().reference_table) {
    auto it = std::find_if(derived.begin(), derived.end(),
                           [&](const SyndromeEntry& d) { return d.syndrome == row.syndrome; });
    ASSERT_NE(it, derived.end()) << row.syndrome;
    EXPECT_EQ(it->corrections.size(), 1u);
    EXPECT_EQ(it->corrections[0].ops(), row.corrections[0].ops());
  }
  // 1 identity + 21 weight-one errors, all with distinct syndromes.
  EXPECT_EQ(derived.size(), 22u);
}

TEST(Steane, SpotRows) {
  EXPECT_EQ(detail::symplectic_syndrome(steane().stabilizer_generators, PauliString("XIIIIII")), "000001");
  EXPECT_EQ(detail::symplectic_syndrome(steane().stabilizer_generators, PauliString("IIIIIIZ")), "111000");
}

TEST(Steane, CorrectsAllWeightOne) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 4; ++trial) {
    const DensityMatrix rho = DensityMatrix::from_pure(testutil::random_pure(1, rng));
    for (const auto& e : weight_one_paulis(7)) {
      EXPECT_NEAR(corrected_fidelity(steane(), e, rho, RecoveryMode::kMixing), 1.0, 1e-9) << e.str();
    }
  }
  const DensityMatrix plus = DensityMatrix::from_pure(testutil::plus_state());
  EXPECT_NEAR(corrected_fidelity(steane(), PauliString("IIIZIII"), plus, RecoveryMode::kMixing), 1.0, 1e-9);
}

TEST(Toric, CodewordsAndLogicals) {
  const auto& c = toric();
  EXPECT_NEAR(c.codewords(29, 0).real(), 1.0 / (2.0 * std::sqrt(2.0)), 1e-15);
  // Z on qubits 0,1 reads the second label bit; Z on qubits 2,6 reads the first.
  const double sign_z1[4] = {1, -1, 1, -1};
  const double sign_z2[4] = {1, 1, -1, -1};
  for (Eigen::Index b = 0; b < 4; ++b) {
    const ComplexVector cw = c.codewords.col(b);
    EXPECT_NEAR(cw.dot(PauliString("ZZIIIIII").apply(cw)).real(), sign_z1[b], 1e-12);
    EXPECT_NEAR(cw.dot(PauliString("IIZIIIZI").apply(cw)).real(), sign_z2[b], 1e-12);
  }
}

TEST(Toric, PublishedRowsReproduced) {
  const auto derived = derive_syndrome_table(toric());
  for (const auto& row : toric().reference_table) {
    auto it = std::find_if(derived.begin(), derived.end(),
                           [&](const SyndromeEntry& d) { return d.syndrome == row.syndrome; });
    ASSERT_NE(it, derived.end()) << row.syndrome;
    ASSERT_EQ(it->corrections.size(), row.corrections.size()) << row.syndrome;
    for (std::size_t i = 0; i < row.corrections.size(); ++i) {
      EXPECT_EQ(it->corrections[i].ops(), row.corrections[i].ops());
    }
  }
}

TEST(Toric, FirstCandidateCorrects) {
  std::mt19937_64 rng(13);
  const DensityMatrix rho = DensityMatrix::from_pure(testutil::random_pure(2, rng));
  for (const auto& row : toric().reference_table) {
    EXPECT_NEAR(corrected_fidelity(toric(), row.corrections[0], rho, RecoveryMode::kFirst), 1.0, 1e-9);
  }
}

TEST(Toric, SecondCandidateLeavesCodeSpace) {
  std::mt19937_64 rng(17);
  const DensityMatrix rho = DensityMatrix::from_pure(testutil::random_pure(2, rng));
  const ComplexMatrix proj = toric().codewords * toric().codewords.adjoint();
  for (const auto& row : toric().reference_table) {
    if (row.corrections.size() < 2) continue;
    const DensityMatrix hit = apply_pauli(row.corrections[1], encode(toric(), rho));
    const DensityMatrix out = recover(toric(), hit, {RecoveryMode::kFirst, nullptr});
    EXPECT_NEAR((proj * out.matrix()).trace().real(), 1.0, 1e-9);
    EXPECT_LT(fidelity(rho, decode(toric(), out)), 1.0 - 1e-3);
  }
}

TEST(Toric, MixingChannelMatchesOracle) {
  // Seventh-qubit bit flip: half the time the matching candidate fires, half
  // the time the logical X7 X8 residue is applied.
  std::mt19937_64 rng(19);
  const DensityMatrix rho = DensityMatrix::from_pure(testutil::random_pure(2, rng));
  const DensityMatrix enc = encode(toric(), rho);
  const DensityMatrix hit = apply_pauli(PauliString("IIIIIIXI"), enc);
  const DensityMatrix out = decode(toric(), recover(toric(), hit));
  const DensityMatrix wrong = decode(toric(), apply_pauli(PauliString("IIIIIIXX"), enc));
  const ComplexMatrix oracle = 0.5 * rho.matrix() + 0.5 * wrong.matrix();
  EXPECT_LT(max_abs_diff(out.matrix(), oracle), 1e-10);
}

TEST(Toric, StochasticModeIsSeeded) {
  std::mt19937_64 a(42), b(42);
  std::mt19937_64 rng(23);
  const DensityMatrix rho = testutil::random_mixed(8, rng);
  const DensityMatrix x = recover(toric(), rho, {RecoveryMode::kStochastic, &a});
  const DensityMatrix y = recover(toric(), rho, {RecoveryMode::kStochastic, &b});
  EXPECT_EQ(max_abs_diff(x.matrix(), y.matrix()), 0.0);
}

TEST(FiveQubit, TwoBlockEncodingKeepsCorrelations) {
  const DensityMatrix bell = DensityMatrix::from_pure(testutil::singlet());
  const DensityMatrix enc = encode(five(), bell);
  EXPECT_EQ(enc.num_qubits(), 10);
  EXPECT_LT(max_abs_diff(decode(five(), enc).matrix(), bell.matrix()), 1e-10);
  // Independent errors on each block are both corrected.
  const DensityMatrix hit = apply_pauli(PauliString("IYIIIIIIZI"), enc);
  EXPECT_NEAR(fidelity(bell, decode(five(), recover(five(), hit))), 1.0, 1e-9);
}

TEST(Codes, DimensionErrors) {
  EXPECT_THROW(decode(five(), DensityMatrix::maximally_mixed(3)), DomainError);
  EXPECT_THROW(encode(toric(), DensityMatrix::maximally_mixed(1)), DomainError);
  EXPECT_THROW(encode(steane(), DensityMatrix::maximally_mixed(2)), DomainError);
  EXPECT_THROW(build_code("surface"), DomainError);
}

}  // namespace
}  // namespace qecbath
