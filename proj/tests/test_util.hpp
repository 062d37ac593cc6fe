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

#include <cmath>
#include <random>

#include "qecbath/quantum_core.hpp"

namespace qecbath::testutil {

inline ComplexVector random_pure(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexVector v(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(g(rng), g(rng));
  return v / v.norm();
}

/// Full-rank random state (Ginibre construction).
inline DensityMatrix random_mixed(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const Eigen::Index d = Eigen::Index{1} << n;
  ComplexMatrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  }
  ComplexMatrix m = a * a.adjoint();
  m /= m.trace().real();
  return DensityMatrix(hermitian_part(m));
}

inline ComplexVector plus_state() {
  ComplexVector v(2);
  v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return v;
}

inline ComplexVector singlet() {
  ComplexVector v = ComplexVector::Zero(4);
  v(1) = 1.0 / std::sqrt(2.0);
  v(2) = -1.0 / std::sqrt(2.0);
  return v;
}

}  // namespace qecbath::testutil
