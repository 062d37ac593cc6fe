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

#include <stdexcept>
#include <string>

namespace qecbath {

/// Base class for every error raised by the library. Maps to CLI exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument: wrong dimension, index out of range, value outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A matrix that should be Hermitian is not (within tolerance).
class HermiticityError : public Error {
 public:
  using Error::Error;
};

/// An eigenvalue fell below the hard positivity floor.
class PositivityError : public Error {
 public:
  using Error::Error;
};

/// Trace drifted beyond the integrator's budget; the step is too large.
class TraceDriftError : public Error {
 public:
  using Error::Error;
};

/// Configuration document problems (unknown key, schema, range).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qecbath
