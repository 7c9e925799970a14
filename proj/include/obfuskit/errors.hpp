// Copyright 2026 The Obfuskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OBFUSKIT_ERRORS_HPP_
#define OBFUSKIT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace obfuskit {

// Base for every failure obfuskit raises on bad inputs or infeasible
// requests. The CLI maps subclasses onto its exit-code contract, so new
// error kinds should derive from one of the three roots below rather than
// from std::exception directly.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input violates a domain contract (bad pmf, mismatched alphabets, epsilon
// out of range, ...). CLI exit code 2.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A text document could not be parsed. CLI exit code 3.
class ParseError : public Error {
 public:
  using Error::Error;
};

// The instance admits no perfectly obfuscated release with positive
// utility. CLI exit code 1.
class InfeasibleInstance : public Error {
 public:
  using Error::Error;
};

class NegativeMass : public DomainError {
 public:
  using DomainError::DomainError;
};

class MassMismatch : public DomainError {
 public:
  using DomainError::DomainError;
};

class SupportViolation : public DomainError {
 public:
  using DomainError::DomainError;
};

class NotInterior : public DomainError {
 public:
  using DomainError::DomainError;
};

class MarginalMismatch : public DomainError {
 public:
  using DomainError::DomainError;
};

class InconsistentMarginals : public DomainError {
 public:
  using DomainError::DomainError;
};

class DimensionMismatch : public DomainError {
 public:
  using DomainError::DomainError;
};

class DegenerateMarginal : public DomainError {
 public:
  using DomainError::DomainError;
};

class ZeroDirection : public DomainError {
 public:
  using DomainError::DomainError;
};

class EpsilonTooLarge : public DomainError {
 public:
  using DomainError::DomainError;
};

class RequestedTooManyDirections : public DomainError {
 public:
  using DomainError::DomainError;
};

class OracleScaleExceeded : public DomainError {
 public:
  using DomainError::DomainError;
};

class PairUnavailable : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace obfuskit

#endif  // OBFUSKIT_ERRORS_HPP_
