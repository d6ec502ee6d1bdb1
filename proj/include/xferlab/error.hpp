// Copyright 2026 The xferlab Authors
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

namespace xferlab {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates an operation's precondition (bad dimension, rate out
/// of range, non-Hermitian generator, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A Fock-space truncation cannot hold the requested state to tolerance.
class TruncationError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// A numerical guard tripped during integration (step too large, blow-up).
class NumericalGuard : public Error {
 public:
  using Error::Error;
};

/// An experiment configuration is malformed or violates a precondition.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing an artifact failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace xferlab
