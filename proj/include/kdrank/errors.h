// Copyright 2026 The kdrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace kdrank {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A pooling or attention step was asked to reduce over zero valid rows.
class EmptySequenceError : public Error {
 public:
  using Error::Error;
};

// A caller broke a documented precondition (non-scalar loss, empty metric
// input, out-of-range target, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

// Inconsistent model or training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent dataset, record or checkpoint content.
class DataError : public Error {
 public:
  using Error::Error;
};

// The requested operation is not available for the model's head kind.
class UnsupportedHeadError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace kdrank
