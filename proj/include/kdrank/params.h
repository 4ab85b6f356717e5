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

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kdrank/tensor.h"

namespace kdrank {

using Rng = std::mt19937_64;

// Ordered, named collection of trainable tensors. Insertion order is the
// serialization and optimizer order.
class ParamSet {
 public:
  // Stores t (marked requires_grad) under name. Names must be unique.
  Tensor& add(std::string name, Tensor t);

  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);

  // Appends every entry of other under prefix + name, aliasing storage.
  void extend(std::string_view prefix, const ParamSet& other);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t total_values() const;
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  void zero_grad();
  // Deep copy with fresh storage.
  ParamSet clone() const;
  // Overwrites values in place; names and shapes must match.
  void assign_values(const ParamSet& other);
  bool values_equal(const ParamSet& other) const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

Tensor uniform_tensor(Shape shape, double lo, double hi, Rng& rng);
// Glorot/Xavier uniform for a fan_in x fan_out projection.
Tensor xavier_tensor(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// FNV-1a over names, shapes and raw value bytes.
std::uint64_t fingerprint(const ParamSet& params);

}  // namespace kdrank
