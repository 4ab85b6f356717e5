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

#include "kdrank/params.h"

#include <cmath>
#include <cstring>

#include "kdrank/errors.h"

namespace kdrank {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

Tensor& ParamSet::add(std::string name, Tensor t) {
  if (contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
  if (!t.requires_grad()) t.set_requires_grad(true);
  entries_.emplace_back(std::move(name), std::move(t));
  return entries_.back().second;
}

bool ParamSet::contains(std::string_view name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return true;
  }
  return false;
}

const Tensor& ParamSet::get(std::string_view name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw ConfigError("missing parameter '" + std::string(name) + "'");
}

Tensor& ParamSet::get(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).get(name));
}

void ParamSet::extend(std::string_view prefix, const ParamSet& other) {
  for (const auto& [n, t] : other.entries_) {
    add(std::string(prefix) + n, t);
  }
}

std::size_t ParamSet::total_values() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& [n, t] : entries_) out.add(n, t.clone(true));
  return out;
}

void ParamSet::assign_values(const ParamSet& other) {
  if (other.size() != size()) {
    throw ConfigError("parameter count mismatch: " + std::to_string(size()) +
                      " vs " + std::to_string(other.size()));
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& [name, dst] = entries_[i];
    const auto& [oname, src] = other.entries_[i];
    if (name != oname || dst.shape() != src.shape()) {
      throw ConfigError("parameter '" + name + "' " + dst.shape_string() +
                        " does not match '" + oname + "' " +
                        src.shape_string());
    }
    std::copy(src.data().begin(), src.data().end(),
              dst.mutable_data().begin());
  }
}

bool ParamSet::values_equal(const ParamSet& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i].second;
    const auto& b = other.entries_[i].second;
    if (entries_[i].first != other.entries_[i].first ||
        a.shape() != b.shape()) {
      return false;
    }
    if (std::memcmp(a.data().data(), b.data().data(),
                    a.numel() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

Tensor uniform_tensor(Shape shape, double lo, double hi, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.mutable_data()) v = dist(rng);
  return t;
}

Tensor xavier_tensor(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_tensor({fan_in, fan_out}, -limit, limit, rng);
}

std::uint64_t fingerprint(const ParamSet& params) {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, t] : params) {
    fnv_mix(h, name.data(), name.size());
    for (std::size_t dim : t.shape()) {
      const std::uint64_t d = dim;
      fnv_mix(h, &d, sizeof(d));
    }
    fnv_mix(h, t.data().data(), t.numel() * sizeof(double));
  }
  return h;
}

}  // namespace kdrank
