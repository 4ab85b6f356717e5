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

// Dense 1-D/2-D double tensors with tape-based reverse-mode autodiff.
//
// Every op below is a free function that computes its result eagerly. When
// gradient recording is enabled on the calling thread and at least one input
// requires a gradient, the op appends a backward closure to the thread's
// Tape. backward() replays those closures in reverse execution order.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kdrank {

using Shape = std::vector<std::size_t>;

struct TensorStorage {
  Shape shape;
  std::vector<double> data;
  // Sized like data iff requires_grad.
  std::vector<double> grad;
  bool requires_grad = false;
  // Leaves are user-created tensors (parameters, inputs). Their gradients
  // survive across backward() calls; op outputs are reset at the start of
  // every backward().
  bool is_leaf = true;
};

// Shared handle to a TensorStorage. Copies alias the same buffer, which is
// what parameter sets and the tape rely on. Use clone() for a deep copy.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);

  const Shape& shape() const { return impl_->shape; }
  std::size_t dim() const { return impl_->shape.size(); }
  // A 1-D tensor of length n behaves as a 1 x n row wherever rows are needed.
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad() { return impl_->grad; }
  bool requires_grad() const { return impl_->requires_grad; }
  bool is_leaf() const { return impl_->is_leaf; }

  double item() const;
  double operator[](std::size_t i) const { return impl_->data[i]; }
  double at(std::size_t r, std::size_t c) const;

  void set_requires_grad(bool on);
  void zero_grad();
  // Deep copy that shares nothing with this tensor and has no history.
  Tensor clone(bool requires_grad = false) const;
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  std::string shape_string() const;

  const std::shared_ptr<TensorStorage>& storage() const { return impl_; }

 private:
  std::shared_ptr<TensorStorage> impl_;
};

std::string shape_string(const Shape& shape);

// Ordered record of executed differentiable ops.
class Tape {
 public:
  void record(const Tensor& output, std::function<void()> backward_fn);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded closure in exact
  // reverse order. Leaf gradients accumulate across calls; intermediate
  // gradients are recomputed from scratch each call.
  void backward(const Tensor& loss);

  void clear();
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::shared_ptr<TensorStorage> output;
    std::function<void()> backward_fn;
  };
  std::vector<Entry> entries_;
};

// The tape ops on this thread record into.
Tape& current_tape();

bool grad_enabled();

// Disables recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Runs current_tape().backward(loss). loss must hold exactly one value.
void backward(const Tensor& loss);

enum class PoolKind { kMax, kMean };

// --- linear algebra --------------------------------------------------------

// a: m x k (or a 1-D k-vector, treated as 1 x k), b: k x n.
// Returns m x n, or a 1-D n-vector when a is 1-D.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// --- pointwise -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
// relu'(0) is 0.
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor scale(const Tensor& a, double factor);
// Adds a length-n bias to every row of an m x n (or 1-D n) tensor.
Tensor add_bias(const Tensor& x, const Tensor& bias);

// --- reductions and normalisation -------------------------------------------

// Row-wise softmax with per-row max subtraction.
Tensor softmax_rows(const Tensor& x);
// As above, but columns >= valid_cols get weight exactly 0.
Tensor softmax_rows(const Tensor& x, std::size_t valid_cols);
// Column-wise max or mean over the first valid_len rows of x. Max ties go to
// the lowest row index. Returns a 1-D tensor of length cols().
Tensor pool(const Tensor& x, PoolKind kind, std::size_t valid_len);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-6);
// -log softmax(scores)[target] for a 1-D score vector.
Tensor cross_entropy(const Tensor& scores, std::size_t target);

// --- structural ------------------------------------------------------------

// axis 0 stacks rows (or appends 1-D vectors); axis 1 joins 2-D columns.
Tensor concat(std::span<const Tensor> parts, std::size_t axis = 0);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis = 0);
// Turns equal-length 1-D tensors into the rows of a matrix.
Tensor stack(std::span<const Tensor> rows);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
// Row i of a 2-D tensor as a 1-D tensor.
Tensor row(const Tensor& x, std::size_t i);
Tensor reshape(const Tensor& x, Shape shape);
// Gathers table rows. ids must be < table.rows().
Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids);

}  // namespace kdrank
