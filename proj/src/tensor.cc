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

#include "kdrank/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "kdrank/errors.h"

namespace kdrank {

namespace {

using StoragePtr = std::shared_ptr<TensorStorage>;

thread_local Tape g_tape;
thread_local bool g_grad_enabled = true;

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void check_rank(const Shape& shape) {
  if (shape.empty() || shape.size() > 2) {
    throw DimensionError("tensors must be 1-D or 2-D, got " +
                         shape_string(shape));
  }
}

bool tracks(std::initializer_list<const Tensor*> inputs) {
  if (!g_grad_enabled) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// Creates an op output. When track is set the output owns a zeroed gradient
// buffer and is marked non-leaf.
Tensor make_output(Shape shape, std::vector<double> values, bool track) {
  Tensor out(std::move(shape), std::move(values));
  if (track) {
    auto& s = *out.storage();
    s.requires_grad = true;
    s.is_leaf = false;
    s.grad.assign(s.data.size(), 0.0);
  }
  return out;
}

void same_shape_or_throw(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         a.shape_string() + " vs " + b.shape_string());
  }
}

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c[m x k] += x[m x n] * y[k x n]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* x,
             const double* y, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* yp = y + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += xi[j] * yp[j];
      c[i * k + p] += acc;
    }
  }
}

// c[k x n] += x[m x k]^T * y[m x n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* x,
             const double* y, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x + i * k;
    const double* yi = y + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double xip = xi[p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += xip * yi[j];
    }
  }
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& a, Forward f, Derivative df) {
  const bool track = tracks({&a});
  std::vector<double> out(a.numel());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  Tensor result = make_output(a.shape(), std::move(out), track);
  if (track) {
    StoragePtr sa = a.storage();
    StoragePtr so = result.storage();
    current_tape().record(result, [sa, so, df] {
      for (std::size_t i = 0; i < sa->data.size(); ++i) {
        sa->grad[i] += so->grad[i] * df(sa->data[i], so->data[i]);
      }
    });
  }
  return result;
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// --- Tensor ----------------------------------------------------------------

Tensor::Tensor() : impl_(std::make_shared<TensorStorage>()) {
  impl_->shape = {0};
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<TensorStorage>()) {
  check_rank(shape);
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + kdrank::shape_string(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  set_requires_grad(requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_rank(shape);
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values, bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(
    std::initializer_list<std::initializer_list<double>> rows,
    bool requires_grad) {
  std::vector<double> values;
  const std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, std::move(values), requires_grad);
}

std::size_t Tensor::rows() const {
  return dim() == 1 ? 1 : impl_->shape[0];
}

std::size_t Tensor::cols() const {
  return dim() == 1 ? impl_->shape[0] : impl_->shape[1];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on tensor of shape " + shape_string());
  }
  return impl_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return impl_->data[r * cols() + c];
}

void Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  if (on) {
    impl_->grad.assign(impl_->data.size(), 0.0);
  } else {
    impl_->grad.clear();
  }
}

void Tensor::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone(bool requires_grad) const {
  return Tensor(impl_->shape, impl_->data, requires_grad);
}

std::string Tensor::shape_string() const {
  return kdrank::shape_string(impl_->shape);
}

// --- Tape ------------------------------------------------------------------

void Tape::record(const Tensor& output, std::function<void()> backward_fn) {
  entries_.push_back({output.storage(), std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        loss.shape_string());
  }
  if (!loss.requires_grad()) return;
  for (auto& e : entries_) {
    std::fill(e.output->grad.begin(), e.output->grad.end(), 0.0);
  }
  loss.storage()->grad[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    it->backward_fn();
  }
}

void Tape::clear() { entries_.clear(); }

Tape& current_tape() { return g_tape; }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Tensor& loss) { current_tape().backward(loss); }

// --- linear algebra --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (b.dim() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape_string() +
                         " by " + b.shape_string());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  gemm_nn(m, k, n, a.data().data(), b.data().data(), out.data());
  Shape shape = a.dim() == 1 ? Shape{n} : Shape{m, n};
  const bool track = tracks({&a, &b});
  Tensor result = make_output(std::move(shape), std::move(out), track);
  if (track) {
    StoragePtr sa = a.storage(), sb = b.storage(), so = result.storage();
    current_tape().record(result, [sa, sb, so, m, k, n] {
      if (sa->requires_grad) {
        gemm_nt(m, n, k, so->grad.data(), sb->data.data(), sa->grad.data());
      }
      if (sb->requires_grad) {
        gemm_tn(m, k, n, sa->data.data(), so->grad.data(), sb->grad.data());
      }
    });
  }
  return result;
}

Tensor transpose(const Tensor& a) {
  if (a.dim() != 2) {
    throw DimensionError("transpose needs a 2-D tensor, got " +
                         a.shape_string());
  }
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  auto in = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
  }
  const bool track = tracks({&a});
  Tensor result = make_output({n, m}, std::move(out), track);
  if (track) {
    StoragePtr sa = a.storage(), so = result.storage();
    current_tape().record(result, [sa, so, m, n] {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          sa->grad[i * n + j] += so->grad[j * m + i];
        }
      }
    });
  }
  return result;
}

// --- pointwise -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape_or_throw(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  const bool track = tracks({&a, &b});
  Tensor result = make_output(a.shape(), std::move(out), track);
  if (track) {
    StoragePtr sa = a.storage(), sb = b.storage(), so = result.storage();
    current_tape().record(result, [sa, sb, so] {
      for (std::size_t i = 0; i < so->grad.size(); ++i) {
        if (sa->requires_grad) sa->grad[i] += so->grad[i];
        if (sb->requires_grad) sb->grad[i] += so->grad[i];
      }
    });
  }
  return result;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  same_shape_or_throw(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  const bool track = tracks({&a, &b});
  Tensor result = make_output(a.shape(), std::move(out), track);
  if (track) {
    StoragePtr sa = a.storage(), sb = b.storage(), so = result.storage();
    current_tape().record(result, [sa, sb, so] {
      for (std::size_t i = 0; i < so->grad.size(); ++i) {
        if (sa->requires_grad) sa->grad[i] += so->grad[i];
        if (sb->requires_grad) sb->grad[i] -= so->grad[i];
      }
    });
  }
  return result;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  same_shape_or_throw(a, b, "hadamard");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  const bool track = tracks({&a, &b});
  Tensor result = make_output(a.shape(), std::move(out), track);
  if (track) {
    StoragePtr sa = a.storage(), sb = b.storage(), so = result.storage();
    current_tape().record(result, [sa, sb, so] {
      for (std::size_t i = 0; i < so->grad.size(); ++i) {
        if (sa->requires_grad) sa->grad[i] += so->grad[i] * sb->data[i];
        if (sb->requires_grad) sb->grad[i] += so->grad[i] * sa->data[i];
      }
    });
  }
  return result;
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.dim() != 1 || bias.numel() != x.cols()) {
    throw DimensionError("add_bias: bias " + bias.shape_string() +
                         " does not match " + x.shape_string());
  }
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias[j];
  }
  const bool track = tracks({&x, &bias});
  Tensor result = make_output(x.shape(), std::move(out), track);
  if (track) {
    StoragePtr sx = x.storage(), sb = bias.storage(), so = result.storage();
    current_tape().record(result, [sx, sb, so, m, n] {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double g = so->grad[i * n + j];
          if (sx->requires_grad) sx->grad[i * n + j] += g;
          if (sb->requires_grad) sb->grad[j] += g;
        }
      }
    });
  }
  return result;
}

// --- reductions and normalisation -------------------------------------------

Tensor softmax_rows(const Tensor& x) { return softmax_rows(x, x.cols()); }

Tensor softmax_rows(const Tensor& x, std::size_t valid_cols) {
  const std::size_t m = x.rows(), n = x.cols();
  if (valid_cols == 0) {
    throw EmptySequenceError("softmax over zero valid columns");
  }
  if (valid_cols > n) {
    throw ContractError("softmax: valid_cols " + std::to_string(valid_cols) +
                        " exceeds width " + std::to_string(n));
  }
  std::vector<double> out(m * n, 0.0);
  auto in = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = in.data() + i * n;
    double* yi = out.data() + i * n;
    const double mx = *std::max_element(xi, xi + valid_cols);
    double z = 0.0;
    for (std::size_t j = 0; j < valid_cols; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      z += yi[j];
    }
    for (std::size_t j = 0; j < valid_cols; ++j) yi[j] /= z;
  }
  const bool track = tracks({&x});
  Tensor result = make_output(x.shape(), std::move(out), track);
  if (track) {
    StoragePtr sx = x.storage(), so = result.storage();
    current_tape().record(result, [sx, so, m, n] {
      for (std::size_t i = 0; i < m; ++i) {
        const double* yi = so->data.data() + i * n;
        const double* gi = so->grad.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += yi[j] * gi[j];
        for (std::size_t j = 0; j < n; ++j) {
          sx->grad[i * n + j] += yi[j] * (gi[j] - dot);
        }
      }
    });
  }
  return result;
}

Tensor pool(const Tensor& x, PoolKind kind, std::size_t valid_len) {
  const std::size_t m = x.rows(), d = x.cols();
  if (valid_len == 0) throw EmptySequenceError("pool over an empty sequence");
  if (valid_len > m) {
    throw ContractError("pool: valid_len " + std::to_string(valid_len) +
                        " exceeds row count " + std::to_string(m));
  }
  auto in = x.data();
  std::vector<double> out(d);
  std::vector<std::size_t> argmax;
  if (kind == PoolKind::kMax) {
    argmax.assign(d, 0);
    for (std::size_t j = 0; j < d; ++j) out[j] = in[j];
    for (std::size_t i = 1; i < valid_len; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (in[i * d + j] > out[j]) {
          out[j] = in[i * d + j];
          argmax[j] = i;
        }
      }
    }
  } else {
    for (std::size_t i = 0; i < valid_len; ++i) {
      for (std::size_t j = 0; j < d; ++j) out[j] += in[i * d + j];
    }
    for (double& v : out) v /= static_cast<double>(valid_len);
  }
  const bool track = tracks({&x});
  Tensor result = make_output({d}, std::move(out), track);
  if (track) {
    StoragePtr sx = x.storage(), so = result.storage();
    current_tape().record(
        result, [sx, so, kind, valid_len, d, argmax = std::move(argmax)] {
          if (kind == PoolKind::kMax) {
            for (std::size_t j = 0; j < d; ++j) {
              sx->grad[argmax[j] * d + j] += so->grad[j];
            }
          } else {
            const double w = 1.0 / static_cast<double>(valid_len);
            for (std::size_t i = 0; i < valid_len; ++i) {
              for (std::size_t j = 0; j < d; ++j) {
                sx->grad[i * d + j] += so->grad[j] * w;
              }
            }
          }
        });
  }
  return result;
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  const bool track = tracks({&x});
  Tensor result = make_output({1}, {total}, track);
  if (track) {
    StoragePtr sx = x.storage(), so = result.storage();
    current_tape().record(result, [sx, so] {
      for (double& g : sx->grad) g += so->grad[0];
    });
  }
  return result;
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.numel() != n || beta.numel() != n) {
    throw DimensionError("layer_norm: gain/bias width does not match " +
                         x.shape_string());
  }
  auto in = x.data();
  std::vector<double> xhat(m * n), inv_std(m), out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = in.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xi[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (xi[j] - mu) * inv_std[i];
      out[i * n + j] = xhat[i * n + j] * gamma[j] + beta[j];
    }
  }
  const bool track = tracks({&x, &gamma, &beta});
  Tensor result = make_output(x.shape(), std::move(out), track);
  if (track) {
    StoragePtr sx = x.storage(), sg = gamma.storage(), sb = beta.storage(),
               so = result.storage();
    current_tape().record(result, [sx, sg, sb, so, m, n,
                                   xhat = std::move(xhat),
                                   inv_std = std::move(inv_std)] {
      std::vector<double> dxhat(n);
      for (std::size_t i = 0; i < m; ++i) {
        const double* gi = so->grad.data() + i * n;
        const double* hi = xhat.data() + i * n;
        double mean_d = 0.0, mean_dh = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (sg->requires_grad) sg->grad[j] += gi[j] * hi[j];
          if (sb->requires_grad) sb->grad[j] += gi[j];
          dxhat[j] = gi[j] * sg->data[j];
          mean_d += dxhat[j];
          mean_dh += dxhat[j] * hi[j];
        }
        if (!sx->requires_grad) continue;
        mean_d /= static_cast<double>(n);
        mean_dh /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
          sx->grad[i * n + j] +=
              inv_std[i] * (dxhat[j] - mean_d - hi[j] * mean_dh);
        }
      }
    });
  }
  return result;
}

Tensor cross_entropy(const Tensor& scores, std::size_t target) {
  if (scores.dim() != 1) {
    throw DimensionError("cross_entropy needs a 1-D score vector, got " +
                         scores.shape_string());
  }
  const std::size_t k = scores.numel();
  if (target >= k) {
    throw ContractError("cross_entropy: target " + std::to_string(target) +
                        " out of range for " + std::to_string(k) + " scores");
  }
  auto s = scores.data();
  const double mx = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double v : s) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  const bool track = tracks({&scores});
  Tensor result = make_output({1}, {lse - s[target]}, track);
  if (track) {
    StoragePtr ss = scores.storage(), so = result.storage();
    current_tape().record(result, [ss, so, target, lse] {
      const double g = so->grad[0];
      for (std::size_t i = 0; i < ss->data.size(); ++i) {
        const double p = std::exp(ss->data[i] - lse);
        ss->grad[i] += g * (p - (i == target ? 1.0 : 0.0));
      }
    });
  }
  return result;
}

// --- structural ------------------------------------------------------------

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const std::size_t rank = parts[0].dim();
  for (const Tensor& p : parts) {
    if (p.dim() != rank) {
      throw DimensionError("concat: mixed ranks " + parts[0].shape_string() +
                           " and " + p.shape_string());
    }
  }
  if (axis > 1 || (rank == 1 && axis != 0)) {
    throw DimensionError("concat: bad axis " + std::to_string(axis) +
                         " for rank " + std::to_string(rank));
  }
  // Row-major layout makes 1-D and axis-0 concatenation a plain append.
  const bool append = rank == 1 || axis == 0;
  const std::size_t rows = parts[0].rows();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (rank == 2 && axis == 0 && p.cols() != parts[0].cols()) {
      throw DimensionError("concat rows: widths differ " +
                           parts[0].shape_string() + " vs " + p.shape_string());
    }
    if (rank == 2 && axis == 1 && p.rows() != rows) {
      throw DimensionError("concat cols: heights differ " +
                           parts[0].shape_string() + " vs " + p.shape_string());
    }
    total += rank == 1 ? p.numel() : (axis == 0 ? p.rows() : p.cols());
  }

  std::vector<double> out;
  Shape shape;
  if (append) {
    for (const Tensor& p : parts) {
      out.insert(out.end(), p.data().begin(), p.data().end());
    }
    shape = rank == 1 ? Shape{total} : Shape{total, parts[0].cols()};
  } else {
    out.resize(rows * total);
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
      const std::size_t w = p.cols();
      for (std::size_t i = 0; i < rows; ++i) {
        std::copy_n(p.data().data() + i * w, w,
                    out.data() + i * total + offset);
      }
      offset += w;
    }
    shape = {rows, total};
  }

  bool track = false;
  if (grad_enabled()) {
    for (const Tensor& p : parts) track = track || p.requires_grad();
  }
  Tensor result = make_output(std::move(shape), std::move(out), track);
  if (track) {
    std::vector<StoragePtr> sp;
    for (const Tensor& p : parts) sp.push_back(p.storage());
    StoragePtr so = result.storage();
    current_tape().record(result, [sp = std::move(sp), so, append, rows,
                                   total] {
      std::size_t offset = 0;
      for (const StoragePtr& s : sp) {
        if (append) {
          if (s->requires_grad) {
            for (std::size_t i = 0; i < s->grad.size(); ++i) {
              s->grad[i] += so->grad[offset + i];
            }
          }
          offset += s->data.size();
        } else {
          const std::size_t w = s->shape[1];
          if (s->requires_grad) {
            for (std::size_t i = 0; i < rows; ++i) {
              for (std::size_t j = 0; j < w; ++j) {
                s->grad[i * w + j] += so->grad[i * total + offset + j];
              }
            }
          }
          offset += w;
        }
      }
    });
  }
  return result;
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor stack(std::span<const Tensor> rows) {
  if (rows.empty()) throw DimensionError("stack of zero tensors");
  for (const Tensor& r : rows) {
    if (r.dim() != 1 || r.numel() != rows[0].numel()) {
      throw DimensionError("stack: expected 1-D rows like " +
                           rows[0].shape_string() + ", got " +
                           r.shape_string());
    }
  }
  const std::size_t n = rows[0].numel();
  Tensor flat = concat(rows, 0);
  return reshape(flat, {rows.size(), n});
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  if (x.dim() != 2 || begin + count > x.rows() || count == 0) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + ", +" +
                         std::to_string(count) + ") out of " +
                         x.shape_string());
  }
  const std::size_t n = x.cols();
  std::vector<double> out(x.data().begin() + begin * n,
                          x.data().begin() + (begin + count) * n);
  const bool track = tracks({&x});
  Tensor result = make_output({count, n}, std::move(out), track);
  if (track) {
    StoragePtr sx = x.storage(), so = result.storage();
    current_tape().record(result, [sx, so, begin, n] {
      for (std::size_t i = 0; i < so->grad.size(); ++i) {
        sx->grad[begin * n + i] += so->grad[i];
      }
    });
  }
  return result;
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  if (x.dim() != 2 || begin + count > x.cols() || count == 0) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + ", +" +
                         std::to_string(count) + ") out of " +
                         x.shape_string());
  }
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * count);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(x.data().data() + i * n + begin, count,
                out.data() + i * count);
  }
  const bool track = tracks({&x});
  Tensor result = make_output({m, count}, std::move(out), track);
  if (track) {
    StoragePtr sx = x.storage(), so = result.storage();
    current_tape().record(result, [sx, so, begin, count, m, n] {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < count; ++j) {
          sx->grad[i * n + begin + j] += so->grad[i * count + j];
        }
      }
    });
  }
  return result;
}

Tensor row(const Tensor& x, std::size_t i) {
  return reshape(slice_rows(x, i, 1), {x.cols()});
}

Tensor reshape(const Tensor& x, Shape shape) {
  check_rank(shape);
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape " + x.shape_string() + " to " +
                         shape_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const bool track = tracks({&x});
  Tensor result = make_output(std::move(shape), std::move(out), track);
  if (track) {
    StoragePtr sx = x.storage(), so = result.storage();
    current_tape().record(result, [sx, so] {
      for (std::size_t i = 0; i < so->grad.size(); ++i) {
        sx->grad[i] += so->grad[i];
      }
    });
  }
  return result;
}

Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids) {
  if (table.dim() != 2) {
    throw DimensionError("embedding table must be 2-D, got " +
                         table.shape_string());
  }
  if (ids.empty()) throw EmptySequenceError("embedding lookup of zero ids");
  const std::size_t n = table.cols();
  std::vector<double> out(ids.size() * n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows()) {
      throw DimensionError("embedding id " + std::to_string(ids[i]) +
                           " outside table " + table.shape_string());
    }
    std::copy_n(table.data().data() + ids[i] * n, n, out.data() + i * n);
  }
  const bool track = tracks({&table});
  Tensor result = make_output({ids.size(), n}, std::move(out), track);
  if (track) {
    StoragePtr st = table.storage(), so = result.storage();
    std::vector<std::int32_t> idv(ids.begin(), ids.end());
    current_tape().record(result, [st, so, n, idv = std::move(idv)] {
      for (std::size_t i = 0; i < idv.size(); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          st->grad[idv[i] * n + j] += so->grad[i * n + j];
        }
      }
    });
  }
  return result;
}

}  // namespace kdrank
