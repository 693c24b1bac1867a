// SPDX-License-Identifier: Apache-2.0

#include "olhtr/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace olhtr::ad {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

[[noreturn]] void shape_error(const char* kernel, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(kernel) + ": shape mismatch " + shape_str(a) + " vs " +
                              shape_str(b));
}

[[noreturn]] void arg_error(const char* kernel, const std::string& what) {
  throw std::invalid_argument(std::string(kernel) + ": " + what);
}

template <typename T>
void check_finite(const char* kernel, const Tensor<T>& x) {
  if (!validation_mode()) return;
  for (T v : x.data()) {
    if (!std::isfinite(v)) arg_error(kernel, "non-finite input");
  }
}

template <typename T>
void require_rank(const char* kernel, const Tensor<T>& x, std::size_t rank) {
  if (x.rank() != rank) {
    arg_error(kernel, "expected rank " + std::to_string(rank) + ", got shape " + shape_str(x.shape()));
  }
}

template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> value, std::vector<NodePtr<T>> parents,
                      std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool needs = grad_mode_enabled() &&
               std::any_of(parents.begin(), parents.end(), [](const NodePtr<T>& p) { return p->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
bool wants(const NodePtr<T>& p) {
  return p->requires_grad;
}

// c[m, n] (+)= a[m, k] * b[k, n]
template <typename T>
void gemm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
std::vector<T> transposed(const T* x, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = x[i * cols + j];
  return out;
}

template <typename T, typename F, typename G>
Tensor<T> unary(const char* op, const Tensor<T>& x, F forward, G derivative_from_output) {
  check_finite(op, x);
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  return make_result<T>(op, x.shape(), std::move(out), {x.shared()}, [derivative_from_output](Node<T>& self) {
    auto& p = self.parents[0];
    auto& g = p->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * derivative_from_output(p->value[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  check_finite("add", a);
  check_finite("add", b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_result<T>("add", a.shape(), std::move(out), {a.shared(), b.shared()}, [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (!wants(p)) continue;
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  check_finite("sub", a);
  check_finite("sub", b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result<T>("sub", a.shape(), std::move(out), {a.shared(), b.shared()}, [](Node<T>& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto& p = self.parents[k];
      if (!wants(p)) continue;
      const T sign = k == 0 ? T(1) : T(-1);
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  check_finite("mul", a);
  check_finite("mul", b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_result<T>("mul", a.shape(), std::move(out), {a.shared(), b.shared()}, [](Node<T>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants(pa)) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (wants(pb)) {
      auto& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  check_finite("scale", a);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  return make_result<T>("scale", a.shape(), std::move(out), {a.shared()}, [factor](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias) {
  if (bias.rank() != 1 || a.rank() == 0 || a.shape().back() != bias.dim(0))
    shape_error("add_bias", a.shape(), bias.shape());
  check_finite("add_bias", a);
  check_finite("add_bias", bias);
  const std::size_t n = bias.dim(0);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + bias[i % n];
  return make_result<T>("add_bias", a.shape(), std::move(out), {a.shared(), bias.shared()}, [n](Node<T>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants(pa)) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(pb)) {
      auto& g = pb->grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % n] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a, bool transpose_b) {
  if (a.rank() != 2 || b.rank() != 2) shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = transpose_a ? a.dim(1) : a.dim(0);
  const std::size_t k = transpose_a ? a.dim(0) : a.dim(1);
  const std::size_t kb = transpose_b ? b.dim(1) : b.dim(0);
  const std::size_t n = transpose_b ? b.dim(0) : b.dim(1);
  if (k != kb) shape_error("matmul", a.shape(), b.shape());
  check_finite("matmul", a);
  check_finite("matmul", b);

  std::vector<T> lhs = transpose_a ? transposed(a.data().data(), a.dim(0), a.dim(1))
                                   : std::vector<T>(a.data().begin(), a.data().end());
  std::vector<T> rhs = transpose_b ? transposed(b.data().data(), b.dim(0), b.dim(1))
                                   : std::vector<T>(b.data().begin(), b.data().end());
  std::vector<T> out(m * n);
  gemm(lhs.data(), rhs.data(), out.data(), m, k, n, false);

  return make_result<T>(
      "matmul", {m, n}, std::move(out), {a.shared(), b.shared()},
      [lhs = std::move(lhs), rhs = std::move(rhs), m, k, n, transpose_a, transpose_b](Node<T>& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (wants(pa)) {
          // d(lhs) = dC * rhs^T, shape [m, k]
          std::vector<T> rhs_t = transposed(rhs.data(), k, n);
          std::vector<T> dl(m * k);
          gemm(self.grad.data(), rhs_t.data(), dl.data(), m, n, k, false);
          auto& g = pa->grad_buffer();
          if (transpose_a) {
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t j = 0; j < k; ++j) g[j * m + i] += dl[i * k + j];
          } else {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += dl[i];
          }
        }
        if (wants(pb)) {
          // d(rhs) = lhs^T * dC, shape [k, n]
          std::vector<T> lhs_t = transposed(lhs.data(), m, k);
          std::vector<T> dr(k * n);
          gemm(lhs_t.data(), self.grad.data(), dr.data(), k, m, n, false);
          auto& g = pb->grad_buffer();
          if (transpose_b) {
            for (std::size_t i = 0; i < k; ++i)
              for (std::size_t j = 0; j < n; ++j) g[j * k + i] += dr[i * n + j];
          } else {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += dr[i];
          }
        }
      });
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t stride,
                 std::size_t pad) {
  require_rank("conv1d", x, 2);
  require_rank("conv1d", weight, 3);
  const std::size_t length = x.dim(0), cin = x.dim(1);
  const std::size_t kernel = weight.dim(0), cout = weight.dim(2);
  if (weight.dim(1) != cin) shape_error("conv1d", x.shape(), weight.shape());
  if (bias.rank() != 1 || bias.dim(0) != cout) shape_error("conv1d", weight.shape(), bias.shape());
  if (stride == 0) arg_error("conv1d", "stride must be positive");
  if (length + 2 * pad < kernel) arg_error("conv1d", "input shorter than kernel");
  check_finite("conv1d", x);
  check_finite("conv1d", weight);
  check_finite("conv1d", bias);

  const std::size_t out_len = (length + 2 * pad - kernel) / stride + 1;
  const std::size_t patch = kernel * cin;
  // cols[o, k * cin + c] = x[o * stride + k - pad, c]
  std::vector<T> cols(out_len * patch, T(0));
  auto xv = x.data();
  for (std::size_t o = 0; o < out_len; ++o) {
    for (std::size_t k = 0; k < kernel; ++k) {
      const long src = static_cast<long>(o * stride + k) - static_cast<long>(pad);
      if (src < 0 || src >= static_cast<long>(length)) continue;
      std::copy_n(xv.data() + src * cin, cin, cols.data() + o * patch + k * cin);
    }
  }
  std::vector<T> out(out_len * cout);
  gemm(cols.data(), weight.data().data(), out.data(), out_len, patch, cout, false);
  for (std::size_t o = 0; o < out_len; ++o)
    for (std::size_t c = 0; c < cout; ++c) out[o * cout + c] += bias[c];

  return make_result<T>(
      "conv1d", {out_len, cout}, std::move(out), {x.shared(), weight.shared(), bias.shared()},
      [cols = std::move(cols), length, cin, kernel, cout, out_len, patch, stride, pad](Node<T>& self) {
        auto& px = self.parents[0];
        auto& pw = self.parents[1];
        auto& pb = self.parents[2];
        if (wants(pw)) {
          std::vector<T> cols_t = transposed(cols.data(), out_len, patch);
          gemm(cols_t.data(), self.grad.data(), pw->grad_buffer().data(), patch, out_len, cout, true);
        }
        if (wants(pb)) {
          auto& g = pb->grad_buffer();
          for (std::size_t o = 0; o < out_len; ++o)
            for (std::size_t c = 0; c < cout; ++c) g[c] += self.grad[o * cout + c];
        }
        if (wants(px)) {
          std::vector<T> w_t = transposed(pw->value.data(), patch, cout);
          std::vector<T> dcols(out_len * patch);
          gemm(self.grad.data(), w_t.data(), dcols.data(), out_len, cout, patch, false);
          auto& g = px->grad_buffer();
          for (std::size_t o = 0; o < out_len; ++o) {
            for (std::size_t k = 0; k < kernel; ++k) {
              const long src = static_cast<long>(o * stride + k) - static_cast<long>(pad);
              if (src < 0 || src >= static_cast<long>(length)) continue;
              const T* d = dcols.data() + o * patch + k * cin;
              T* dst = g.data() + src * cin;
              for (std::size_t c = 0; c < cin; ++c) dst[c] += d[c];
            }
          }
        }
      });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::array<std::size_t, 2> stride, std::array<std::size_t, 2> pad) {
  require_rank("conv2d", x, 3);
  require_rank("conv2d", weight, 4);
  const std::size_t cin = x.dim(0), height = x.dim(1), width = x.dim(2);
  const std::size_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != cin) shape_error("conv2d", x.shape(), weight.shape());
  if (bias.rank() != 1 || bias.dim(0) != cout) shape_error("conv2d", weight.shape(), bias.shape());
  if (stride[0] == 0 || stride[1] == 0) arg_error("conv2d", "stride must be positive");
  if (height + 2 * pad[0] < kh || width + 2 * pad[1] < kw) arg_error("conv2d", "input smaller than kernel");
  check_finite("conv2d", x);
  check_finite("conv2d", weight);
  check_finite("conv2d", bias);

  const std::size_t out_h = (height + 2 * pad[0] - kh) / stride[0] + 1;
  const std::size_t out_w = (width + 2 * pad[1] - kw) / stride[1] + 1;
  const std::size_t patch = cin * kh * kw;
  const std::size_t pixels = out_h * out_w;

  // cols[(c, i, j), (oh, ow)] = x[c, oh * sh + i - ph, ow * sw + j - pw]
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t i = 0; i < kh; ++i)
        for (std::size_t j = 0; j < kw; ++j) {
          const std::size_t row = (c * kh + i) * kw + j;
          for (std::size_t oh = 0; oh < out_h; ++oh) {
            const long ih = static_cast<long>(oh * stride[0] + i) - static_cast<long>(pad[0]);
            if (ih < 0 || ih >= static_cast<long>(height)) continue;
            for (std::size_t ow = 0; ow < out_w; ++ow) {
              const long iw = static_cast<long>(ow * stride[1] + j) - static_cast<long>(pad[1]);
              if (iw < 0 || iw >= static_cast<long>(width)) continue;
              fn(row * pixels + oh * out_w + ow, (c * height + ih) * width + iw);
            }
          }
        }
  };

  std::vector<T> cols(patch * pixels, T(0));
  auto xv = x.data();
  for_each_tap([&](std::size_t col_idx, std::size_t x_idx) { cols[col_idx] = xv[x_idx]; });

  std::vector<T> out(cout * pixels);
  gemm(weight.data().data(), cols.data(), out.data(), cout, patch, pixels, false);
  for (std::size_t c = 0; c < cout; ++c)
    for (std::size_t p = 0; p < pixels; ++p) out[c * pixels + p] += bias[c];

  return make_result<T>("conv2d", {cout, out_h, out_w}, std::move(out), {x.shared(), weight.shared(), bias.shared()},
                        [cols = std::move(cols), for_each_tap, cout, patch, pixels](Node<T>& self) {
                          auto& px = self.parents[0];
                          auto& pw = self.parents[1];
                          auto& pb = self.parents[2];
                          if (wants(pw)) {
                            std::vector<T> cols_t = transposed(cols.data(), patch, pixels);
                            gemm(self.grad.data(), cols_t.data(), pw->grad_buffer().data(), cout, pixels, patch, true);
                          }
                          if (wants(pb)) {
                            auto& g = pb->grad_buffer();
                            for (std::size_t c = 0; c < cout; ++c)
                              for (std::size_t p = 0; p < pixels; ++p) g[c] += self.grad[c * pixels + p];
                          }
                          if (wants(px)) {
                            std::vector<T> w_t = transposed(pw->value.data(), cout, patch);
                            std::vector<T> dcols(patch * pixels);
                            gemm(w_t.data(), self.grad.data(), dcols.data(), patch, cout, pixels, false);
                            auto& g = px->grad_buffer();
                            for_each_tap([&](std::size_t col_idx, std::size_t x_idx) { g[x_idx] += dcols[col_idx]; });
                          }
                        });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary<T>(
      "sigmoid", x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary<T>("tanh", x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary<T>(
      "relu", x, [](T v) { return v < T(0) ? T(0) : v; }, [](T in, T) { return in > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (x.rank() == 0) arg_error("softmax", "rank-0 input");
  check_finite("softmax", x);
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.numel() / n;
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = in.data() + r * n;
    T* dst = out.data() + r * n;
    const T mx = *std::max_element(src, src + n);
    T total = 0;
    for (std::size_t j = 0; j < n; ++j) total += dst[j] = std::exp(src[j] - mx);
    for (std::size_t j = 0; j < n; ++j) dst[j] /= total;
  }
  return make_result<T>("softmax", x.shape(), std::move(out), {x.shared()}, [n, rows](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.value.data() + r * n;
      const T* dy = self.grad.data() + r * n;
      T dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) g[r * n + j] += y[j] * (dy[j] - dot);
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  if (x.rank() == 0) arg_error("layer_norm", "rank-0 input");
  const std::size_t n = x.shape().back();
  if (gamma.shape() != Shape{n}) shape_error("layer_norm", x.shape(), gamma.shape());
  if (beta.shape() != Shape{n}) shape_error("layer_norm", x.shape(), beta.shape());
  check_finite("layer_norm", x);
  check_finite("layer_norm", gamma);
  check_finite("layer_norm", beta);
  const std::size_t rows = x.numel() / n;
  std::vector<T> xhat(x.numel()), inv_std(rows), out(x.numel());
  auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = in.data() + r * n;
    T mu = 0;
    for (std::size_t j = 0; j < n; ++j) mu += src[j];
    mu /= T(n);
    T var = 0;
    for (std::size_t j = 0; j < n; ++j) var += (src[j] - mu) * (src[j] - mu);
    var /= T(n);
    inv_std[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[r * n + j] = (src[j] - mu) * inv_std[r];
      out[r * n + j] = xhat[r * n + j] * gamma[j] + beta[j];
    }
  }
  return make_result<T>("layer_norm", x.shape(), std::move(out), {x.shared(), gamma.shared(), beta.shared()},
                        [xhat = std::move(xhat), inv_std = std::move(inv_std), n, rows](Node<T>& self) {
                          auto& px = self.parents[0];
                          auto& pg = self.parents[1];
                          auto& pb = self.parents[2];
                          const auto& dy = self.grad;
                          if (wants(pg)) {
                            auto& g = pg->grad_buffer();
                            for (std::size_t i = 0; i < dy.size(); ++i) g[i % n] += dy[i] * xhat[i];
                          }
                          if (wants(pb)) {
                            auto& g = pb->grad_buffer();
                            for (std::size_t i = 0; i < dy.size(); ++i) g[i % n] += dy[i];
                          }
                          if (wants(px)) {
                            auto& g = px->grad_buffer();
                            const auto& gamma = pg->value;
                            for (std::size_t r = 0; r < rows; ++r) {
                              T mean_d = 0, mean_dx = 0;
                              for (std::size_t j = 0; j < n; ++j) {
                                const T d = dy[r * n + j] * gamma[j];
                                mean_d += d;
                                mean_dx += d * xhat[r * n + j];
                              }
                              mean_d /= T(n);
                              mean_dx /= T(n);
                              for (std::size_t j = 0; j < n; ++j) {
                                const T d = dy[r * n + j] * gamma[j];
                                g[r * n + j] += inv_std[r] * (d - mean_d - xhat[r * n + j] * mean_dx);
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) arg_error("concat", "no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) arg_error("concat", "axis out of range for shape " + shape_str(first));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];

  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  std::vector<NodePtr<T>> parents;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) shape_error("concat", first, s);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != first[i]) shape_error("concat", first, s);
    check_finite("concat", p);
    widths.push_back(s[axis] * inner);
    out_shape[axis] += s[axis];
    parents.push_back(p.shared());
  }
  const std::size_t row = out_shape[axis] * inner;
  std::vector<T> out(outer * row);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto src = parts[k].data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(src.data() + o * widths[k], widths[k], out.data() + o * row + offset);
    offset += widths[k];
  }
  return make_result<T>("concat", std::move(out_shape), std::move(out), std::move(parents),
                        [widths = std::move(widths), outer, row](Node<T>& self) {
                          std::size_t offset = 0;
                          for (std::size_t k = 0; k < self.parents.size(); ++k) {
                            auto& p = self.parents[k];
                            if (wants(p)) {
                              auto& g = p->grad_buffer();
                              for (std::size_t o = 0; o < outer; ++o)
                                for (std::size_t j = 0; j < widths[k]; ++j)
                                  g[o * widths[k] + j] += self.grad[o * row + offset + j];
                            }
                            offset += widths[k];
                          }
                        });
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, const std::vector<int>& ids) {
  require_rank("embedding", table, 2);
  check_finite("embedding", table);
  const std::size_t vocab = table.dim(0), width = table.dim(1);
  std::vector<T> out(ids.size() * width);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab)
      arg_error("embedding", "id " + std::to_string(ids[i]) + " outside table of " + std::to_string(vocab) + " rows");
    std::copy_n(table.data().data() + ids[i] * width, width, out.data() + i * width);
  }
  return make_result<T>("embedding", {ids.size(), width}, std::move(out), {table.shared()},
                        [ids, width](Node<T>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          for (std::size_t i = 0; i < ids.size(); ++i)
                            for (std::size_t j = 0; j < width; ++j) g[ids[i] * width + j] += self.grad[i * width + j];
                        });
}

template <typename T>
Tensor<T> interp_rows(const Tensor<T>& x, const std::vector<double>& coords) {
  require_rank("interp_rows", x, 2);
  check_finite("interp_rows", x);
  const std::size_t rows = x.dim(0), width = x.dim(1);
  if (rows == 0) arg_error("interp_rows", "empty input");
  struct Tap {
    std::size_t lo, hi;
    T frac;
  };
  std::vector<Tap> taps(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!std::isfinite(coords[i])) arg_error("interp_rows", "non-finite coordinate");
    const double c = std::clamp(coords[i], 0.0, static_cast<double>(rows - 1));
    auto lo = static_cast<std::size_t>(std::floor(c));
    if (lo >= rows - 1) {
      taps[i] = {rows - 1, rows - 1, T(0)};
    } else {
      taps[i] = {lo, lo + 1, static_cast<T>(c - static_cast<double>(lo))};
    }
  }
  std::vector<T> out(coords.size() * width);
  auto xv = x.data();
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const auto& t = taps[i];
    for (std::size_t j = 0; j < width; ++j)
      out[i * width + j] = (T(1) - t.frac) * xv[t.lo * width + j] + t.frac * xv[t.hi * width + j];
  }
  return make_result<T>("interp_rows", {coords.size(), width}, std::move(out), {x.shared()},
                        [taps = std::move(taps), width](Node<T>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          for (std::size_t i = 0; i < taps.size(); ++i) {
                            const auto& t = taps[i];
                            for (std::size_t j = 0; j < width; ++j) {
                              const T d = self.grad[i * width + j];
                              g[t.lo * width + j] += (T(1) - t.frac) * d;
                              g[t.hi * width + j] += t.frac * d;
                            }
                          }
                        });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  check_finite("sum", x);
  T total = 0;
  for (T v : x.data()) total += v;
  return make_result<T>("sum", {1}, {total}, {x.shared()}, [](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) arg_error("mean", "empty input");
  check_finite("mean", x);
  T total = 0;
  for (T v : x.data()) total += v;
  const T n = static_cast<T>(x.numel());
  return make_result<T>("mean", {1}, {total / n}, {x.shared()}, [n](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0] / n;
  });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& targets) {
  require_rank("cross_entropy", logits, 2);
  check_finite("cross_entropy", logits);
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (rows != targets.size() || rows == 0)
    arg_error("cross_entropy", "logits " + shape_str(logits.shape()) + " vs " + std::to_string(targets.size()) +
                                   " targets");
  std::vector<T> probs(logits.numel());
  T loss = 0;
  auto in = logits.data();
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= classes)
      arg_error("cross_entropy", "target " + std::to_string(targets[r]) + " outside " + std::to_string(classes) +
                                     " classes");
    const T* src = in.data() + r * classes;
    const T mx = *std::max_element(src, src + classes);
    T total = 0;
    for (std::size_t j = 0; j < classes; ++j) total += probs[r * classes + j] = std::exp(src[j] - mx);
    for (std::size_t j = 0; j < classes; ++j) probs[r * classes + j] /= total;
    loss += mx + std::log(total) - src[targets[r]];
  }
  loss /= T(rows);
  return make_result<T>("cross_entropy", {1}, {loss}, {logits.shared()},
                        [probs = std::move(probs), targets, rows, classes](Node<T>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          const T scale_by = self.grad[0] / T(rows);
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t j = 0; j < classes; ++j) {
                              const T onehot = static_cast<int>(j) == targets[r] ? T(1) : T(0);
                              g[r * classes + j] += scale_by * (probs[r * classes + j] - onehot);
                            }
                        });
}

template <typename T>
Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("mse", a.shape(), b.shape());
  if (a.numel() == 0) arg_error("mse", "empty input");
  check_finite("mse", a);
  check_finite("mse", b);
  T total = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  const T n = static_cast<T>(a.numel());
  return make_result<T>("mse", {1}, {total / n}, {a.shared(), b.shared()}, [n](Node<T>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    const T k = T(2) * self.grad[0] / n;
    if (wants(pa)) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * (pa->value[i] - pb->value[i]);
    }
    if (wants(pb)) {
      auto& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= k * (pa->value[i] - pb->value[i]);
    }
  });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = x.shape();
  if (axis >= s.size()) arg_error("slice", "axis out of range for shape " + shape_str(s));
  if (begin > end || end > s[axis]) arg_error("slice", "range out of bounds for shape " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t src_row = s[axis] * inner, dst_row = (end - begin) * inner, off = begin * inner;
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  std::vector<T> out(outer * dst_row);
  auto xv = x.data();
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(xv.data() + o * src_row + off, dst_row, out.data() + o * dst_row);
  return make_result<T>("slice", std::move(out_shape), std::move(out), {x.shared()},
                        [outer, src_row, dst_row, off](Node<T>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          for (std::size_t o = 0; o < outer; ++o)
                            for (std::size_t j = 0; j < dst_row; ++j)
                              g[o * src_row + off + j] += self.grad[o * dst_row + j];
                        });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_rank("transpose", x, 2);
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  return make_result<T>("transpose", {cols, rows}, transposed(x.data().data(), rows, cols), {x.shared()},
                        [rows, cols](Node<T>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          for (std::size_t i = 0; i < rows; ++i)
                            for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += self.grad[j * rows + i];
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) shape_error("reshape", x.shape(), shape);
  return make_result<T>("reshape", std::move(shape), std::vector<T>(x.data().begin(), x.data().end()),
                        {x.shared()}, [](Node<T>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> stop_gradient(const Tensor<T>& x) {
  return Tensor<T>::from(x.shape(), std::vector<T>(x.data().begin(), x.data().end()), false);
}

#define OLHTR_INSTANTIATE(T)                                                                                  \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                 \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                                 \
  template Tensor<T> scale(const Tensor<T>&, T);                                                              \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, bool, bool);                                  \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t);  \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::array<std::size_t, 2>, \
                            std::array<std::size_t, 2>);                                                      \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                               \
  template Tensor<T> tanh(const Tensor<T>&);                                                                  \
  template Tensor<T> relu(const Tensor<T>&);                                                                  \
  template Tensor<T> softmax(const Tensor<T>&);                                                               \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                     \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                                      \
  template Tensor<T> embedding(const Tensor<T>&, const std::vector<int>&);                                    \
  template Tensor<T> interp_rows(const Tensor<T>&, const std::vector<double>&);                               \
  template Tensor<T> sum(const Tensor<T>&);                                                                   \
  template Tensor<T> mean(const Tensor<T>&);                                                                  \
  template Tensor<T> cross_entropy(const Tensor<T>&, const std::vector<int>&);                                \
  template Tensor<T> mse(const Tensor<T>&, const Tensor<T>&);                                                 \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);                          \
  template Tensor<T> transpose(const Tensor<T>&);                                                             \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                        \
  template Tensor<T> stop_gradient(const Tensor<T>&);

OLHTR_INSTANTIATE(float)
OLHTR_INSTANTIATE(double)

}  // namespace olhtr::ad
