// SPDX-License-Identifier: Apache-2.0
//
// Differentiable kernels. All layouts are row-major; feature sequences are
// time-major (frames x width). The only broadcast supported is a bias over
// the trailing axis.

#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "olhtr/autodiff/tensor.hpp"

namespace olhtr::ad {

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
// a[..., n] + bias[n]
template <typename T> Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias);

// 2-D product with optional transposition of either operand.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a = false,
                 bool transpose_b = false);

// x: [length, in_channels], weight: [kernel, in_channels, out_channels],
// bias: [out_channels] -> [floor((length + 2 pad - kernel) / stride) + 1, out_channels]
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t pad);

// x: [in_channels, height, width], weight: [out_channels, in_channels, kh, kw],
// bias: [out_channels] -> [out_channels, out_h, out_w]. stride/pad are (h, w).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::array<std::size_t, 2> stride, std::array<std::size_t, 2> pad);

template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);
template <typename T> Tensor<T> relu(const Tensor<T>& x);
template <typename T> Tensor<T> softmax(const Tensor<T>& x);  // last axis

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);

// Rows of table[vocab, width] selected by ids -> [ids.size(), width].
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, const std::vector<int>& ids);

// Linear interpolation along axis 0 of x[rows, width] at fractional row
// coordinates. Coordinates are clamped to [0, rows - 1] and are constants.
template <typename T>
Tensor<T> interp_rows(const Tensor<T>& x, const std::vector<double>& coords);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);

// Mean over rows of -log softmax(logits[row])[target[row]].
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& targets);

// Mean over elements of (a - b)^2.
template <typename T> Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b);

// Structural helpers.
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end);
template <typename T> Tensor<T> transpose(const Tensor<T>& x);  // 2-D
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// Same values, no backward record: gradients never reach x through the result.
template <typename T> Tensor<T> stop_gradient(const Tensor<T>& x);

}  // namespace olhtr::ad
