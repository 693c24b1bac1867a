// SPDX-License-Identifier: Apache-2.0
//
// Parameterised building blocks shared by the encoders, the alignment module
// and the decoder. Every layer exposes its tensors through collect() under a
// dotted name prefix; names are what checkpoints and gradient audits key on.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "olhtr/autodiff/ops.hpp"
#include "olhtr/autodiff/optim.hpp"

namespace olhtr::nn {

using ad::ParamList;
using ad::Tensor;

// Deterministic uniform initialiser (same stream on every platform).
class ParamInit {
 public:
  explicit ParamInit(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  template <typename T>
  Tensor<T> tensor(ad::Shape shape, double bound) {
    std::vector<T> v(ad::shape_numel(shape));
    for (auto& x : v) x = static_cast<T>(uniform(-bound, bound));
    return Tensor<T>::from(std::move(shape), std::move(v), true);
  }

 private:
  std::mt19937_64 engine_;
};

template <typename T>
Tensor<T> parameter_zeros(ad::Shape shape) {
  return Tensor<T>::zeros(std::move(shape), true);
}

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]

  Linear() = default;
  Linear(std::size_t in, std::size_t out, ParamInit& init);

  Tensor<T> operator()(const Tensor<T>& x) const { return ad::add_bias(ad::matmul(x, weight), bias); }
  void collect(ParamList<T>& out, const std::string& prefix) const;
};

template <typename T>
struct Conv1dLayer {
  Tensor<T> weight;  // [kernel, in, out]
  Tensor<T> bias;
  std::size_t stride = 1;
  std::size_t pad = 0;

  Conv1dLayer() = default;
  Conv1dLayer(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride, std::size_t pad,
              ParamInit& init);

  Tensor<T> operator()(const Tensor<T>& x) const { return ad::conv1d(x, weight, bias, stride, pad); }
  void collect(ParamList<T>& out, const std::string& prefix) const;
};

template <typename T>
struct Conv2dLayer {
  Tensor<T> weight;  // [out, in, kh, kw]
  Tensor<T> bias;
  std::array<std::size_t, 2> stride{1, 1};
  std::array<std::size_t, 2> pad{0, 0};

  Conv2dLayer() = default;
  Conv2dLayer(std::size_t in, std::size_t out, std::size_t kernel, std::array<std::size_t, 2> stride,
              std::size_t pad, ParamInit& init);

  Tensor<T> operator()(const Tensor<T>& x) const { return ad::conv2d(x, weight, bias, stride, pad); }
  void collect(ParamList<T>& out, const std::string& prefix) const;
};

template <typename T>
struct LayerNorm {
  Tensor<T> gamma;
  Tensor<T> beta;

  LayerNorm() = default;
  explicit LayerNorm(std::size_t width);

  Tensor<T> operator()(const Tensor<T>& x) const { return ad::layer_norm(x, gamma, beta); }
  void collect(ParamList<T>& out, const std::string& prefix) const;
};

// Gate order along the 3H axis is (reset, update, candidate):
//   r = sigmoid(x Wr + br + h Ur + cr)
//   z = sigmoid(x Wz + bz + h Uz + cz)
//   n = tanh(x Wn + bn + r * (h Un + cn))
//   h' = n + z * (h - n)
template <typename T>
struct GruCell {
  Tensor<T> w_ih;  // [in, 3H]
  Tensor<T> w_hh;  // [H, 3H]
  Tensor<T> b_ih;  // [3H]
  Tensor<T> b_hh;  // [3H]
  std::size_t hidden = 0;

  GruCell() = default;
  GruCell(std::size_t in, std::size_t hidden, ParamInit& init);

  // x: [1, in], h: [1, H] -> [1, H]
  Tensor<T> step(const Tensor<T>& x, const Tensor<T>& h) const;
  // Same as step() with x W_ih + b_ih already computed: gates_x [1, 3H].
  Tensor<T> step_projected(const Tensor<T>& gates_x, const Tensor<T>& h) const;
  // Runs over x: [L, in] from a zero state; output rows stay in input order.
  Tensor<T> run(const Tensor<T>& x, bool reverse) const;
  void collect(ParamList<T>& out, const std::string& prefix) const;
};

// Stack of bidirectional GRU layers; each direction has hidden/2 units so the
// concatenated output keeps the input width.
template <typename T>
struct BiGru {
  std::vector<std::array<GruCell<T>, 2>> layers;

  BiGru() = default;
  BiGru(std::size_t width, std::size_t num_layers, ParamInit& init);

  Tensor<T> operator()(const Tensor<T>& x) const;
  void collect(ParamList<T>& out, const std::string& prefix) const;
};

}  // namespace olhtr::nn
