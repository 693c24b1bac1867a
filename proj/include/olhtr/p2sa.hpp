// SPDX-License-Identifier: Apache-2.0
//
// Point-to-spatial alignment: the trajectory conv features, tagged with a
// 2-D sinusoidal position code, go through a small self-attention stack
// whose output is pulled towards image conv features sampled at the same
// pen positions. At inference only the trajectory side runs.

#pragma once

#include <array>
#include <vector>

#include "olhtr/config.hpp"
#include "olhtr/encoders.hpp"
#include "olhtr/nn/layers.hpp"

namespace olhtr {

// [frames, d] code. Lanes [0, d/2) encode px and [d/2, d) encode py; within
// a half, lane pair j holds (cos, sin) of pos / base^(2j / (d/2)).
template <typename T>
Tensor<T> rope2d(const std::vector<std::array<double, 2>>& positions, std::size_t d, double base);

// Pre-norm encoder layer: x + MHA(LN(x)), then + FF(LN(.)) with a ReLU FF.
template <typename T>
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(std::size_t d, std::size_t heads, std::size_t ff_width, nn::ParamInit& init);

  // Per-head attention matrices [frames, frames] are appended to
  // `attention` when given.
  Tensor<T> operator()(const Tensor<T>& x, std::vector<Tensor<T>>* attention = nullptr) const;
  void collect(ad::ParamList<T>& out, const std::string& prefix) const;

  std::size_t heads() const { return heads_; }
  const nn::LayerNorm<T>& norm_attn() const { return norm_attn_; }
  const nn::LayerNorm<T>& norm_ff() const { return norm_ff_; }
  const nn::Linear<T>& value() const { return value_; }
  const nn::Linear<T>& output() const { return output_; }
  const nn::Linear<T>& ff_in() const { return ff_in_; }
  const nn::Linear<T>& ff_out() const { return ff_out_; }

 private:
  std::size_t heads_ = 1;
  nn::LayerNorm<T> norm_attn_;
  nn::Linear<T> query_, key_, value_, output_;
  nn::LayerNorm<T> norm_ff_;
  nn::Linear<T> ff_in_, ff_out_;
};

template <typename T>
class P2sa {
 public:
  P2sa() = default;
  P2sa(std::size_t d, const P2saConfig& cfg, nn::ParamInit& init);

  // F_pos = F_conv (+ position code); F_p2s = layers(F_pos), or F_pos itself
  // when the transformer is switched off.
  Tensor<T> operator()(const FeatureSequence<T>& f1d_conv, std::vector<Tensor<T>>* attention = nullptr) const;
  void collect(ad::ParamList<T>& out, const std::string& prefix) const;

  const std::vector<TransformerLayer<T>>& layers() const { return layers_; }

 private:
  P2saConfig cfg_;
  std::size_t d_ = 0;
  std::vector<TransformerLayer<T>> layers_;
};

// Image conv features at trajectory frame positions: column coordinate
// px / 8 clamped to [0, W/8 - 1], linear interpolation between neighbours.
template <typename T>
Tensor<T> sample_image_features(const Tensor<T>& f2d_conv, const std::vector<std::array<double, 2>>& positions);

// Mean squared error between the alignment output and the sampled image
// features; with stop_gradient the image side is a constant target.
template <typename T>
Tensor<T> align_loss(const Tensor<T>& f_p2s, const Tensor<T>& f2d_sample, bool stop_gradient);

// BiGRU(F_conv + F_p2s).
template <typename T>
FeatureSequence<T> merge(const FeatureSequence<T>& f1d_conv, const Tensor<T>& f_p2s, const nn::BiGru<T>& gru);

}  // namespace olhtr
