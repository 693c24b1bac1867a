// SPDX-License-Identifier: Apache-2.0
//
// Trajectory-stream and image-stream encoders.
//
// Both produce time-major feature sequences of width d on their own frame
// clock: ceil(T / 8) trajectory frames, W / 8 image columns. Trajectory
// frames also carry their position in rendered-pixel space, which is what
// ties the two clocks together for alignment.

#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "olhtr/config.hpp"
#include "olhtr/data/trajectory.hpp"
#include "olhtr/nn/layers.hpp"

namespace olhtr {

using ad::Tensor;

template <typename T>
struct FeatureSequence {
  Tensor<T> values;                               // [frames, d]
  std::vector<std::array<double, 2>> positions;  // (px, py) per frame; trajectory stream only

  std::size_t frames() const { return values.dim(0); }
  std::size_t width() const { return values.dim(1); }
  bool has_positions() const { return !positions.empty(); }
};

// Conv input for a normalised sequence: rows (px / 32, py / 32, s), right
// padded by repeating the last point up to a multiple of 8 (at least 8),
// together with the mean (px, py) of every 8-point window.
template <typename T>
std::pair<Tensor<T>, std::vector<std::array<double, 2>>> trajectory_input(const data::TrajectorySequence& seq);

template <typename T>
class TrajectoryConvEncoder {
 public:
  TrajectoryConvEncoder() = default;
  TrajectoryConvEncoder(const EncoderConfig& cfg, nn::ParamInit& init);

  FeatureSequence<T> operator()(const data::TrajectorySequence& seq) const;
  // Conv stack on an already prepared [length, 3] input.
  Tensor<T> forward(const Tensor<T>& input) const;
  void collect(ad::ParamList<T>& out, const std::string& prefix) const;

 private:
  std::vector<nn::Conv1dLayer<T>> layers_;
};

template <typename T>
struct ResidualBlock {
  nn::Conv2dLayer<T> conv_a;
  nn::Conv2dLayer<T> conv_b;
  std::optional<nn::Conv2dLayer<T>> projection;  // 1x1 when the shape changes

  ResidualBlock() = default;
  ResidualBlock(std::size_t in, std::size_t out, std::array<std::size_t, 2> stride, nn::ParamInit& init);

  Tensor<T> operator()(const Tensor<T>& x) const;
  void collect(ad::ParamList<T>& out, const std::string& prefix) const;
};

// Residual CNN with total stride (32, 8): a 32-row image collapses to one
// row, then each column becomes a frame, layer-normalised over channels.
template <typename T>
class ImageConvEncoder {
 public:
  ImageConvEncoder() = default;
  ImageConvEncoder(const EncoderConfig& cfg, nn::ParamInit& init);

  // [1, 32, W] -> [W / 8, d]
  Tensor<T> operator()(const data::RenderedImage& image) const;
  Tensor<T> forward(const Tensor<T>& image) const;
  void collect(ad::ParamList<T>& out, const std::string& prefix) const;

 private:
  nn::Conv2dLayer<T> stem_;
  std::vector<ResidualBlock<T>> blocks_;
  nn::LayerNorm<T> norm_;  // per frame, keeps the alignment target on a fixed scale
};

template <typename T>
Tensor<T> image_tensor(const data::RenderedImage& image);

// Image stream encoder: returns (conv features, BiGRU features).
template <typename T>
struct ImageEncoder {
  ImageConvEncoder<T> cnn;
  nn::BiGru<T> gru;

  ImageEncoder() = default;
  ImageEncoder(const EncoderConfig& cfg, nn::ParamInit& init);

  std::pair<FeatureSequence<T>, FeatureSequence<T>> operator()(const data::RenderedImage& image) const;
  void collect(ad::ParamList<T>& out, const std::string& prefix) const;
};

// BiGRU stack over a feature sequence; positions pass through.
template <typename T>
FeatureSequence<T> encode_bigru(const FeatureSequence<T>& feat, const nn::BiGru<T>& gru);

}  // namespace olhtr
