// SPDX-License-Identifier: Apache-2.0
//
// The two-stream recogniser. The trajectory stream (1-D encoder, alignment
// module, decoder) is the deployable model; the image stream (2-D encoder,
// decoder) exists only to supervise the alignment module during training.
//
// Parameter names are grouped by prefix:
//   enc1d.*  trajectory conv stack and BiGRU
//   p2sa.*   alignment transformer layers
//   dec1d.*  trajectory decoder
//   enc2d.*  image CNN and BiGRU
//   dec2d.*  image decoder

#pragma once

#include <string>
#include <vector>

#include "olhtr/config.hpp"
#include "olhtr/data/trajectory.hpp"
#include "olhtr/data/vocab.hpp"
#include "olhtr/decoder.hpp"
#include "olhtr/encoders.hpp"
#include "olhtr/p2sa.hpp"

namespace olhtr {

template <typename T>
struct TrajectoryForward {
  FeatureSequence<T> conv;  // F1d_conv
  Tensor<T> p2s;            // F_p2s, undefined when the module is absent
  FeatureSequence<T> encoded;
};

template <typename T>
struct TrajectoryStream {
  P2saConfig p2sa_cfg;
  std::size_t max_len = 256;
  TrajectoryConvEncoder<T> conv;
  nn::BiGru<T> gru;
  P2sa<T> p2sa;
  AttentionDecoder<T> decoder;

  TrajectoryStream() = default;
  // Parameters are drawn from cfg.seed, one stream per component so that
  // toggling one component leaves the others' initial values unchanged.
  TrajectoryStream(const ModelConfig& cfg, std::size_t vocab_size);

  // conv -> [alignment module -> merge] -> BiGRU
  TrajectoryForward<T> encode(const data::TrajectorySequence& normalized) const;
  std::vector<int> recognize(const data::TrajectorySequence& normalized) const;
  void collect(ad::ParamList<T>& out) const;
};

template <typename T>
struct ImageStream {
  ImageEncoder<T> encoder;
  AttentionDecoder<T> decoder;

  ImageStream() = default;
  ImageStream(const ModelConfig& cfg, std::size_t vocab_size);

  void collect(ad::ParamList<T>& out) const;
};

// Copies share parameter storage with the original.
template <typename T>
struct Model {
  ModelConfig config;
  data::Vocabulary vocab;
  TrajectoryStream<T> trajectory;
  ImageStream<T> image;

  Model() = default;
  // Resolves the config and initialises every parameter from config.seed.
  Model(ModelConfig cfg, data::Vocabulary vocab);

  // Trajectory stream first, then image stream; names are unique.
  ad::ParamList<T> parameters() const;
};

template <typename T>
struct LossBreakdown {
  Tensor<T> total;
  Tensor<T> traj;   // L_1d
  Tensor<T> image;  // L_2d
  Tensor<T> align;  // L_align (constant 0 when disabled)
};

// Losses of one normalised sample. `image` must be the rendering of `seq`.
template <typename T>
LossBreakdown<T> sample_losses(const Model<T>& model, const data::TrajectorySequence& seq,
                               const data::RenderedImage& image, double lambda);

// Batch mean of every component; total = L_1d + L_2d + lambda * L_align.
template <typename T>
LossBreakdown<T> total_loss(const Model<T>& model, const std::vector<data::TrajectorySequence>& batch,
                            double lambda);

// Single-stream inference on a raw (unnormalised) sequence. Only the
// trajectory stream is reachable from here.
std::string infer(const TrajectoryStream<float>& stream, const data::Vocabulary& vocab,
                  const data::TrajectorySequence& seq);

}  // namespace olhtr
