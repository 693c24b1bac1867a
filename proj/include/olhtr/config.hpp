// SPDX-License-Identifier: Apache-2.0
//
// Model and training configuration. Defaults are the full-size recipe; the
// desk-scale runs shrink widths through the same fields. Every struct
// round-trips through JSON and rejects unknown keys.

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace olhtr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EncoderConfig {
  std::size_t d = 320;
  // Six 1-D conv layers; the last width must equal d. Empty -> 64,64,128,128,256,d.
  std::vector<std::size_t> conv1d_channels;
  std::vector<std::size_t> conv1d_strides{1, 2, 1, 2, 1, 2};
  std::size_t conv1d_kernel = 3;
  // 2-D residual CNN: stem width, then one entry per stage (last == d).
  // Empty -> 32,64,128,d.
  std::size_t cnn2d_stem = 32;
  std::vector<std::size_t> cnn2d_channels;
  // (height, width) strides for the stem followed by each stage.
  std::vector<std::array<std::size_t, 2>> cnn2d_strides{{2, 1}, {2, 2}, {2, 2}, {2, 2}, {2, 1}};
  std::size_t cnn2d_blocks = 1;  // residual blocks per stage; 2 gives the ResNet-18 layout
  std::size_t gru_layers = 2;

  // Fills derived defaults, then checks the stride and width contracts.
  void resolve();
};

struct P2saConfig {
  std::size_t layers = 3;
  std::size_t heads = 8;
  std::size_t ff_width = 0;  // 0 -> 2 d
  double rope_base = 10000.0;
  bool use_transformer = true;
  bool use_rope = true;
  bool use_align_loss = true;
  bool use_stop_gradient = true;

  // The module participates at all (ablation baseline has it absent).
  bool active() const { return use_transformer || use_rope || use_align_loss; }
  void resolve(std::size_t d);
};

struct DecoderConfig {
  std::size_t max_len = 256;
};

struct ModelConfig {
  EncoderConfig encoder;
  P2saConfig p2sa;
  DecoderConfig decoder;
  std::uint64_t seed = 0;

  void resolve();
};

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::size_t max_steps = 0;  // 0 -> epochs * batches
  double lr_max = 2e-4;
  double lr_min = 2e-7;
  double lambda = 2.0;
  bool augment = true;
  double augment_fraction = 0.20;
  double augment_magnitude = 1.0;
  double val_fraction = 0.10;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const P2saConfig& c);
void from_json(const nlohmann::json& j, P2saConfig& c);
void to_json(nlohmann::json& j, const DecoderConfig& c);
void from_json(const nlohmann::json& j, DecoderConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace olhtr
