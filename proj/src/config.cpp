// SPDX-License-Identifier: Apache-2.0

#include "olhtr/config.hpp"

#include <algorithm>
#include <initializer_list>

namespace olhtr {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

template <typename V>
void read(const json& j, const char* key, V& out, const char* section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(section) + "." + key + ": " + e.what());
  }
}

std::size_t product(const std::vector<std::size_t>& v) {
  std::size_t p = 1;
  for (auto x : v) p *= x;
  return p;
}

}  // namespace

void EncoderConfig::resolve() {
  if (d == 0 || d % 4 != 0) throw ConfigError("encoder.d must be a positive multiple of 4");
  if (conv1d_channels.empty()) conv1d_channels = {64, 64, 128, 128, 256, d};
  if (cnn2d_channels.empty()) cnn2d_channels = {32, 64, 128, d};
  if (conv1d_channels.size() != conv1d_strides.size())
    throw ConfigError("encoder: conv1d_channels and conv1d_strides differ in length");
  if (product(conv1d_strides) != 8) throw ConfigError("encoder: conv1d strides must multiply to 8");
  if (conv1d_channels.back() != d) throw ConfigError("encoder: last conv1d width must equal d");
  if (conv1d_kernel == 0 || conv1d_kernel % 2 == 0) throw ConfigError("encoder: conv1d_kernel must be odd");
  if (cnn2d_strides.size() != cnn2d_channels.size() + 1)
    throw ConfigError("encoder: cnn2d_strides needs one entry for the stem plus one per stage");
  std::size_t sh = 1, sw = 1;
  for (const auto& s : cnn2d_strides) {
    sh *= s[0];
    sw *= s[1];
  }
  if (sh != 32 || sw != 8) throw ConfigError("encoder: cnn2d strides must multiply to (32, 8)");
  if (cnn2d_channels.back() != d) throw ConfigError("encoder: last cnn2d width must equal d");
  if (cnn2d_stem == 0 || cnn2d_blocks == 0 || gru_layers == 0)
    throw ConfigError("encoder: cnn2d_stem, cnn2d_blocks and gru_layers must be positive");
  for (auto c : conv1d_channels)
    if (c == 0) throw ConfigError("encoder: zero conv1d width");
  for (auto c : cnn2d_channels)
    if (c == 0) throw ConfigError("encoder: zero cnn2d width");
}

void P2saConfig::resolve(std::size_t d) {
  if (heads == 0 || d % (2 * heads) != 0) throw ConfigError("p2sa: d must be divisible by 2 * heads");
  if (d % 4 != 0) throw ConfigError("p2sa: d must be divisible by 4 for 2-D position lanes");
  if (ff_width == 0) ff_width = 2 * d;
  if (!(rope_base > 0.0)) throw ConfigError("p2sa: rope_base must be positive");
  if (use_transformer && layers == 0) throw ConfigError("p2sa: layers must be positive");
}

void ModelConfig::resolve() {
  encoder.resolve();
  p2sa.resolve(encoder.d);
  if (decoder.max_len == 0) throw ConfigError("decoder.max_len must be at least 1");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (epochs == 0) throw ConfigError("train.epochs must be positive");
  if (!(lr_min > 0.0) || lr_max < lr_min) throw ConfigError("train: need lr_max >= lr_min > 0");
  if (!(lambda >= 0.0)) throw ConfigError("train.lambda must be >= 0");
  if (augment_fraction < 0.0 || augment_fraction > 1.0) throw ConfigError("train.augment_fraction outside [0, 1]");
  if (augment_magnitude < 0.0) throw ConfigError("train.augment_magnitude must be >= 0");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("train.val_fraction outside [0, 1)");
  if (clip_norm < 0.0) throw ConfigError("train.clip_norm must be >= 0");
}

void to_json(json& j, const EncoderConfig& c) {
  j = json{{"d", c.d},
           {"conv1d_channels", c.conv1d_channels},
           {"conv1d_strides", c.conv1d_strides},
           {"conv1d_kernel", c.conv1d_kernel},
           {"cnn2d_stem", c.cnn2d_stem},
           {"cnn2d_channels", c.cnn2d_channels},
           {"cnn2d_strides", c.cnn2d_strides},
           {"cnn2d_blocks", c.cnn2d_blocks},
           {"gru_layers", c.gru_layers}};
}

void from_json(const json& j, EncoderConfig& c) {
  reject_unknown(j,
                 {"d", "conv1d_channels", "conv1d_strides", "conv1d_kernel", "cnn2d_stem", "cnn2d_channels",
                  "cnn2d_strides", "cnn2d_blocks", "gru_layers"},
                 "encoder");
  read(j, "d", c.d, "encoder");
  read(j, "conv1d_channels", c.conv1d_channels, "encoder");
  read(j, "conv1d_strides", c.conv1d_strides, "encoder");
  read(j, "conv1d_kernel", c.conv1d_kernel, "encoder");
  read(j, "cnn2d_stem", c.cnn2d_stem, "encoder");
  read(j, "cnn2d_channels", c.cnn2d_channels, "encoder");
  read(j, "cnn2d_strides", c.cnn2d_strides, "encoder");
  read(j, "cnn2d_blocks", c.cnn2d_blocks, "encoder");
  read(j, "gru_layers", c.gru_layers, "encoder");
}

void to_json(json& j, const P2saConfig& c) {
  j = json{{"layers", c.layers},
           {"heads", c.heads},
           {"ff_width", c.ff_width},
           {"rope_base", c.rope_base},
           {"use_transformer", c.use_transformer},
           {"use_rope", c.use_rope},
           {"use_align_loss", c.use_align_loss},
           {"use_stop_gradient", c.use_stop_gradient}};
}

void from_json(const json& j, P2saConfig& c) {
  reject_unknown(j,
                 {"layers", "heads", "ff_width", "rope_base", "use_transformer", "use_rope", "use_align_loss",
                  "use_stop_gradient"},
                 "p2sa");
  read(j, "layers", c.layers, "p2sa");
  read(j, "heads", c.heads, "p2sa");
  read(j, "ff_width", c.ff_width, "p2sa");
  read(j, "rope_base", c.rope_base, "p2sa");
  read(j, "use_transformer", c.use_transformer, "p2sa");
  read(j, "use_rope", c.use_rope, "p2sa");
  read(j, "use_align_loss", c.use_align_loss, "p2sa");
  read(j, "use_stop_gradient", c.use_stop_gradient, "p2sa");
}

void to_json(json& j, const DecoderConfig& c) { j = json{{"max_len", c.max_len}}; }

void from_json(const json& j, DecoderConfig& c) {
  reject_unknown(j, {"max_len"}, "decoder");
  read(j, "max_len", c.max_len, "decoder");
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"encoder", c.encoder}, {"p2sa", c.p2sa}, {"decoder", c.decoder}, {"seed", c.seed}};
}

void from_json(const json& j, ModelConfig& c) {
  reject_unknown(j, {"encoder", "p2sa", "decoder", "seed"}, "model");
  read(j, "encoder", c.encoder, "model");
  read(j, "p2sa", c.p2sa, "model");
  read(j, "decoder", c.decoder, "model");
  read(j, "seed", c.seed, "model");
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"batch_size", c.batch_size},
           {"epochs", c.epochs},
           {"max_steps", c.max_steps},
           {"lr_max", c.lr_max},
           {"lr_min", c.lr_min},
           {"lambda", c.lambda},
           {"augment", c.augment},
           {"augment_fraction", c.augment_fraction},
           {"augment_magnitude", c.augment_magnitude},
           {"val_fraction", c.val_fraction},
           {"clip_norm", c.clip_norm},
           {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
  reject_unknown(j,
                 {"batch_size", "epochs", "max_steps", "lr_max", "lr_min", "lambda", "augment", "augment_fraction",
                  "augment_magnitude", "val_fraction", "clip_norm", "seed"},
                 "train");
  read(j, "batch_size", c.batch_size, "train");
  read(j, "epochs", c.epochs, "train");
  read(j, "max_steps", c.max_steps, "train");
  read(j, "lr_max", c.lr_max, "train");
  read(j, "lr_min", c.lr_min, "train");
  read(j, "lambda", c.lambda, "train");
  read(j, "augment", c.augment, "train");
  read(j, "augment_fraction", c.augment_fraction, "train");
  read(j, "augment_magnitude", c.augment_magnitude, "train");
  read(j, "val_fraction", c.val_fraction, "train");
  read(j, "clip_norm", c.clip_norm, "train");
  read(j, "seed", c.seed, "train");
}

}  // namespace olhtr
