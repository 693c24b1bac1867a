// SPDX-License-Identifier: Apache-2.0
//
// Collaborative two-stream training and checkpoint I/O.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "olhtr/config.hpp"
#include "olhtr/metrics.hpp"
#include "olhtr/model.hpp"

namespace olhtr {

// A loss component went non-finite; training stops without updating.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  std::uint64_t step = 0;
  double lr = 0.0;
  double l1d = 0.0;
  double l2d = 0.0;
  double align = 0.0;
  double total = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::uint64_t steps = 0;
  double l1d = 0.0;
  double l2d = 0.0;
  double align = 0.0;
  double total = 0.0;
  std::optional<double> val_cer;
};

nlohmann::json to_json(const StepRecord& r);
nlohmann::json to_json(const EpochRecord& r);

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  // Runs after each epoch's validation.
  std::function<void(const EpochRecord&, const Model<float>&)> on_epoch;
};

struct TrainResult {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

// Seeded split: the first floor(fraction * n) of a shuffled index list are
// held out. Returns (train, validation) index sets.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double fraction,
                                                                             std::uint64_t seed);

// Trains `model` in place. Each step: augment -> render -> both encoders ->
// alignment -> both decoders -> L_1d + L_2d + lambda L_align -> backward ->
// global-norm clip -> Adam at the cosine learning rate.
TrainResult train(Model<float>& model, const std::vector<data::TrajectorySequence>& dataset, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

// Single-stream recognition of every sequence followed by metric
// aggregation.
metrics::EvalReport evaluate(const TrajectoryStream<float>& stream, const data::Vocabulary& vocab,
                             const std::vector<data::TrajectorySequence>& dataset);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout (all integers little-endian):
//   u64 header length | header (UTF-8 JSON) | u64 payload length | payload
// The header holds the model config, the vocabulary and a manifest of
// {name, shape, offset} entries; offsets and the payload are float32 counts.
std::string serialize_checkpoint(const Model<float>& model);
Model<float> parse_checkpoint(const std::string& bytes);
void save_checkpoint(const Model<float>& model, const std::filesystem::path& path);
Model<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace olhtr
