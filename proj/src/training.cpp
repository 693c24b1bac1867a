// SPDX-License-Identifier: Apache-2.0

#include "olhtr/training.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "olhtr/autodiff/optim.hpp"
#include "olhtr/data/utf8.hpp"
#include "olhtr/rng.hpp"

namespace olhtr {

using nlohmann::json;

json to_json(const StepRecord& r) {
  return json{{"step", r.step}, {"lr", r.lr}, {"L_1d", r.l1d}, {"L_2d", r.l2d}, {"L_align", r.align}, {"L_all", r.total}};
}

json to_json(const EpochRecord& r) {
  json j{{"epoch", r.epoch}, {"steps", r.steps}, {"L_1d", r.l1d}, {"L_2d", r.l2d}, {"L_align", r.align},
         {"L_all", r.total}};
  j["val_cer"] = r.val_cer ? json(*r.val_cer) : json(nullptr);
  return j;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double fraction,
                                                                             std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed ^ 0x5EEDULL);
  shuffle(idx, rng);
  const auto held = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<long>(held));
  std::vector<std::size_t> tr(idx.begin() + static_cast<long>(held), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  return {tr, val};
}

metrics::EvalReport evaluate(const TrajectoryStream<float>& stream, const data::Vocabulary& vocab,
                             const std::vector<data::TrajectorySequence>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
  std::vector<std::string> refs, hyps;
  for (const auto& seq : dataset) {
    refs.push_back(seq.text);
    hyps.push_back(infer(stream, vocab, seq));
  }
  return metrics::evaluate_transcripts(refs, hyps);
}

TrainResult train(Model<float>& model, const std::vector<data::TrajectorySequence>& dataset, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  std::vector<data::TrajectorySequence> normalized;
  normalized.reserve(dataset.size());
  for (const auto& seq : dataset) normalized.push_back(data::normalize(seq));

  auto [train_idx, val_idx] = split_indices(normalized.size(), cfg.val_fraction, cfg.seed);
  if (train_idx.empty()) throw std::invalid_argument("train: validation split leaves no training data");
  std::vector<data::TrajectorySequence> val_set;
  for (auto i : val_idx) val_set.push_back(normalized[i]);

  const std::size_t batches_per_epoch = (train_idx.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::uint64_t total_steps = static_cast<std::uint64_t>(batches_per_epoch) * cfg.epochs;
  if (cfg.max_steps > 0) total_steps = std::min<std::uint64_t>(total_steps, cfg.max_steps);

  ad::ParamList<float> params = model.parameters();
  ad::AdamState<float> adam;
  Rng rng(cfg.seed);
  const data::AugmentOptions aug{cfg.augment_fraction, cfg.augment_magnitude};

  TrainResult result;
  result.train_size = train_idx.size();
  result.val_size = val_idx.size();
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs && step < total_steps; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    shuffle(order, rng);
    EpochRecord summary;
    summary.epoch = epoch;
    for (std::size_t b = 0; b < batches_per_epoch && step < total_steps; ++b) {
      std::vector<data::TrajectorySequence> batch;
      for (std::size_t k = b * cfg.batch_size; k < std::min(order.size(), (b + 1) * cfg.batch_size); ++k) {
        const auto& seq = normalized[order[k]];
        batch.push_back(cfg.augment ? data::augment(seq, aug, rng) : seq);
      }

      LossBreakdown<float> loss = total_loss(model, batch, cfg.lambda);
      const std::pair<const char*, double> components[] = {{"L_1d", loss.traj.item()},
                                                           {"L_2d", loss.image.item()},
                                                           {"L_align", loss.align.item()},
                                                           {"L_all", loss.total.item()}};
      for (const auto& [name, value] : components) {
        if (!std::isfinite(value))
          throw DivergenceError(std::string(name) + " is not finite at step " + std::to_string(step) + " (epoch " +
                                std::to_string(epoch) + ", batch " + std::to_string(b) + ")");
      }

      ad::zero_grads(params);
      loss.total.backward();
      ad::clip_grad_norm(params, cfg.clip_norm);
      const double lr = ad::cosine_lr(step, total_steps, cfg.lr_max, cfg.lr_min);
      try {
        ad::adam_step(params, adam, lr);
      } catch (const std::runtime_error& e) {
        throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step));
      }

      StepRecord rec{step, lr, components[0].second, components[1].second, components[2].second,
                     components[3].second};
      result.steps.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec);
      summary.l1d += rec.l1d;
      summary.l2d += rec.l2d;
      summary.align += rec.align;
      summary.total += rec.total;
      ++summary.steps;
      ++step;
    }
    if (summary.steps > 0) {
      const double n = static_cast<double>(summary.steps);
      summary.l1d /= n;
      summary.l2d /= n;
      summary.align /= n;
      summary.total /= n;
    }
    if (!val_set.empty()) summary.val_cer = evaluate(model.trajectory, model.vocab, val_set).cer;
    result.epochs.push_back(summary);
    if (hooks.on_epoch) hooks.on_epoch(summary, model);
  }
  return result;
}

namespace {

constexpr const char* kFormat = "olhtr-checkpoint";
constexpr int kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  if (pos + 8 > in.size()) throw CheckpointError("checkpoint: truncated length prefix");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::string serialize_checkpoint(const Model<float>& model) {
  const auto params = model.parameters();
  json manifest = json::array();
  std::size_t offset = 0;
  for (const auto& p : params) {
    manifest.push_back(json{{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
    offset += p.tensor.numel();
  }
  json symbols = json::array();
  for (char32_t c : model.vocab.symbols()) symbols.push_back(utf8_encode(c));
  json header{{"format", kFormat},
              {"version", kVersion},
              {"config", model.config},
              {"vocab", std::move(symbols)},
              {"params", std::move(manifest)}};
  const std::string text = header.dump();

  std::string out;
  put_u64(out, text.size());
  out += text;
  put_u64(out, offset * 4);
  out.reserve(out.size() + offset * 4);
  for (const auto& p : params)
    for (float v : p.tensor.data()) put_f32(out, v);
  return out;
}

Model<float> parse_checkpoint(const std::string& bytes) {
  const std::uint64_t header_len = get_u64(bytes, 0);
  if (header_len > bytes.size() - 8) throw CheckpointError("checkpoint: header length exceeds file size");
  json header;
  try {
    header = json::parse(bytes.substr(8, header_len));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what());
  }
  for (const auto& [key, _] : header.items()) {
    if (key != "format" && key != "version" && key != "config" && key != "vocab" && key != "params")
      throw CheckpointError("checkpoint: unknown header key '" + key + "'");
  }
  if (header.value("format", "") != kFormat || header.value("version", 0) != kVersion)
    throw CheckpointError("checkpoint: unsupported format");

  ModelConfig cfg;
  std::u32string symbols;
  try {
    cfg = header.at("config").get<ModelConfig>();
    for (const auto& s : header.at("vocab")) {
      const std::u32string cp = utf8_decode(s.get<std::string>());
      if (cp.size() != 1) throw CheckpointError("checkpoint: vocabulary entries must be single characters");
      symbols += cp;
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint: bad config: ") + e.what());
  }

  Model<float> model;
  try {
    model = Model<float>(cfg, data::Vocabulary(symbols));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint: bad config: ") + e.what());
  }

  const std::size_t payload_pos = 8 + header_len;
  const std::uint64_t payload_len = get_u64(bytes, payload_pos);
  if (payload_len % 4 != 0) throw CheckpointError("checkpoint: payload length is not a whole number of floats");
  if (bytes.size() - payload_pos - 8 != payload_len)
    throw CheckpointError("checkpoint: payload is " + std::to_string(bytes.size() - payload_pos - 8) +
                          " bytes, header declares " + std::to_string(payload_len));

  auto params = model.parameters();
  const json& manifest = header.at("params");
  if (!manifest.is_array() || manifest.size() != params.size())
    throw CheckpointError("checkpoint: manifest lists " + std::to_string(manifest.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  std::size_t expected_offset = 0;
  const char* payload = bytes.data() + payload_pos + 8;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& entry = manifest[i];
    auto& p = params[i];
    if (entry.value("name", "") != p.name) throw CheckpointError("checkpoint: expected tensor '" + p.name + "'");
    if (entry.at("shape").get<ad::Shape>() != p.tensor.shape())
      throw CheckpointError("checkpoint: shape mismatch for '" + p.name + "'");
    if (entry.at("offset").get<std::size_t>() != expected_offset)
      throw CheckpointError("checkpoint: offset mismatch for '" + p.name + "'");
    if ((expected_offset + p.tensor.numel()) * 4 > payload_len)
      throw CheckpointError("checkpoint: payload too short for '" + p.name + "'");
    auto dst = p.tensor.mutable_data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = get_f32(payload + (expected_offset + k) * 4);
    expected_offset += p.tensor.numel();
  }
  if (expected_offset * 4 != payload_len) throw CheckpointError("checkpoint: payload has trailing data");
  return model;
}

void save_checkpoint(const Model<float>& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Model<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace olhtr
