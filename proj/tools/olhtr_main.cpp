// SPDX-License-Identifier: Apache-2.0
//
// olhtr train | eval | infer | render | synth
//
// Exit codes: 0 success, 1 I/O or runtime failure, 2 bad configuration,
// input or checkpoint mismatch, 3 training divergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "olhtr/data/synth.hpp"
#include "olhtr/data/utf8.hpp"
#include "olhtr/data/vocab.hpp"
#include "olhtr/training.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace olhtr;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitDiverged = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_jsonl_line(std::ofstream& out, const nlohmann::json& j) {
  out << j.dump() << '\n';
  out.flush();
}

// Every transcript character must be known to the checkpoint's vocabulary.
void check_vocab(const data::Vocabulary& vocab, const std::vector<data::TrajectorySequence>& dataset) {
  for (const auto& seq : dataset) {
    for (char32_t c : utf8_decode(seq.text)) {
      if (!vocab.contains(c))
        throw UsageError("sequence '" + seq.id + "' uses character '" + utf8_encode(c) +
                         "' missing from the checkpoint vocabulary");
    }
  }
}

std::string file_stem_for(const std::string& id, std::size_t index) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  if (out.empty()) out = "seq" + std::to_string(index);
  return out;
}

struct TrainArgs {
  std::string config, data, out;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& args) {
  cli::RunConfig run;
  if (!args.config.empty()) run = cli::load_run_config(args.config);
  if (args.seed) {
    run.train.seed = *args.seed;
    run.model.seed = *args.seed;
  }
  if (!args.data.empty()) run.data = args.data;
  if (!args.out.empty()) run.output_dir = args.out;
  if (!run.data) throw ConfigError("no dataset: pass --data or set \"data\" in the config");
  if (!run.output_dir) throw ConfigError("no output directory: pass --out or set \"output_dir\" in the config");

  const auto dataset = data::load_dataset(*run.data);
  const fs::path out_dir = *run.output_dir;
  fs::create_directories(out_dir);
  {
    std::ofstream cfg_out(out_dir / "run_config.json");
    cfg_out << cli::to_json(run).dump(2) << '\n';
  }

  Model<float> model(run.model, data::build_vocab(dataset));
  std::ofstream step_log(out_dir / "train_log.jsonl");
  std::ofstream epoch_log(out_dir / "epochs.jsonl");
  if (!step_log || !epoch_log) throw std::runtime_error("cannot write logs in " + out_dir.string());

  TrainHooks hooks;
  hooks.on_step = [&](const StepRecord& r) { write_jsonl_line(step_log, to_json(r)); };
  hooks.on_epoch = [&](const EpochRecord& r, const Model<float>& m) {
    write_jsonl_line(epoch_log, to_json(r));
    save_checkpoint(m, out_dir / "model.ckpt");
  };
  try {
    const TrainResult result = train(model, dataset, run.train, hooks);
    std::cerr << "trained " << result.steps.size() << " steps on " << result.train_size << " sequences ("
              << result.val_size << " held out)\n";
  } catch (const DivergenceError& e) {
    std::cerr << "error: training diverged: " << e.what() << "\n";
    if (fs::exists(out_dir / "model.ckpt")) std::cerr << "last good checkpoint: " << (out_dir / "model.ckpt") << "\n";
    return kExitDiverged;
  }
  save_checkpoint(model, out_dir / "model.ckpt");
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path) {
  const Model<float> model = load_checkpoint(checkpoint);
  const auto dataset = data::load_dataset(data_path);
  check_vocab(model.vocab, dataset);
  const auto report = evaluate(model.trajectory, model.vocab, dataset);
  std::cout << metrics::to_json(report).dump() << '\n';
  return 0;
}

int cmd_infer(const std::string& checkpoint, const std::string& input) {
  const Model<float> model = load_checkpoint(checkpoint);
  for (const auto& seq : data::load_dataset(input)) std::cout << infer(model.trajectory, model.vocab, seq) << '\n';
  return 0;
}

int cmd_render(const std::string& input, const std::string& out) {
  const auto dataset = data::load_dataset(input);
  fs::create_directories(out);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const fs::path path = fs::path(out) / (file_stem_for(dataset[i].id, i) + ".pgm");
    data::write_pgm(data::render(data::normalize(dataset[i])), path);
  }
  return 0;
}

int cmd_synth(std::size_t n, const std::string& vocab, std::uint64_t seed, const std::string& out, std::size_t min_len,
              std::size_t max_len) {
  if (vocab.empty()) throw UsageError("--vocab must list at least one character");
  if (min_len == 0 || max_len < min_len) throw UsageError("need 1 <= --min-length <= --max-length");
  std::u32string symbols = utf8_decode(vocab);
  std::sort(symbols.begin(), symbols.end());
  symbols.erase(std::unique(symbols.begin(), symbols.end()), symbols.end());
  data::GlyphBank bank(symbols);
  data::SynthOptions opts;
  opts.count = n;
  opts.min_length = min_len;
  opts.max_length = max_len;
  Rng rng(seed);
  data::save_dataset(data::synth_generate(bank, opts, rng), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online handwriting recognition: two-stream training, single-stream inference"};
  app.require_subcommand(1);

  TrainArgs train_args;
  std::uint64_t seed_value = 0;
  auto* train_cmd = app.add_subcommand("train", "Train both streams and write model.ckpt plus JSONL logs");
  train_cmd->add_option("--config", train_args.config, "JSON run configuration");
  train_cmd->add_option("--data", train_args.data, "JSONL training set (overrides the config)");
  train_cmd->add_option("--out", train_args.out, "Output directory (overrides the config)");
  auto* seed_opt = train_cmd->add_option("--seed", seed_value, "Seed for initialisation, shuffling and augmentation");

  std::string checkpoint, data_path, input, out;
  auto* eval_cmd = app.add_subcommand("eval", "Print CER/WER/AR/CR of the trajectory stream as JSON");
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", data_path, "JSONL dataset")->required();

  auto* infer_cmd = app.add_subcommand("infer", "Print one transcript per input sequence");
  infer_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  infer_cmd->add_option("--input", input, "JSONL sequences")->required();

  auto* render_cmd = app.add_subcommand("render", "Write a PGM preview per sequence");
  render_cmd->add_option("--input", input, "JSONL sequences")->required();
  render_cmd->add_option("--out", out, "Output directory")->required();

  std::size_t n = 0, min_len = 3, max_len = 5;
  std::string vocab;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic JSONL dataset");
  synth_cmd->add_option("--n", n, "Number of sequences")->required();
  synth_cmd->add_option("--vocab", vocab, "Characters to draw from")->required();
  synth_cmd->add_option("--seed", synth_seed, "Generator seed");
  synth_cmd->add_option("--out", out, "Output JSONL path")->required();
  synth_cmd->add_option("--min-length", min_len, "Shortest transcript");
  synth_cmd->add_option("--max-length", max_len, "Longest transcript");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadInput;
  }

  try {
    if (*train_cmd) {
      if (seed_opt->count() > 0) train_args.seed = seed_value;
      return cmd_train(train_args);
    }
    if (*eval_cmd) return cmd_eval(checkpoint, data_path);
    if (*infer_cmd) return cmd_infer(checkpoint, input);
    if (*render_cmd) return cmd_render(input, out);
    if (*synth_cmd) return cmd_synth(n, vocab, synth_seed, out, min_len, max_len);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const data::DatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
