// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "cli_runner.hpp"
#include "olhtr/data/trajectory.hpp"
#include "olhtr/training.hpp"

using namespace olhtr;
using namespace olhtr::test;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "olhtr_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const char* kTinyConfig = R"({
  "train": {"batch_size": 4, "epochs": 2, "max_steps": 3, "lr_max": 1e-3, "lr_min": 1e-5, "val_fraction": 0.2},
  "model": {"encoder": {"d": 16, "conv1d_channels": [8, 8, 16, 16, 16, 16], "cnn2d_stem": 4,
                        "cnn2d_channels": [4, 8, 16, 16]},
            "p2sa": {"layers": 1, "heads": 2}, "decoder": {"max_len": 8}}
})";

}  // namespace

TEST_CASE("cli: synth --n 0 writes an empty file") {
  const auto dir = scratch("synth0");
  auto r = run_cli("synth --n 0 --vocab ab --seed 1 --out " + q(dir / "d.jsonl"), dir);
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "d.jsonl"));
  CHECK(fs::file_size(dir / "d.jsonl") == 0);
}

TEST_CASE("cli: synth, render, train, infer, eval") {
  const auto dir = scratch("pipeline");
  REQUIRE(run_cli("synth --n 10 --vocab abc --seed 2 --max-length 3 --out " + q(dir / "d.jsonl"), dir).code == 0);
  const auto ds = data::load_dataset(dir / "d.jsonl");
  CHECK(ds.size() == 10);

  REQUIRE(run_cli("render --input " + q(dir / "d.jsonl") + " --out " + q(dir / "img"), dir).code == 0);
  std::size_t images = 0;
  for (const auto& e : fs::directory_iterator(dir / "img")) {
    std::ifstream in(e.path(), std::ios::binary);
    std::string magic;
    std::size_t w, h;
    in >> magic >> w >> h;
    CHECK(magic == "P5");
    CHECK(h == 32);
    CHECK(w % 8 == 0);
    ++images;
  }
  CHECK(images == 10);

  write_text(dir / "cfg.json", kTinyConfig);
  auto tr = run_cli("train --config " + q(dir / "cfg.json") + " --data " + q(dir / "d.jsonl") + " --out " +
                        q(dir / "run") + " --seed 4",
                    dir);
  INFO(tr.err);
  REQUIRE(tr.code == 0);
  CHECK(fs::exists(dir / "run" / "model.ckpt"));
  const std::string log = slurp(dir / "run" / "train_log.jsonl");
  CHECK(count_lines(log) == 3);
  std::istringstream lines(log);
  for (std::string line; std::getline(lines, line);) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.size() == 6);
    for (const char* key : {"step", "lr", "L_1d", "L_2d", "L_align", "L_all"}) CHECK(j.contains(key));
  }
  CHECK(count_lines(slurp(dir / "run" / "epochs.jsonl")) == 2);
  CHECK(load_checkpoint(dir / "run" / "model.ckpt").config.seed == 4);

  auto inf = run_cli("infer --checkpoint " + q(dir / "run" / "model.ckpt") + " --input " + q(dir / "d.jsonl"), dir);
  CHECK(inf.code == 0);
  CHECK(count_lines(inf.out) == 10);

  auto ev = run_cli("eval --checkpoint " + q(dir / "run" / "model.ckpt") + " --data " + q(dir / "d.jsonl"), dir);
  REQUIRE(ev.code == 0);
  auto report = nlohmann::json::parse(ev.out);
  CHECK(report.size() == 6);
  for (const char* key : {"cer", "wer", "ar", "cr"}) CHECK(report[key].is_number());
  CHECK(report["n_sequences"] == 10);
  CHECK(report["ar"].get<double>() <= report["cr"].get<double>());
}

TEST_CASE("cli: configuration errors exit with 2") {
  const auto dir = scratch("badcfg");
  REQUIRE(run_cli("synth --n 3 --vocab ab --seed 2 --out " + q(dir / "d.jsonl"), dir).code == 0);
  auto missing = run_cli("train --config " + q(dir / "nope.json") + " --data " + q(dir / "d.jsonl") + " --out " +
                             q(dir / "run"),
                         dir);
  CHECK(missing.code == 2);
  CHECK(missing.err.find("nope.json") != std::string::npos);

  write_text(dir / "unknown.json", R"({"train": {"batch_size": 4, "warmup": 10}})");
  auto unknown = run_cli("train --config " + q(dir / "unknown.json") + " --data " + q(dir / "d.jsonl") + " --out " +
                             q(dir / "run"),
                         dir);
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("warmup") != std::string::npos);

  write_text(dir / "stride.json", R"({"model": {"encoder": {"conv1d_strides": [1, 1, 1, 2, 1, 2]}}})");
  CHECK(run_cli("train --config " + q(dir / "stride.json") + " --data " + q(dir / "d.jsonl") + " --out " +
                    q(dir / "run"),
                dir)
            .code == 2);
  CHECK(run_cli("train --config " + q(dir / "stride.json"), dir).code == 2);
  CHECK(run_cli("frobnicate", dir).code == 2);
}

TEST_CASE("cli: eval rejects empty datasets and vocabulary mismatches") {
  const auto dir = scratch("evalerr");
  REQUIRE(run_cli("synth --n 4 --vocab ab --seed 3 --out " + q(dir / "ab.jsonl"), dir).code == 0);
  REQUIRE(run_cli("synth --n 4 --vocab xy --seed 3 --out " + q(dir / "xy.jsonl"), dir).code == 0);
  REQUIRE(run_cli("synth --n 0 --vocab ab --seed 3 --out " + q(dir / "empty.jsonl"), dir).code == 0);
  write_text(dir / "cfg.json", kTinyConfig);
  REQUIRE(run_cli("train --config " + q(dir / "cfg.json") + " --data " + q(dir / "ab.jsonl") + " --out " +
                      q(dir / "run"),
                  dir)
              .code == 0);
  const std::string ckpt = q(dir / "run" / "model.ckpt");
  CHECK(run_cli("eval --checkpoint " + ckpt + " --data " + q(dir / "empty.jsonl"), dir).code == 2);
  auto mismatch = run_cli("eval --checkpoint " + ckpt + " --data " + q(dir / "xy.jsonl"), dir);
  CHECK(mismatch.code == 2);
  CHECK(mismatch.err.find("vocabulary") != std::string::npos);
  CHECK(run_cli("eval --checkpoint " + q(dir / "ab.jsonl") + " --data " + q(dir / "ab.jsonl"), dir).code == 2);
  auto io = run_cli("infer --checkpoint " + ckpt + " --input " + q(dir / "missing.jsonl"), dir);
  CHECK(io.code != 0);
  CHECK(io.err.find("missing.jsonl") != std::string::npos);
}

TEST_CASE("cli: divergence exits with 3") {
  const auto dir = scratch("diverge");
  REQUIRE(run_cli("synth --n 8 --vocab ab --seed 5 --out " + q(dir / "d.jsonl"), dir).code == 0);
  write_text(dir / "cfg.json", R"({
    "train": {"batch_size": 2, "epochs": 4, "lr_max": 1e30, "lr_min": 1e29, "clip_norm": 0, "val_fraction": 0},
    "model": {"encoder": {"d": 16, "conv1d_channels": [8, 8, 16, 16, 16, 16], "cnn2d_stem": 4,
                          "cnn2d_channels": [4, 8, 16, 16]}, "p2sa": {"layers": 1, "heads": 2}}
  })");
  auto r = run_cli("train --config " + q(dir / "cfg.json") + " --data " + q(dir / "d.jsonl") + " --out " +
                       q(dir / "run"),
                   dir);
  CHECK(r.code == 3);
  CHECK(r.err.find("not finite") != std::string::npos);
}
