// SPDX-License-Identifier: Apache-2.0
//
// The document `olhtr train --config` reads:
//   {"data": str?, "output_dir": str?, "train": {...}, "model": {...}}
// Every section is optional and falls back to the library defaults.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "olhtr/config.hpp"

namespace olhtr::cli {

struct RunConfig {
  std::optional<std::string> data;
  std::optional<std::string> output_dir;
  TrainConfig train;
  ModelConfig model;
};

// Parses and validates; throws ConfigError.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace olhtr::cli
