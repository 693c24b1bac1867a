// SPDX-License-Identifier: Apache-2.0

#include "run_config.hpp"

#include <fstream>
#include <sstream>

namespace olhtr::cli {

using nlohmann::json;

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected an object at top level");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "data") {
        cfg.data = value.get<std::string>();
      } else if (key == "output_dir") {
        cfg.output_dir = value.get<std::string>();
      } else if (key == "train") {
        cfg.train = value.get<TrainConfig>();
      } else if (key == "model") {
        cfg.model = value.get<ModelConfig>();
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError("config: " + key + ": " + e.what());
    }
  }
  cfg.train.validate();
  ModelConfig resolved = cfg.model;
  resolved.resolve();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

json to_json(const RunConfig& cfg) {
  json j{{"train", cfg.train}, {"model", cfg.model}};
  if (cfg.data) j["data"] = *cfg.data;
  if (cfg.output_dir) j["output_dir"] = *cfg.output_dir;
  return j;
}

}  // namespace olhtr::cli
