// SPDX-License-Identifier: Apache-2.0
//
// Gradient-flow probes: which parameter groups receive a nonzero gradient
// from each loss component.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "olhtr/model.hpp"

namespace olhtr::test {

using GroupSet = std::set<std::string>;

// enc1d.conv, enc1d.gru, p2sa, dec1d, enc2d or dec2d.
std::string group_of(const std::string& param_name);

// Keys "L_1d", "L_2d", "L_align".
std::map<std::string, GroupSet> gradient_flow(const Model<double>& model,
                                              const std::vector<data::TrajectorySequence>& batch);

// What the toggles dictate.
std::map<std::string, GroupSet> expected_flow(const P2saConfig& cfg);

// Elements of the alignment transformer stack, computed from the shapes.
std::size_t transformer_param_count(std::size_t d, std::size_t layers, std::size_t ff);

struct AblationRow {
  std::string name;
  bool transformer, rope, align, stop_gradient;
};
std::vector<AblationRow> ablation_rows();

}  // namespace olhtr::test
