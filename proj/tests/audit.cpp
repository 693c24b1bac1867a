// SPDX-License-Identifier: Apache-2.0

#include "audit.hpp"

#include <algorithm>

namespace olhtr::test {

std::string group_of(const std::string& name) {
  for (const char* g : {"enc1d.conv", "enc1d.gru", "p2sa", "dec1d", "enc2d", "dec2d"}) {
    if (name.rfind(std::string(g) + ".", 0) == 0) return g;
  }
  return "?";
}

std::map<std::string, GroupSet> gradient_flow(const Model<double>& model,
                                              const std::vector<data::TrajectorySequence>& batch) {
  auto params = model.parameters();
  std::map<std::string, GroupSet> out;
  for (const char* which : {"L_1d", "L_2d", "L_align"}) {
    ad::zero_grads(params);
    auto l = total_loss(model, batch, 2.0);
    const std::string w = which;
    (w == "L_1d" ? l.traj : w == "L_2d" ? l.image : l.align).backward();
    GroupSet& groups = out[w];
    for (const auto& p : params) {
      const auto g = p.tensor.grad();
      if (std::any_of(g.begin(), g.end(), [](double v) { return v != 0.0; })) groups.insert(group_of(p.name));
    }
  }
  ad::zero_grads(params);
  return out;
}

std::map<std::string, GroupSet> expected_flow(const P2saConfig& cfg) {
  std::map<std::string, GroupSet> e;
  e["L_1d"] = {"enc1d.conv", "enc1d.gru", "dec1d"};
  if (cfg.use_transformer) e["L_1d"].insert("p2sa");
  e["L_2d"] = {"enc2d", "dec2d"};
  e["L_align"] = {};
  if (cfg.use_align_loss) {
    e["L_align"].insert("enc1d.conv");
    if (cfg.use_transformer) e["L_align"].insert("p2sa");
    if (!cfg.use_stop_gradient) e["L_align"].insert("enc2d");
  }
  return e;
}

std::size_t transformer_param_count(std::size_t d, std::size_t layers, std::size_t ff) {
  const std::size_t norms = 2 * 2 * d;
  const std::size_t attention = 4 * (d * d + d);
  const std::size_t feed_forward = d * ff + ff + ff * d + d;
  return layers * (norms + attention + feed_forward);
}

std::vector<AblationRow> ablation_rows() {
  return {{"baseline (module absent)", false, false, false, false},
          {"transformer", true, false, false, false},
          {"transformer + rope", true, true, false, false},
          {"transformer + rope + align", true, true, true, false},
          {"transformer + rope + align + sg", true, true, true, true}};
}

}  // namespace olhtr::test
