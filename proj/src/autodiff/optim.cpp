// SPDX-License-Identifier: Apache-2.0

#include "olhtr/autodiff/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace olhtr::ad {

template <typename T>
void adam_step(ParamList<T>& params, AdamState<T>& state, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam_step: learning rate must be positive");
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.numel(), T(0));
      state.v.emplace_back(p.tensor.numel(), T(0));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: optimizer state does not match parameter set");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].tensor.numel() || state.v[i].size() != params[i].tensor.numel())
      throw std::invalid_argument("adam_step: moment shape mismatch for " + params[i].name);
    if (!params[i].tensor.has_grad()) continue;
    for (T g : params[i].tensor.mutable_grad()) {
      if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient in " + params[i].name);
    }
  }

  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& t = params[i].tensor;
    auto& m = state.m[i];
    auto& v = state.v[i];
    auto value = t.mutable_data();
    const std::vector<T> grad = t.grad();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      const double mj = b1 * m[j] + (1.0 - b1) * g;
      const double vj = b2 * v[j] + (1.0 - b2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double update = lr * (mj / c1) / (std::sqrt(vj / c2) + state.epsilon);
      value[j] = static_cast<T>(static_cast<double>(value[j]) - update);
    }
  }
}

template <typename T>
double clip_grad_norm(ParamList<T>& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (T g : p.tensor.mutable_grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double k = max_norm / norm;
    for (auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (T& g : p.tensor.mutable_grad()) g = static_cast<T>(static_cast<double>(g) * k);
    }
  }
  return norm;
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr_max, double lr_min) {
  if (!(lr_min > 0.0) || lr_max < lr_min) throw std::invalid_argument("cosine_lr: need lr_max >= lr_min > 0");
  if (step >= total_steps) return lr_min;
  const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

template void adam_step(ParamList<float>&, AdamState<float>&, double);
template void adam_step(ParamList<double>&, AdamState<double>&, double);
template double clip_grad_norm(ParamList<float>&, double);
template double clip_grad_norm(ParamList<double>&, double);

}  // namespace olhtr::ad
