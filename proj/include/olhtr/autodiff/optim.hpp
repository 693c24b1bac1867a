// SPDX-License-Identifier: Apache-2.0
//
// Named parameter sets, Adam and the cosine learning-rate schedule.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "olhtr/autodiff/tensor.hpp"

namespace olhtr::ad {

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParamList = std::vector<NamedParam<T>>;

template <typename T>
std::size_t count_elements(const ParamList<T>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

template <typename T>
void zero_grads(ParamList<T>& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam update from the gradients stored on each parameter.
// A non-finite gradient rejects the whole step before anything is modified.
template <typename T>
void adam_step(ParamList<T>& params, AdamState<T>& state, double lr);

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(ParamList<T>& params, double max_norm);

// lr_min + (lr_max - lr_min) (1 + cos(pi step / total_steps)) / 2, clamped
// to lr_min past the end.
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr_max, double lr_min);

}  // namespace olhtr::ad
