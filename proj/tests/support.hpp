// SPDX-License-Identifier: Apache-2.0
//
// Shared test helpers: random tensors, a central finite-difference gradient
// checker and small model configs.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "olhtr/autodiff/ops.hpp"
#include "olhtr/autodiff/optim.hpp"
#include "olhtr/config.hpp"
#include "olhtr/rng.hpp"

namespace olhtr::test {

using ad::Tensor;

template <typename T = double>
Tensor<T> random_tensor(ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = true) {
  std::vector<T> v(ad::shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(uniform(rng, lo, hi));
  return Tensor<T>::from(std::move(shape), std::move(v), requires_grad);
}

// Fixed random projection so that a non-scalar output can be checked
// through one scalar: sum(out * weights).
inline Tensor<double> project(const Tensor<double>& out, Rng& rng) {
  return ad::sum(ad::mul(out, random_tensor(out.shape(), rng, -1.0, 1.0, false)));
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "input[i]" of the worst element
  std::size_t checked = 0;
};

inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

// Compares backward() against (f(x + h) - f(x - h)) / 2h for every element of
// every input. `f` must rebuild the graph from the current input values.
// At most `max_per_input` evenly spaced elements of each input are probed
// (0 = all of them).
inline GradCheckResult grad_check(std::vector<Tensor<double>> inputs, const std::function<Tensor<double>()>& f,
                                  std::size_t max_per_input = 0, double h = 1e-5) {
  for (auto& x : inputs) x.zero_grad();
  f().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& x : inputs) analytic.push_back(x.grad());

  GradCheckResult r;
  ad::NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_data();
    const std::size_t stride =
        max_per_input == 0 ? 1 : std::max<std::size_t>(1, (values.size() + max_per_input - 1) / max_per_input);
    for (std::size_t i = 0; i < values.size(); i += stride) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = f().item();
      values[i] = saved - h;
      const double down = f().item();
      values[i] = saved;
      const double e = rel_error(analytic[k][i], (up - down) / (2.0 * h));
      if (e > r.max_rel_error) {
        r.max_rel_error = e;
        r.worst = "input" + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
      ++r.checked;
    }
  }
  return r;
}

// Parameters of a collected list as grad-check inputs.
template <typename T>
std::vector<Tensor<T>> tensors_of(const ad::ParamList<T>& params) {
  std::vector<Tensor<T>> out;
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

// Desk-scale encoder widths for width d.
inline EncoderConfig small_encoder(std::size_t d) {
  EncoderConfig e;
  e.d = d;
  e.conv1d_channels = {d / 2, d / 2, d, d, d, d};
  e.cnn2d_stem = d / 4;
  e.cnn2d_channels = {d / 4, d / 2, d, d};
  return e;
}

inline ModelConfig small_model(std::size_t d = 16, std::uint64_t seed = 7) {
  ModelConfig cfg;
  cfg.encoder = small_encoder(d);
  cfg.p2sa.heads = 2;
  cfg.p2sa.layers = 1;
  cfg.decoder.max_len = 12;
  cfg.seed = seed;
  return cfg;
}

}  // namespace olhtr::test
