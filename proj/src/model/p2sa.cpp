// SPDX-License-Identifier: Apache-2.0

#include "olhtr/p2sa.hpp"

#include <cmath>
#include <stdexcept>

namespace olhtr {

template <typename T>
Tensor<T> rope2d(const std::vector<std::array<double, 2>>& positions, std::size_t d, double base) {
  if (d == 0 || d % 4 != 0) throw std::invalid_argument("rope2d: width must be a positive multiple of 4");
  const std::size_t half = d / 2;
  std::vector<T> out(positions.size() * d);
  for (std::size_t f = 0; f < positions.size(); ++f) {
    for (std::size_t axis = 0; axis < 2; ++axis) {
      for (std::size_t j = 0; j < half / 2; ++j) {
        const double freq = std::pow(base, -static_cast<double>(2 * j) / static_cast<double>(half));
        const double theta = positions[f][axis] * freq;
        out[f * d + axis * half + 2 * j] = static_cast<T>(std::cos(theta));
        out[f * d + axis * half + 2 * j + 1] = static_cast<T>(std::sin(theta));
      }
    }
  }
  return Tensor<T>::from({positions.size(), d}, std::move(out));
}

template <typename T>
TransformerLayer<T>::TransformerLayer(std::size_t d, std::size_t heads, std::size_t ff_width, nn::ParamInit& init)
    : heads_(heads),
      norm_attn_(d),
      query_(d, d, init),
      key_(d, d, init),
      value_(d, d, init),
      output_(d, d, init),
      norm_ff_(d),
      ff_in_(d, ff_width, init),
      ff_out_(ff_width, d, init) {
  if (heads == 0 || d % heads != 0) throw std::invalid_argument("transformer: d must be divisible by heads");
}

template <typename T>
Tensor<T> TransformerLayer<T>::operator()(const Tensor<T>& x, std::vector<Tensor<T>>* attention) const {
  const std::size_t d = x.dim(1);
  const std::size_t head_dim = d / heads_;
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(head_dim)));

  Tensor<T> normed = norm_attn_(x);
  Tensor<T> q = query_(normed), k = key_(normed), v = value_(normed);
  std::vector<Tensor<T>> heads;
  for (std::size_t h = 0; h < heads_; ++h) {
    const std::size_t lo = h * head_dim, hi = lo + head_dim;
    Tensor<T> qh = ad::slice(q, 1, lo, hi), kh = ad::slice(k, 1, lo, hi), vh = ad::slice(v, 1, lo, hi);
    Tensor<T> weights = ad::softmax(ad::scale(ad::matmul(qh, kh, false, true), inv_sqrt));
    if (attention) attention->push_back(weights);
    heads.push_back(ad::matmul(weights, vh));
  }
  Tensor<T> h = ad::add(x, output_(ad::concat(heads, 1)));
  Tensor<T> ff = ff_out_(ad::relu(ff_in_(norm_ff_(h))));
  return ad::add(h, ff);
}

template <typename T>
void TransformerLayer<T>::collect(ad::ParamList<T>& out, const std::string& prefix) const {
  norm_attn_.collect(out, prefix + ".norm_attn");
  query_.collect(out, prefix + ".query");
  key_.collect(out, prefix + ".key");
  value_.collect(out, prefix + ".value");
  output_.collect(out, prefix + ".output");
  norm_ff_.collect(out, prefix + ".norm_ff");
  ff_in_.collect(out, prefix + ".ff_in");
  ff_out_.collect(out, prefix + ".ff_out");
}

template <typename T>
P2sa<T>::P2sa(std::size_t d, const P2saConfig& cfg, nn::ParamInit& init) : cfg_(cfg), d_(d) {
  if (cfg.use_transformer) {
    const std::size_t ff = cfg.ff_width == 0 ? 2 * d : cfg.ff_width;
    for (std::size_t l = 0; l < cfg.layers; ++l) layers_.emplace_back(d, cfg.heads, ff, init);
  }
}

template <typename T>
Tensor<T> P2sa<T>::operator()(const FeatureSequence<T>& f1d_conv, std::vector<Tensor<T>>* attention) const {
  if (!f1d_conv.has_positions() || f1d_conv.positions.size() != f1d_conv.frames())
    throw std::invalid_argument("p2sa: trajectory features need one position per frame");
  Tensor<T> h = f1d_conv.values;
  if (cfg_.use_rope) h = ad::add(h, rope2d<T>(f1d_conv.positions, d_, cfg_.rope_base));
  for (const auto& layer : layers_) h = layer(h, attention);
  return h;
}

template <typename T>
void P2sa<T>::collect(ad::ParamList<T>& out, const std::string& prefix) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) layers_[l].collect(out, prefix + ".layer" + std::to_string(l));
}

template <typename T>
Tensor<T> sample_image_features(const Tensor<T>& f2d_conv, const std::vector<std::array<double, 2>>& positions) {
  std::vector<double> coords;
  coords.reserve(positions.size());
  for (const auto& p : positions) coords.push_back(p[0] / 8.0);
  return ad::interp_rows(f2d_conv, coords);
}

template <typename T>
Tensor<T> align_loss(const Tensor<T>& f_p2s, const Tensor<T>& f2d_sample, bool stop_gradient) {
  return ad::mse(f_p2s, stop_gradient ? ad::stop_gradient(f2d_sample) : f2d_sample);
}

template <typename T>
FeatureSequence<T> merge(const FeatureSequence<T>& f1d_conv, const Tensor<T>& f_p2s, const nn::BiGru<T>& gru) {
  return {gru(ad::add(f1d_conv.values, f_p2s)), f1d_conv.positions};
}

#define OLHTR_INSTANTIATE(T)                                                                                   \
  template Tensor<T> rope2d<T>(const std::vector<std::array<double, 2>>&, std::size_t, double);              \
  template class TransformerLayer<T>;                                                                          \
  template class P2sa<T>;                                                                                      \
  template Tensor<T> sample_image_features<T>(const Tensor<T>&, const std::vector<std::array<double, 2>>&);    \
  template Tensor<T> align_loss<T>(const Tensor<T>&, const Tensor<T>&, bool);                                  \
  template FeatureSequence<T> merge<T>(const FeatureSequence<T>&, const Tensor<T>&, const nn::BiGru<T>&);

OLHTR_INSTANTIATE(float)
OLHTR_INSTANTIATE(double)

}  // namespace olhtr
