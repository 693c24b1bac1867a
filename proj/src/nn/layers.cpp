// SPDX-License-Identifier: Apache-2.0

#include "olhtr/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace olhtr::nn {

namespace {
double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }
}  // namespace

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out, ParamInit& init)
    : weight(init.tensor<T>({in, out}, fan_in_bound(in))), bias(init.tensor<T>({out}, fan_in_bound(in))) {}

template <typename T>
void Linear<T>::collect(ParamList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

template <typename T>
Conv1dLayer<T>::Conv1dLayer(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride_,
                            std::size_t pad_, ParamInit& init)
    : weight(init.tensor<T>({kernel, in, out}, fan_in_bound(kernel * in))),
      bias(init.tensor<T>({out}, fan_in_bound(kernel * in))),
      stride(stride_),
      pad(pad_) {}

template <typename T>
void Conv1dLayer<T>::collect(ParamList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

template <typename T>
Conv2dLayer<T>::Conv2dLayer(std::size_t in, std::size_t out, std::size_t kernel, std::array<std::size_t, 2> stride_,
                            std::size_t pad_, ParamInit& init)
    : weight(init.tensor<T>({out, in, kernel, kernel}, fan_in_bound(in * kernel * kernel))),
      bias(init.tensor<T>({out}, fan_in_bound(in * kernel * kernel))),
      stride(stride_),
      pad{pad_, pad_} {}

template <typename T>
void Conv2dLayer<T>::collect(ParamList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

template <typename T>
LayerNorm<T>::LayerNorm(std::size_t width)
    : gamma(Tensor<T>::full({width}, T(1), true)), beta(Tensor<T>::zeros({width}, true)) {}

template <typename T>
void LayerNorm<T>::collect(ParamList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

template <typename T>
GruCell<T>::GruCell(std::size_t in, std::size_t hidden_, ParamInit& init)
    : w_ih(init.tensor<T>({in, 3 * hidden_}, fan_in_bound(hidden_))),
      w_hh(init.tensor<T>({hidden_, 3 * hidden_}, fan_in_bound(hidden_))),
      b_ih(init.tensor<T>({3 * hidden_}, fan_in_bound(hidden_))),
      b_hh(init.tensor<T>({3 * hidden_}, fan_in_bound(hidden_))),
      hidden(hidden_) {}

template <typename T>
Tensor<T> GruCell<T>::step(const Tensor<T>& x, const Tensor<T>& h) const {
  return step_projected(ad::add_bias(ad::matmul(x, w_ih), b_ih), h);
}

template <typename T>
Tensor<T> GruCell<T>::step_projected(const Tensor<T>& gates_x, const Tensor<T>& h) const {
  const std::size_t H = hidden;
  Tensor<T> gates_h = ad::add_bias(ad::matmul(h, w_hh), b_hh);
  Tensor<T> rz = ad::sigmoid(ad::add(ad::slice(gates_x, 1, 0, 2 * H), ad::slice(gates_h, 1, 0, 2 * H)));
  Tensor<T> r = ad::slice(rz, 1, 0, H);
  Tensor<T> z = ad::slice(rz, 1, H, 2 * H);
  Tensor<T> n = ad::tanh(ad::add(ad::slice(gates_x, 1, 2 * H, 3 * H), ad::mul(r, ad::slice(gates_h, 1, 2 * H, 3 * H))));
  return ad::add(n, ad::mul(z, ad::sub(h, n)));
}

template <typename T>
Tensor<T> GruCell<T>::run(const Tensor<T>& x, bool reverse) const {
  const std::size_t L = x.dim(0);
  if (L == 0) throw std::invalid_argument("gru: empty sequence");
  Tensor<T> gates_x = ad::add_bias(ad::matmul(x, w_ih), b_ih);
  Tensor<T> h = Tensor<T>::zeros({1, hidden});
  std::vector<Tensor<T>> outputs(L);
  for (std::size_t i = 0; i < L; ++i) {
    const std::size_t t = reverse ? L - 1 - i : i;
    h = step_projected(ad::slice(gates_x, 0, t, t + 1), h);
    outputs[t] = h;
  }
  return ad::concat(outputs, 0);
}

template <typename T>
void GruCell<T>::collect(ParamList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".w_ih", w_ih});
  out.push_back({prefix + ".w_hh", w_hh});
  out.push_back({prefix + ".b_ih", b_ih});
  out.push_back({prefix + ".b_hh", b_hh});
}

template <typename T>
BiGru<T>::BiGru(std::size_t width, std::size_t num_layers, ParamInit& init) {
  if (width % 2 != 0) throw std::invalid_argument("bigru: width must be even");
  for (std::size_t l = 0; l < num_layers; ++l) {
    GruCell<T> fwd(width, width / 2, init);
    GruCell<T> bwd(width, width / 2, init);
    layers.push_back({std::move(fwd), std::move(bwd)});
  }
}

template <typename T>
Tensor<T> BiGru<T>::operator()(const Tensor<T>& x) const {
  Tensor<T> h = x;
  for (const auto& layer : layers) h = ad::concat<T>({layer[0].run(h, false), layer[1].run(h, true)}, 1);
  return h;
}

template <typename T>
void BiGru<T>::collect(ParamList<T>& out, const std::string& prefix) const {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l][0].collect(out, prefix + ".l" + std::to_string(l) + ".fwd");
    layers[l][1].collect(out, prefix + ".l" + std::to_string(l) + ".bwd");
  }
}

template struct Linear<float>;
template struct Linear<double>;
template struct Conv1dLayer<float>;
template struct Conv1dLayer<double>;
template struct Conv2dLayer<float>;
template struct Conv2dLayer<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct GruCell<float>;
template struct GruCell<double>;
template struct BiGru<float>;
template struct BiGru<double>;

}  // namespace olhtr::nn
