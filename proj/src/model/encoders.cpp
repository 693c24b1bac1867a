// SPDX-License-Identifier: Apache-2.0

#include "olhtr/encoders.hpp"

#include <stdexcept>

namespace olhtr {

template <typename T>
std::pair<Tensor<T>, std::vector<std::array<double, 2>>> trajectory_input(const data::TrajectorySequence& seq) {
  const std::size_t length = seq.points.size();
  if (length < 2) throw std::invalid_argument("trajectory encoder: need at least 2 points");
  const std::size_t padded = std::max<std::size_t>(8, (length + 7) / 8 * 8);
  const double scale = 1.0 / static_cast<double>(data::kImageHeight);

  std::vector<T> rows(padded * 3);
  std::vector<std::array<double, 2>> positions(padded / 8, {0.0, 0.0});
  for (std::size_t t = 0; t < padded; ++t) {
    const auto& p = seq.points[std::min(t, length - 1)];
    rows[t * 3 + 0] = static_cast<T>(p.x * scale);
    rows[t * 3 + 1] = static_cast<T>(p.y * scale);
    rows[t * 3 + 2] = static_cast<T>(p.pen);
    positions[t / 8][0] += p.x / 8.0;
    positions[t / 8][1] += p.y / 8.0;
  }
  return {Tensor<T>::from({padded, 3}, std::move(rows)), std::move(positions)};
}

template <typename T>
TrajectoryConvEncoder<T>::TrajectoryConvEncoder(const EncoderConfig& cfg, nn::ParamInit& init) {
  std::size_t in = 3;
  for (std::size_t i = 0; i < cfg.conv1d_channels.size(); ++i) {
    layers_.emplace_back(in, cfg.conv1d_channels[i], cfg.conv1d_kernel, cfg.conv1d_strides[i], cfg.conv1d_kernel / 2,
                         init);
    in = cfg.conv1d_channels[i];
  }
}

template <typename T>
Tensor<T> TrajectoryConvEncoder<T>::forward(const Tensor<T>& input) const {
  Tensor<T> h = input;
  for (const auto& layer : layers_) h = ad::relu(layer(h));
  return h;
}

template <typename T>
FeatureSequence<T> TrajectoryConvEncoder<T>::operator()(const data::TrajectorySequence& seq) const {
  auto [input, positions] = trajectory_input<T>(seq);
  FeatureSequence<T> out{forward(input), std::move(positions)};
  if (out.frames() != out.positions.size()) throw std::logic_error("trajectory encoder: frame clock mismatch");
  return out;
}

template <typename T>
void TrajectoryConvEncoder<T>::collect(ad::ParamList<T>& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(out, prefix + "." + std::to_string(i));
}

template <typename T>
ResidualBlock<T>::ResidualBlock(std::size_t in, std::size_t out, std::array<std::size_t, 2> stride,
                                nn::ParamInit& init)
    : conv_a(in, out, 3, stride, 1, init), conv_b(out, out, 3, {1, 1}, 1, init) {
  if (in != out || stride[0] != 1 || stride[1] != 1) projection.emplace(in, out, 1, stride, 0, init);
}

template <typename T>
Tensor<T> ResidualBlock<T>::operator()(const Tensor<T>& x) const {
  Tensor<T> h = conv_b(ad::relu(conv_a(x)));
  return ad::relu(ad::add(h, projection ? (*projection)(x) : x));
}

template <typename T>
void ResidualBlock<T>::collect(ad::ParamList<T>& out, const std::string& prefix) const {
  conv_a.collect(out, prefix + ".a");
  conv_b.collect(out, prefix + ".b");
  if (projection) projection->collect(out, prefix + ".proj");
}

template <typename T>
ImageConvEncoder<T>::ImageConvEncoder(const EncoderConfig& cfg, nn::ParamInit& init)
    : stem_(1, cfg.cnn2d_stem, 3, cfg.cnn2d_strides[0], 1, init), norm_(cfg.d) {
  std::size_t in = cfg.cnn2d_stem;
  for (std::size_t s = 0; s < cfg.cnn2d_channels.size(); ++s) {
    for (std::size_t b = 0; b < cfg.cnn2d_blocks; ++b) {
      const auto stride = b == 0 ? cfg.cnn2d_strides[s + 1] : std::array<std::size_t, 2>{1, 1};
      blocks_.emplace_back(in, cfg.cnn2d_channels[s], stride, init);
      in = cfg.cnn2d_channels[s];
    }
  }
}

template <typename T>
Tensor<T> image_tensor(const data::RenderedImage& image) {
  std::vector<T> px(image.pixels.begin(), image.pixels.end());
  return Tensor<T>::from({1, data::RenderedImage::height, image.width}, std::move(px));
}

template <typename T>
Tensor<T> ImageConvEncoder<T>::forward(const Tensor<T>& image) const {
  if (image.rank() != 3 || image.dim(0) != 1 || image.dim(1) != data::kImageHeight)
    throw std::invalid_argument("image encoder: expected [1, 32, W] input, got " + ad::shape_str(image.shape()));
  if (image.dim(2) % 8 != 0) throw std::invalid_argument("image encoder: width must be a multiple of 8");
  Tensor<T> h = ad::relu(stem_(image));
  for (const auto& block : blocks_) h = block(h);
  if (h.dim(1) != 1) throw std::logic_error("image encoder: height not collapsed to 1");
  // [d, 1, W/8] -> [W/8, d]
  return norm_(ad::transpose(ad::reshape(h, {h.dim(0), h.dim(2)})));
}

template <typename T>
Tensor<T> ImageConvEncoder<T>::operator()(const data::RenderedImage& image) const {
  if (image.pixels.size() != data::RenderedImage::height * image.width)
    throw std::invalid_argument("image encoder: image must be 32 rows high");
  return forward(image_tensor<T>(image));
}

template <typename T>
void ImageConvEncoder<T>::collect(ad::ParamList<T>& out, const std::string& prefix) const {
  stem_.collect(out, prefix + ".stem");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(out, prefix + ".block" + std::to_string(i));
  norm_.collect(out, prefix + ".norm");
}

template <typename T>
ImageEncoder<T>::ImageEncoder(const EncoderConfig& cfg, nn::ParamInit& init)
    : cnn(cfg, init), gru(cfg.d, cfg.gru_layers, init) {}

template <typename T>
std::pair<FeatureSequence<T>, FeatureSequence<T>> ImageEncoder<T>::operator()(const data::RenderedImage& image) const {
  FeatureSequence<T> conv{cnn(image), {}};
  FeatureSequence<T> rec = encode_bigru(conv, gru);
  return {std::move(conv), std::move(rec)};
}

template <typename T>
void ImageEncoder<T>::collect(ad::ParamList<T>& out, const std::string& prefix) const {
  cnn.collect(out, prefix + ".cnn");
  gru.collect(out, prefix + ".gru");
}

template <typename T>
FeatureSequence<T> encode_bigru(const FeatureSequence<T>& feat, const nn::BiGru<T>& gru) {
  return {gru(feat.values), feat.positions};
}

#define OLHTR_INSTANTIATE(T)                                                                                      \
  template std::pair<Tensor<T>, std::vector<std::array<double, 2>>> trajectory_input<T>(                        \
      const data::TrajectorySequence&);                                                                           \
  template class TrajectoryConvEncoder<T>;                                                                        \
  template struct ResidualBlock<T>;                                                                               \
  template class ImageConvEncoder<T>;                                                                             \
  template Tensor<T> image_tensor<T>(const data::RenderedImage&);                                                 \
  template struct ImageEncoder<T>;                                                                                \
  template FeatureSequence<T> encode_bigru<T>(const FeatureSequence<T>&, const nn::BiGru<T>&);

OLHTR_INSTANTIATE(float)
OLHTR_INSTANTIATE(double)

}  // namespace olhtr
