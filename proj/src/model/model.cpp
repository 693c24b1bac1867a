// SPDX-License-Identifier: Apache-2.0

#include "olhtr/model.hpp"

#include <stdexcept>

namespace olhtr {

namespace {

enum class Component : std::uint64_t { kConv1d = 1, kGru1d, kP2sa, kDecoder1d, kEncoder2d, kDecoder2d };

nn::ParamInit component_init(std::uint64_t seed, Component c) {
  return nn::ParamInit(seed * 0x100000001B3ULL + static_cast<std::uint64_t>(c));
}

}  // namespace

template <typename T>
TrajectoryStream<T>::TrajectoryStream(const ModelConfig& cfg, std::size_t vocab_size)
    : p2sa_cfg(cfg.p2sa), max_len(cfg.decoder.max_len) {
  auto conv_init = component_init(cfg.seed, Component::kConv1d);
  auto gru_init = component_init(cfg.seed, Component::kGru1d);
  auto p2sa_init = component_init(cfg.seed, Component::kP2sa);
  auto dec_init = component_init(cfg.seed, Component::kDecoder1d);
  conv = TrajectoryConvEncoder<T>(cfg.encoder, conv_init);
  gru = nn::BiGru<T>(cfg.encoder.d, cfg.encoder.gru_layers, gru_init);
  p2sa = P2sa<T>(cfg.encoder.d, cfg.p2sa, p2sa_init);
  decoder = AttentionDecoder<T>(cfg.encoder.d, vocab_size, dec_init);
}

template <typename T>
TrajectoryForward<T> TrajectoryStream<T>::encode(const data::TrajectorySequence& normalized) const {
  TrajectoryForward<T> out;
  out.conv = conv(normalized);
  if (p2sa_cfg.active()) {
    out.p2s = p2sa(out.conv);
    out.encoded = merge(out.conv, out.p2s, gru);
  } else {
    out.encoded = encode_bigru(out.conv, gru);
  }
  return out;
}

template <typename T>
std::vector<int> TrajectoryStream<T>::recognize(const data::TrajectorySequence& normalized) const {
  ad::NoGradGuard no_grad;
  return decoder.greedy(encode(normalized).encoded.values, max_len);
}

template <typename T>
void TrajectoryStream<T>::collect(ad::ParamList<T>& out) const {
  conv.collect(out, "enc1d.conv");
  gru.collect(out, "enc1d.gru");
  p2sa.collect(out, "p2sa");
  decoder.collect(out, "dec1d");
}

template <typename T>
ImageStream<T>::ImageStream(const ModelConfig& cfg, std::size_t vocab_size) {
  auto enc_init = component_init(cfg.seed, Component::kEncoder2d);
  auto dec_init = component_init(cfg.seed, Component::kDecoder2d);
  encoder = ImageEncoder<T>(cfg.encoder, enc_init);
  decoder = AttentionDecoder<T>(cfg.encoder.d, vocab_size, dec_init);
}

template <typename T>
void ImageStream<T>::collect(ad::ParamList<T>& out) const {
  encoder.collect(out, "enc2d");
  decoder.collect(out, "dec2d");
}

template <typename T>
Model<T>::Model(ModelConfig cfg, data::Vocabulary vocab_) : config(std::move(cfg)), vocab(std::move(vocab_)) {
  config.resolve();
  trajectory = TrajectoryStream<T>(config, vocab.size());
  image = ImageStream<T>(config, vocab.size());
}

template <typename T>
ad::ParamList<T> Model<T>::parameters() const {
  ad::ParamList<T> out;
  trajectory.collect(out);
  image.collect(out);
  return out;
}

template <typename T>
LossBreakdown<T> sample_losses(const Model<T>& model, const data::TrajectorySequence& seq,
                               const data::RenderedImage& image, double lambda) {
  const std::vector<int> target = with_eos(model.vocab.encode(seq.text));
  TrajectoryForward<T> traj = model.trajectory.encode(seq);

  LossBreakdown<T> out;
  out.traj = model.trajectory.decoder.loss(traj.encoded.values, target);
  auto [f2d_conv, f2d_gru] = model.image.encoder(image);
  out.image = model.image.decoder.loss(f2d_gru.values, target);
  const auto& p2sa = model.config.p2sa;
  if (p2sa.use_align_loss) {
    Tensor<T> sampled = sample_image_features(f2d_conv.values, traj.conv.positions);
    out.align = align_loss(traj.p2s, sampled, p2sa.use_stop_gradient);
  } else {
    out.align = Tensor<T>::scalar(T(0));
  }
  out.total = ad::add(ad::add(out.traj, out.image), ad::scale(out.align, static_cast<T>(lambda)));
  return out;
}

template <typename T>
LossBreakdown<T> total_loss(const Model<T>& model, const std::vector<data::TrajectorySequence>& batch,
                            double lambda) {
  if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
  LossBreakdown<T> acc;
  for (const auto& seq : batch) {
    LossBreakdown<T> s = sample_losses(model, seq, data::render(seq), lambda);
    if (!acc.traj.defined()) {
      acc = s;
    } else {
      acc.traj = ad::add(acc.traj, s.traj);
      acc.image = ad::add(acc.image, s.image);
      acc.align = ad::add(acc.align, s.align);
    }
  }
  const T inv = static_cast<T>(1.0 / static_cast<double>(batch.size()));
  LossBreakdown<T> out;
  out.traj = ad::scale(acc.traj, inv);
  out.image = ad::scale(acc.image, inv);
  out.align = ad::scale(acc.align, inv);
  out.total = ad::add(ad::add(out.traj, out.image), ad::scale(out.align, static_cast<T>(lambda)));
  return out;
}

std::string infer(const TrajectoryStream<float>& stream, const data::Vocabulary& vocab,
                  const data::TrajectorySequence& seq) {
  return vocab.decode(stream.recognize(data::normalize(seq)));
}

template struct TrajectoryStream<float>;
template struct TrajectoryStream<double>;
template struct ImageStream<float>;
template struct ImageStream<double>;
template struct Model<float>;
template struct Model<double>;
template LossBreakdown<float> sample_losses(const Model<float>&, const data::TrajectorySequence&,
                                            const data::RenderedImage&, double);
template LossBreakdown<double> sample_losses(const Model<double>&, const data::TrajectorySequence&,
                                             const data::RenderedImage&, double);
template LossBreakdown<float> total_loss(const Model<float>&, const std::vector<data::TrajectorySequence>&, double);
template LossBreakdown<double> total_loss(const Model<double>&, const std::vector<data::TrajectorySequence>&, double);

}  // namespace olhtr
