// SPDX-License-Identifier: Apache-2.0
//
// Encoders, alignment module and decoder.

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "olhtr/data/synth.hpp"
#include "olhtr/decoder.hpp"
#include "olhtr/encoders.hpp"
#include "olhtr/model.hpp"
#include "olhtr/p2sa.hpp"
#include "support.hpp"

using namespace olhtr;
using namespace olhtr::test;
using data::PenPoint;
using data::TrajectorySequence;

namespace {

TrajectorySequence line_sequence(std::size_t T, double dx = 1.0) {
  TrajectorySequence seq{"line", {}, "a"};
  for (std::size_t t = 0; t < T; ++t) seq.points.push_back({dx * static_cast<double>(t), 16.0, 1});
  return seq;
}

template <typename T>
void fill(ad::ParamList<T>& params, T value) {
  for (auto& p : params)
    for (auto& v : p.tensor.mutable_data()) v = value;
}

template <typename T>
void zero_biases(ad::ParamList<T>& params) {
  for (auto& p : params) {
    const auto& n = p.name;
    if (n.ends_with(".bias") || n.ends_with(".b_ih") || n.ends_with(".b_hh"))
      for (auto& v : p.tensor.mutable_data()) v = T(0);
  }
}

data::TrajectorySequence synth_one(const std::u32string& symbols, std::uint64_t seed) {
  data::GlyphBank bank(symbols);
  data::SynthOptions opts;
  opts.count = 1;
  Rng rng(seed);
  return data::synth_generate(bank, opts, rng).front();
}

}  // namespace

// ---------------------------------------------------------------- encoders

TEST_CASE("trajectory encoder: 64 points give 8 frames of width 320") {
  EncoderConfig cfg;
  cfg.resolve();
  nn::ParamInit init(1);
  TrajectoryConvEncoder<float> enc(cfg, init);
  auto f = enc(line_sequence(64));
  CHECK(f.frames() == 8);
  CHECK(f.width() == 320);
  CHECK(f.positions.size() == 8);
  CHECK(enc(line_sequence(63)).frames() == 8);
  CHECK(enc(line_sequence(65)).frames() == 9);
  CHECK(enc(line_sequence(3)).frames() == 1);
  CHECK_THROWS(enc(TrajectorySequence{"x", {{0, 0, 1}}, "a"}));
}

TEST_CASE("trajectory frame positions are window means and increase along a stroke") {
  auto [input, pos] = trajectory_input<double>(line_sequence(20, 2.0));
  REQUIRE(pos.size() == 3);
  CHECK(pos[0][0] == doctest::Approx(7.0));  // mean of 0, 2, ..., 14
  CHECK(pos[2][0] == doctest::Approx((32 + 34 + 36 + 38 + 38 * 4) / 8.0));  // padded by repeating the last point
  for (std::size_t i = 1; i < pos.size(); ++i) CHECK(pos[i][0] > pos[i - 1][0]);
  CHECK(input.shape() == ad::Shape{24, 3});
  CHECK(input[23 * 3 + 0] == doctest::Approx(38.0 / 32.0));
  CHECK(input[23 * 3 + 1] == doctest::Approx(0.5));
}

TEST_CASE("BiGRU keeps frames and width") {
  nn::ParamInit init(2);
  nn::BiGru<float> gru(320, 2, init);
  Rng rng(2);
  FeatureSequence<float> f{random_tensor<float>({5, 320}, rng), {}};
  auto out = encode_bigru(f, gru);
  CHECK(out.values.shape() == ad::Shape{5, 320});
}

TEST_CASE("BiGRU with zero parameters maps zeros to zeros") {
  nn::ParamInit init(3);
  nn::BiGru<double> gru(8, 2, init);
  ad::ParamList<double> params;
  gru.collect(params, "g");
  fill(params, 0.0);
  auto out = gru(ad::Tensor<double>::zeros({6, 8}));
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("BiGRU reversal symmetry under shared per-direction parameters") {
  nn::ParamInit init(4);
  nn::BiGru<double> gru(6, 1, init);
  auto& fwd = gru.layers[0][0];
  auto& bwd = gru.layers[0][1];
  for (auto [src, dst] : {std::pair{fwd.w_ih, bwd.w_ih}, std::pair{fwd.w_hh, bwd.w_hh}, std::pair{fwd.b_ih, bwd.b_ih},
                          std::pair{fwd.b_hh, bwd.b_hh}})
    std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
  Rng rng(4);
  const std::size_t L = 5, H = 3;
  auto x = random_tensor<double>({L, 6}, rng);
  std::vector<double> rev(L * 6);
  for (std::size_t t = 0; t < L; ++t)
    std::copy_n(x.data().begin() + static_cast<long>((L - 1 - t) * 6), 6, rev.begin() + static_cast<long>(t * 6));
  auto a = gru(x);
  auto b = gru(ad::Tensor<double>::from({L, 6}, rev));
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t k = 0; k < H; ++k) {
      CHECK(b[t * 2 * H + k] == doctest::Approx(a[(L - 1 - t) * 2 * H + H + k]).epsilon(1e-14));
      CHECK(b[t * 2 * H + H + k] == doctest::Approx(a[(L - 1 - t) * 2 * H + k]).epsilon(1e-14));
    }
}

TEST_CASE("image encoder: W = 64 gives 8 frames; height must be 32") {
  EncoderConfig cfg = small_encoder(16);
  cfg.resolve();
  nn::ParamInit init(5);
  ImageEncoder<float> enc(cfg, init);
  data::RenderedImage img{64, std::vector<float>(32 * 64, 0.0f)};
  img.pixels[5 * 64 + 9] = 1.0f;
  auto [conv, gru] = enc(img);
  CHECK(conv.values.shape() == ad::Shape{8, 16});
  CHECK(gru.values.shape() == ad::Shape{8, 16});
  CHECK_FALSE(conv.has_positions());
  CHECK_THROWS(enc.cnn.forward(ad::Tensor<float>::zeros({1, 16, 64})));
  CHECK_THROWS(enc.cnn.forward(ad::Tensor<float>::zeros({1, 32, 60})));
  CHECK_THROWS(enc(data::RenderedImage{64, std::vector<float>(16 * 64, 0.0f)}));
}

TEST_CASE("image encoder at full default width") {
  EncoderConfig cfg;
  cfg.resolve();
  nn::ParamInit init(6);
  ImageConvEncoder<float> cnn(cfg, init);
  data::RenderedImage img{64, std::vector<float>(32 * 64, 0.0f)};
  CHECK(cnn(img).shape() == ad::Shape{8, 320});
}

TEST_CASE("blank image with zero biases gives zero conv features") {
  EncoderConfig cfg = small_encoder(16);
  cfg.resolve();
  nn::ParamInit init(7);
  ImageConvEncoder<double> cnn(cfg, init);
  ad::ParamList<double> params;
  cnn.collect(params, "c");
  zero_biases(params);
  auto out = cnn(data::RenderedImage{32, std::vector<float>(32 * 32, 0.0f)});
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("image conv features shift by one frame when the ink shifts by 8 px") {
  EncoderConfig cfg = small_encoder(8);
  cfg.resolve();
  nn::ParamInit init(8);
  ImageConvEncoder<double> cnn(cfg, init);
  const std::size_t W = 256;
  data::RenderedImage a{W, std::vector<float>(32 * W, 0.0f)}, b = a;
  Rng rng(8);
  for (std::size_t r = 0; r < 32; ++r)
    for (std::size_t c = 96; c < 150; ++c)
      if (uniform01(rng) < 0.3) {
        a.pixels[r * W + c] = 1.0f;
        b.pixels[r * W + c + 8] = 1.0f;
      }
  auto fa = cnn(a), fb = cnn(b);
  const std::size_t frames = W / 8, d = 8;
  // Receptive field is under 80 px, so columns 6 .. frames - 7 never see a border.
  for (std::size_t k = 6; k + 7 < frames; ++k)
    for (std::size_t j = 0; j < d; ++j) CHECK(fb[(k + 1) * d + j] == doctest::Approx(fa[k * d + j]).epsilon(1e-12));
}

TEST_CASE("encoder outputs stay finite for large inputs") {
  ModelConfig cfg = small_model(16);
  Model<float> model(cfg, data::Vocabulary(U"ab"));
  Rng rng(9);
  TrajectorySequence seq{"big", {}, "a"};
  for (int t = 0; t < 100; ++t) seq.points.push_back({uniform(rng, -1e6, 1e6), uniform(rng, -1e6, 1e6), t % 2});
  auto f = model.trajectory.encode(seq);
  for (float v : f.encoded.values.data()) CHECK(std::isfinite(v));
  for (float v : f.p2s.data()) CHECK(std::isfinite(v));
  data::RenderedImage img{64, std::vector<float>(32 * 64, 1.0f)};
  auto [conv, gru] = model.image.encoder(img);
  for (float v : conv.values.data()) CHECK(std::isfinite(v));
  for (float v : gru.values.data()) CHECK(std::isfinite(v));
}

TEST_CASE("encoder config contracts") {
  EncoderConfig bad;
  bad.conv1d_strides = {1, 2, 2, 2, 1, 2};
  CHECK_THROWS_AS(bad.resolve(), ConfigError);
  EncoderConfig odd;
  odd.d = 322;
  CHECK_THROWS_AS(odd.resolve(), ConfigError);
  EncoderConfig cnn;
  cnn.cnn2d_strides = {{2, 1}, {2, 2}, {2, 2}, {2, 2}, {1, 1}};
  CHECK_THROWS_AS(cnn.resolve(), ConfigError);
  P2saConfig p;
  p.heads = 3;
  CHECK_THROWS_AS(p.resolve(64), ConfigError);
}

// ---------------------------------------------------------------- p2sa

TEST_CASE("rope2d at the origin alternates 1, 0") {
  auto e = rope2d<double>({{0.0, 0.0}}, 16, 10000.0);
  for (std::size_t i = 0; i < 16; ++i) CHECK(e[i] == (i % 2 == 0 ? 1.0 : 0.0));
  CHECK_THROWS(rope2d<double>({{0.0, 0.0}}, 6, 10000.0));
}

TEST_CASE("rope2d frequencies follow pos / base^(2j / (d/2))") {
  const std::size_t d = 16;
  auto e = rope2d<double>({{3.0, 5.0}}, d, 10000.0);
  for (std::size_t j = 0; j < d / 4; ++j) {
    const double f = std::pow(10000.0, -2.0 * static_cast<double>(j) / (d / 2.0));
    CHECK(e[2 * j] == doctest::Approx(std::cos(3.0 * f)));
    CHECK(e[2 * j + 1] == doctest::Approx(std::sin(3.0 * f)));
    CHECK(e[d / 2 + 2 * j] == doctest::Approx(std::cos(5.0 * f)));
    CHECK(e[d / 2 + 2 * j + 1] == doctest::Approx(std::sin(5.0 * f)));
  }
}

TEST_CASE("transformer layer keeps shape and attention rows sum to 1") {
  nn::ParamInit init(10);
  TransformerLayer<double> layer(16, 4, 32, init);
  Rng rng(10);
  auto x = random_tensor<double>({7, 16}, rng, -3, 3);
  std::vector<ad::Tensor<double>> att;
  auto y = layer(x, &att);
  CHECK(y.shape() == ad::Shape{7, 16});
  REQUIRE(att.size() == 4);
  for (const auto& a : att) {
    REQUIRE(a.shape() == ad::Shape{7, 7});
    for (std::size_t r = 0; r < 7; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 7; ++c) {
        CHECK(a[r * 7 + c] >= 0.0);
        s += a[r * 7 + c];
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-frame self-attention reduces to the value path") {
  nn::ParamInit init(11);
  TransformerLayer<double> layer(8, 2, 16, init);
  Rng rng(11);
  auto x = random_tensor<double>({1, 8}, rng);
  auto y = layer(x);
  auto h = ad::add(x, layer.output()(layer.value()(layer.norm_attn()(x))));
  auto expect = ad::add(h, layer.ff_out()(ad::relu(layer.ff_in()(layer.norm_ff()(h)))));
  for (std::size_t i = 0; i < 8; ++i) CHECK(y[i] == doctest::Approx(expect[i]).epsilon(1e-13));
}

TEST_CASE("P2SA preserves shape; without the transformer it returns F_conv + code") {
  P2saConfig cfg;
  cfg.heads = 4;
  cfg.resolve(32);
  nn::ParamInit init(12);
  P2sa<double> module(32, cfg, init);
  CHECK(module.layers().size() == 3);
  Rng rng(12);
  FeatureSequence<double> f{random_tensor<double>({5, 32}, rng), {}};
  for (int i = 0; i < 5; ++i) f.positions.push_back({8.0 * i + 3, 12.0});
  CHECK(module(f).shape() == ad::Shape{5, 32});

  cfg.use_transformer = false;
  nn::ParamInit init2(12);
  P2sa<double> bare(32, cfg, init2);
  CHECK(bare.layers().empty());
  auto out = bare(f);
  auto code = rope2d<double>(f.positions, 32, 10000.0);
  for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == f.values[i] + code[i]);

  f.positions.clear();
  CHECK_THROWS(module(f));
}

TEST_CASE("sampling: grid points, midpoint, clamping") {
  auto f = ad::Tensor<double>::from({3, 2}, {0, 0, 1, 1, 5, -5});
  auto s = sample_image_features(f, {{8.0, 0}, {4.0, 0}, {-3.0, 0}, {100.0, 0}, {12.0, 0}});
  const std::vector<double> expect{1, 1, 0.5, 0.5, 0, 0, 5, -5, 3, -2};
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(s[i] == expect[i]);
}

TEST_CASE("sampling is linear in the feature map") {
  Rng rng(13);
  auto a = random_tensor<double>({6, 4}, rng, -1, 1, false), b = random_tensor<double>({6, 4}, rng, -1, 1, false);
  std::vector<std::array<double, 2>> pos;
  for (int i = 0; i < 20; ++i) pos.push_back({uniform(rng, -10, 60), 0});
  const double alpha = 0.7, beta = -1.3;
  auto lhs = sample_image_features(ad::add(ad::scale(a, alpha), ad::scale(b, beta)), pos);
  auto sa = sample_image_features(a, pos), sb = sample_image_features(b, pos);
  for (std::size_t i = 0; i < lhs.numel(); ++i)
    CHECK(lhs[i] == doctest::Approx(alpha * sa[i] + beta * sb[i]).epsilon(1e-13));
}

TEST_CASE("align loss values") {
  Rng rng(14);
  auto x = random_tensor<double>({4, 6}, rng);
  CHECK(align_loss(x, x, true).item() == 0.0);
  auto x1 = ad::add(x, ad::Tensor<double>::full({4, 6}, 1.0));
  CHECK(align_loss(x1, x, true).item() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS(align_loss(x, random_tensor<double>({3, 6}, rng), true));
}

TEST_CASE("align loss stop-gradient blocks the image side only") {
  Rng rng(15);
  auto p2s = random_tensor<double>({4, 6}, rng);
  auto f2d = random_tensor<double>({3, 6}, rng);
  const std::vector<std::array<double, 2>> pos{{1, 0}, {9, 0}, {13, 0}, {20, 0}};
  align_loss(p2s, sample_image_features(f2d, pos), true).backward();
  CHECK(p2s.has_grad());
  CHECK_FALSE(f2d.has_grad());
  p2s.zero_grad();
  align_loss(p2s, sample_image_features(f2d, pos), false).backward();
  auto g = f2d.grad();
  CHECK(std::any_of(g.begin(), g.end(), [](double v) { return v != 0.0; }));
}

TEST_CASE("merge with a zero alignment output reduces to the plain BiGRU") {
  nn::ParamInit init(16);
  nn::BiGru<double> gru(8, 2, init);
  Rng rng(16);
  FeatureSequence<double> f{random_tensor<double>({4, 8}, rng), {{1, 1}, {2, 2}, {3, 3}, {4, 4}}};
  auto merged = merge(f, ad::Tensor<double>::zeros({4, 8}), gru);
  auto plain = encode_bigru(f, gru);
  CHECK(merged.values.shape() == ad::Shape{4, 8});
  CHECK(merged.positions == f.positions);
  for (std::size_t i = 0; i < plain.values.numel(); ++i) CHECK(merged.values[i] == plain.values[i]);

  auto bump = ad::Tensor<double>::zeros({4, 8});
  bump.mutable_data()[5] = 0.1;
  auto moved = merge(f, bump, gru);
  double diff = 0;
  for (std::size_t i = 0; i < plain.values.numel(); ++i) diff += std::abs(moved.values[i] - plain.values[i]);
  CHECK(diff > 1e-6);
}

// ---------------------------------------------------------------- decoder

TEST_CASE("decoder step probabilities form a distribution") {
  nn::ParamInit init(17);
  AttentionDecoder<float> dec(16, 9, init);
  Rng rng(17);
  auto f = random_tensor<float>({6, 16}, rng, -1, 1, false);
  auto mem = dec.prepare(f);
  auto state = dec.initial_state();
  int prev = data::Vocabulary::kSos;
  for (int t = 0; t < 4; ++t) {
    auto r = dec.step(prev, state, mem);
    double s = 0;
    for (float p : r.probabilities.data()) {
      CHECK(p >= 0.0f);
      s += p;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    state = r.state;
    prev = 3 + t;
  }
  CHECK(state.step == 4);
  CHECK_THROWS(dec.step(9, state, mem));
  CHECK_THROWS(dec.step(-1, state, mem));
  CHECK_THROWS(dec.prepare(random_tensor<float>({3, 8}, rng)));
}

TEST_CASE("one encoder frame: the context is that frame") {
  nn::ParamInit init(18);
  AttentionDecoder<double> dec(8, 6, init);
  Rng rng(18);
  auto f = random_tensor<double>({1, 8}, rng, -1, 1, false);
  auto r = dec.step(4, dec.initial_state(), dec.prepare(f));
  CHECK(r.attention.shape() == ad::Shape{1, 1});
  CHECK(r.attention[0] == 1.0);
  auto y = ad::embedding(dec.embedding(), {4});
  auto expect = dec.cell().step(ad::add(y, f), ad::Tensor<double>::zeros({1, 8}));
  for (std::size_t i = 0; i < 8; ++i) CHECK(r.state.hidden[i] == doctest::Approx(expect[i]).epsilon(1e-14));
}

TEST_CASE("decoder attention matches a loop oracle") {
  const std::size_t d = 8, F = 5, V = 7;
  nn::ParamInit init(19);
  AttentionDecoder<double> dec(d, V, init);
  Rng rng(19);
  auto f = random_tensor<double>({F, d}, rng, -2, 2, false);
  auto h = random_tensor<double>({1, d}, rng, -1, 1, false);
  const int prev = 5;
  auto r = dec.step(prev, DecoderState<double>{h, 0, {}}, dec.prepare(f));

  auto linear = [](const nn::Linear<double>& L, const std::vector<double>& x) {
    const std::size_t in = L.weight.dim(0), out = L.weight.dim(1);
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      y[o] = L.bias[o];
      for (std::size_t i = 0; i < in; ++i) y[o] += x[i] * L.weight[i * out + o];
    }
    return y;
  };
  std::vector<double> yq(d);
  for (std::size_t k = 0; k < d; ++k) yq[k] = dec.embedding()[prev * d + k] + h[k];
  const auto q = linear(dec.query(), yq);
  std::vector<double> scores(F);
  for (std::size_t j = 0; j < F; ++j) {
    std::vector<double> row(f.data().begin() + static_cast<long>(j * d), f.data().begin() + static_cast<long>((j + 1) * d));
    const auto k = linear(dec.key(), row);
    scores[j] = 0;
    for (std::size_t c = 0; c < d; ++c) scores[j] += q[c] * k[c];
    scores[j] /= std::sqrt(static_cast<double>(d));
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0;
  for (auto& s : scores) z += (s = std::exp(s - m));
  for (std::size_t j = 0; j < F; ++j) CHECK(r.attention[j] == doctest::Approx(scores[j] / z).epsilon(1e-13));
}

TEST_CASE("greedy: an eos-dominated output gives an empty transcript") {
  nn::ParamInit init(20);
  AttentionDecoder<float> dec(8, 6, init);
  ad::Tensor<float> bias = dec.output().bias;
  bias.mutable_data()[data::Vocabulary::kEos] = 100.f;
  Rng rng(20);
  CHECK(dec.greedy(random_tensor<float>({4, 8}, rng), 10).empty());
}

TEST_CASE("greedy: never longer than max_len and never emits reserved ids") {
  nn::ParamInit init(21);
  AttentionDecoder<float> dec(8, 6, init);
  ad::Tensor<float> bias = dec.output().bias;
  bias.mutable_data()[data::Vocabulary::kEos] = -100.f;
  bias.mutable_data()[data::Vocabulary::kPad] = 100.f;
  bias.mutable_data()[data::Vocabulary::kSos] = 100.f;
  Rng rng(21);
  auto f = random_tensor<float>({4, 8}, rng);
  for (std::size_t n : {1u, 3u, 17u}) {
    auto out = dec.greedy(f, n);
    CHECK(out.size() == n);
    for (int t : out) CHECK(t >= data::Vocabulary::kReserved);
  }
  CHECK_THROWS(dec.greedy(f, 0));
}

TEST_CASE("greedy agrees with exhaustive 2-step enumeration on a 3-symbol vocabulary") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    nn::ParamInit init(100 + seed);
    AttentionDecoder<double> dec(8, 6, init);
    Rng rng(seed);
    auto f = random_tensor<double>({3, 8}, rng, -2, 2, false);
    auto mem = dec.prepare(f);
    const std::vector<int> eligible{2, 3, 4, 5};
    // Enumerate all length-2 continuations and keep the one whose every step
    // is the most probable eligible token.
    auto r1 = dec.step(data::Vocabulary::kSos, dec.initial_state(), mem);
    std::vector<int> best;
    double best_score = -1;
    for (int a : eligible) {
      for (int b : eligible) {
        bool step_optimal = true;
        for (int o : eligible) step_optimal &= r1.probabilities[a] >= r1.probabilities[o];
        if (!step_optimal) continue;
        std::vector<int> seq{a};
        double score = r1.probabilities[a];
        if (a != data::Vocabulary::kEos) {
          auto r2 = dec.step(a, r1.state, mem);
          for (int o : eligible) step_optimal &= r2.probabilities[b] >= r2.probabilities[o];
          if (!step_optimal) continue;
          seq.push_back(b);
          score *= r2.probabilities[b];
        }
        if (score > best_score) best_score = score, best = seq;
      }
    }
    REQUIRE_FALSE(best.empty());
    std::vector<int> expect;
    for (int t : best)
      if (t != data::Vocabulary::kEos) expect.push_back(t);
    CHECK(dec.greedy(f, 2) == expect);
  }
}

TEST_CASE("cross entropy: uniform logits give ln V per step") {
  nn::ParamInit init(22);
  AttentionDecoder<double> dec(8, 7, init);
  ad::Tensor<double> w = dec.output().weight, b = dec.output().bias;
  for (auto& v : w.mutable_data()) v = 0;
  for (auto& v : b.mutable_data()) v = 0;
  Rng rng(22);
  auto f = random_tensor<double>({4, 8}, rng);
  CHECK(dec.loss(f, {3, 4, 6, 2}).item() == doctest::Approx(std::log(7.0)).epsilon(1e-14));
  b.mutable_data()[data::Vocabulary::kEos] = 1000;
  CHECK(dec.loss(f, {2}).item() == doctest::Approx(0.0));
}

TEST_CASE("cross entropy equals a step-by-step -log p oracle") {
  nn::ParamInit init(23);
  AttentionDecoder<double> dec(8, 7, init);
  Rng rng(23);
  auto f = random_tensor<double>({5, 8}, rng);
  const std::vector<int> target{5, 3, 6, 6, 2};
  auto mem = dec.prepare(f);
  auto state = dec.initial_state();
  int prev = data::Vocabulary::kSos;
  double acc = 0;
  for (int t : target) {
    auto r = dec.step(prev, state, mem);
    acc -= std::log(r.probabilities[t]);
    state = r.state;
    prev = t;
  }
  CHECK(dec.loss(f, target).item() == doctest::Approx(acc / target.size()).epsilon(1e-13));
  CHECK_THROWS(dec.loss(f, {}));
  CHECK_THROWS(dec.loss(f, {3, 4}));
  CHECK_THROWS(dec.loss(f, {3, 9, 2}));
}

TEST_CASE("overfit sanity: one fixed sample, d = 64, loss < 0.01 within 300 steps") {
  ModelConfig cfg = small_model(64, 3);
  cfg.p2sa.heads = 4;
  const auto seq = synth_one(U"abcdefghi", 5);
  Model<float> model(cfg, data::Vocabulary(U"abcdefghi"));
  ad::ParamList<float> params;
  model.trajectory.collect(params);
  ad::AdamState<float> adam;
  const auto target = with_eos(model.vocab.encode(seq.text));
  double loss = 1e9;
  int steps = 0;
  for (; steps < 300 && loss >= 0.01; ++steps) {
    auto l = model.trajectory.decoder.loss(model.trajectory.encode(seq).encoded.values, target);
    loss = l.item();
    ad::zero_grads(params);
    l.backward();
    ad::clip_grad_norm(params, 5.0);
    ad::adam_step(params, adam, 3e-3);
  }
  CAPTURE(steps);
  CHECK(loss < 0.01);
  CHECK(model.trajectory.recognize(seq) == model.vocab.encode(seq.text));
}
