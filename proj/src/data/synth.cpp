// SPDX-License-Identifier: Apache-2.0

#include "olhtr/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "olhtr/data/utf8.hpp"

namespace olhtr::data {

namespace {

constexpr double kGlyphWidth = 0.6;
constexpr double kSpaceAdvance = 0.35;
constexpr double kMinGlyphDistance = 0.06;

Vertex anchor(std::size_t node) {
  return {kGlyphWidth * 0.5 * static_cast<double>(node % 3), 0.5 * static_cast<double>(node / 3)};
}

std::vector<Vertex> segment_points(const Vertex& a, const Vertex& b, double spacing, bool include_end) {
  const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing)));
  std::vector<Vertex> out;
  for (std::size_t i = 0; i < n + (include_end ? 1 : 0); ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n);
    out.push_back({a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])});
  }
  return out;
}

std::vector<Vertex> resample_stroke(const std::vector<Vertex>& stroke, double spacing) {
  std::vector<Vertex> out;
  if (stroke.size() == 1) return stroke;
  for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
    auto seg = segment_points(stroke[i], stroke[i + 1], spacing, i + 2 == stroke.size());
    out.insert(out.end(), seg.begin(), seg.end());
  }
  return out;
}

double mean_nearest(const std::vector<Vertex>& a, const std::vector<Vertex>& b) {
  double total = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
    total += best;
  }
  return total / static_cast<double>(a.size());
}

double chamfer(const std::vector<Vertex>& a, const std::vector<Vertex>& b) {
  return 0.5 * (mean_nearest(a, b) + mean_nearest(b, a));
}

Glyph random_glyph(Rng& rng) {
  Glyph g;
  g.width = kGlyphWidth;
  // Main stroke: a walk over distinct consecutive anchors that touches the
  // top and bottom rows so every glyph spans the full height.
  while (true) {
    const std::size_t vertices = 4 + uniform_index(rng, 3);
    std::vector<std::size_t> nodes{uniform_index(rng, 9)};
    while (nodes.size() < vertices) {
      const std::size_t next = uniform_index(rng, 9);
      if (next != nodes.back()) nodes.push_back(next);
    }
    const bool top = std::any_of(nodes.begin(), nodes.end(), [](std::size_t n) { return n / 3 == 0; });
    const bool bottom = std::any_of(nodes.begin(), nodes.end(), [](std::size_t n) { return n / 3 == 2; });
    if (!top || !bottom) continue;
    std::vector<Vertex> stroke;
    for (std::size_t n : nodes) stroke.push_back(anchor(n));
    g.strokes.push_back(std::move(stroke));
    break;
  }
  if (uniform01(rng) < 0.35) {
    const std::size_t a = uniform_index(rng, 9);
    std::size_t b = uniform_index(rng, 9);
    while (b == a) b = uniform_index(rng, 9);
    g.strokes.push_back({anchor(a), anchor(b)});
  }
  return g;
}

}  // namespace

std::vector<Vertex> resample_strokes(const std::vector<std::vector<Vertex>>& strokes, double spacing) {
  std::vector<Vertex> out;
  for (const auto& s : strokes) {
    auto pts = resample_stroke(s, spacing);
    out.insert(out.end(), pts.begin(), pts.end());
  }
  return out;
}

GlyphBank::GlyphBank(std::u32string symbols) : symbols_(std::move(symbols)) {
  std::sort(symbols_.begin(), symbols_.end());
  if (std::adjacent_find(symbols_.begin(), symbols_.end()) != symbols_.end())
    throw std::invalid_argument("glyph bank: duplicate symbols");
  std::vector<std::vector<Vertex>> clouds;
  for (char32_t c : symbols_) {
    if (c == U' ') {
      glyphs_.push_back(Glyph{{}, kSpaceAdvance});
      continue;
    }
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(c) + 1) + attempt);
      Glyph g = random_glyph(rng);
      auto cloud = resample_strokes(g.strokes, 0.05);
      const bool distinct = std::all_of(clouds.begin(), clouds.end(), [&](const auto& other) {
        return chamfer(cloud, other) > kMinGlyphDistance;
      });
      if (!distinct) continue;
      clouds.push_back(std::move(cloud));
      glyphs_.push_back(std::move(g));
      break;
    }
  }
}

const Glyph& GlyphBank::glyph(char32_t symbol) const {
  auto it = std::lower_bound(symbols_.begin(), symbols_.end(), symbol);
  if (it == symbols_.end() || *it != symbol) throw std::invalid_argument("glyph bank: unknown symbol '" + utf8_encode(symbol) + "'");
  return glyphs_[static_cast<std::size_t>(it - symbols_.begin())];
}

std::vector<SynthSample> synth_generate_annotated(const GlyphBank& bank, const SynthOptions& opts, Rng& rng) {
  if (opts.min_length == 0 || opts.min_length > opts.max_length)
    throw std::invalid_argument("synth: need 1 <= min_length <= max_length");
  if (!(opts.spacing > 0.0)) throw std::invalid_argument("synth: spacing must be positive");
  std::u32string inked;
  for (char32_t c : bank.symbols())
    if (c != U' ') inked.push_back(c);
  if (inked.empty()) throw std::invalid_argument("synth: no drawable symbols");

  std::vector<SynthSample> out;
  out.reserve(opts.count);
  for (std::size_t n = 0; n < opts.count; ++n) {
    const std::size_t len = opts.min_length + uniform_index(rng, opts.max_length - opts.min_length + 1);
    std::u32string text;
    for (std::size_t i = 0; i < len; ++i) {
      const bool edge = i == 0 || i + 1 == len;
      const std::u32string& pool = edge ? inked : bank.symbols();
      text.push_back(pool[uniform_index(rng, pool.size())]);
    }

    SynthSample sample;
    auto& pts = sample.sequence.points;
    double cursor = 0.0;
    for (char32_t c : text) {
      const Glyph& g = bank.glyph(c);
      const std::size_t begin = pts.size();
      const double sx = uniform(rng, 0.9, 1.1);
      const double dy = uniform(rng, -0.03, 0.03);
      for (const auto& stroke : g.strokes) {
        std::vector<Vertex> jittered;
        for (const auto& v : stroke) {
          jittered.push_back({cursor + sx * v[0] + uniform(rng, -opts.jitter, opts.jitter),
                              v[1] + dy + uniform(rng, -opts.jitter, opts.jitter)});
        }
        auto dense = resample_stroke(jittered, opts.spacing);
        if (!pts.empty()) {
          // One in-air sample between strokes.
          const auto& last = pts.back();
          pts.push_back({0.5 * (last.x + dense.front()[0]), 0.5 * (last.y + dense.front()[1]), 0});
        }
        for (const auto& v : dense) pts.push_back({v[0], v[1], 1});
      }
      sample.glyph_spans.emplace_back(begin, pts.size());
      cursor += sx * g.width + uniform(rng, 0.15, 0.3);
    }
    sample.sequence.id = "synth-" + std::to_string(n);
    sample.sequence.text = utf8_encode(text);
    sample.sequence = normalize(sample.sequence);
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<TrajectorySequence> synth_generate(const GlyphBank& bank, const SynthOptions& opts, Rng& rng) {
  std::vector<TrajectorySequence> out;
  for (auto& s : synth_generate_annotated(bank, opts, rng)) out.push_back(std::move(s.sequence));
  return out;
}

}  // namespace olhtr::data
