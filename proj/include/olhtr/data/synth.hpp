// SPDX-License-Identifier: Apache-2.0
//
// Synthetic stroke text. Each symbol owns a fixed polyline glyph drawn on a
// 3x3 anchor grid; samples lay glyphs out left to right with per-vertex and
// per-glyph jitter, so symbol identity stays recoverable from geometry.

#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "olhtr/data/trajectory.hpp"
#include "olhtr/rng.hpp"

namespace olhtr::data {

using Vertex = std::array<double, 2>;

struct Glyph {
  std::vector<std::vector<Vertex>> strokes;  // glyph units, height 1
  double width = 0.0;
};

class GlyphBank {
 public:
  // Glyphs depend only on the symbol and on symbols before it in sorted
  // order (re-rolled on a near-collision).
  explicit GlyphBank(std::u32string symbols);

  const Glyph& glyph(char32_t symbol) const;
  const std::u32string& symbols() const { return symbols_; }

 private:
  std::u32string symbols_;
  std::vector<Glyph> glyphs_;
};

struct SynthOptions {
  std::size_t count = 0;
  std::size_t min_length = 3;
  std::size_t max_length = 5;
  double jitter = 0.04;    // per-vertex, glyph units
  double spacing = 0.08;   // resampling step along strokes, glyph units
};

struct SynthSample {
  TrajectorySequence sequence;  // normalised
  // [begin, end) point ranges, one per transcript character.
  std::vector<std::pair<std::size_t, std::size_t>> glyph_spans;
};

std::vector<SynthSample> synth_generate_annotated(const GlyphBank& bank, const SynthOptions& opts, Rng& rng);
std::vector<TrajectorySequence> synth_generate(const GlyphBank& bank, const SynthOptions& opts, Rng& rng);

// Points every `spacing` units along each stroke, strokes concatenated.
std::vector<Vertex> resample_strokes(const std::vector<std::vector<Vertex>>& strokes, double spacing);

}  // namespace olhtr::data
