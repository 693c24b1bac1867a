// SPDX-License-Identifier: Apache-2.0
//
// Pen trajectories, their on-disk form, normalisation, augmentation and
// rasterisation.
//
// Coordinate frame: after normalize(), y spans exactly [0, 32] (the image
// height) and x is scaled by the same factor and shifted to start at 0, so
// trajectory coordinates are rendered-pixel coordinates. The alignment
// sampler relies on this shared frame.

#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "olhtr/rng.hpp"

namespace olhtr::data {

inline constexpr std::size_t kImageHeight = 32;

struct PenPoint {
  double x = 0.0;
  double y = 0.0;
  int pen = 0;  // 1 while the pen touches the surface

  bool operator==(const PenPoint&) const = default;
};

struct TrajectorySequence {
  std::string id;
  std::vector<PenPoint> points;
  std::string text;

  std::size_t length() const { return points.size(); }
  bool operator==(const TrajectorySequence&) const = default;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checks T >= 2, finite coordinates and pen states in {0, 1}.
void validate(const TrajectorySequence& seq);

// JSON lines: {"id": str, "points": [[px, py, s], ...], "text": str}.
// Blank lines are skipped; a file with no records is an error.
std::vector<TrajectorySequence> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::vector<TrajectorySequence>& dataset, const std::filesystem::path& path);
TrajectorySequence parse_record(const std::string& line);
std::string format_record(const TrajectorySequence& seq);

// Maps y onto [0, 32] and x onto [0, ...) with one shared scale factor.
// A sequence with no vertical extent keeps its scale (shrunk if wider than
// 512 px) and is centred on y = 16.
TrajectorySequence normalize(const TrajectorySequence& seq);

struct RenderedImage {
  static constexpr std::size_t height = kImageHeight;
  std::size_t width = 0;
  std::vector<float> pixels;  // row-major [height, width], ink 1, background 0

  float at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

// Pixel (row, col) that a normalised point rasterises to.
std::pair<std::size_t, std::size_t> raster_cell(const PenPoint& p);

// Width is max(8, ceil(max x) + 1) rounded up to a multiple of 8. A 1 px
// Bresenham line joins consecutive pen-down points; isolated pen-down points
// are stamped as single pixels.
RenderedImage render(const TrajectorySequence& normalized);

// Binary PGM (P5, maxval 255, ink 255).
void write_pgm(const RenderedImage& image, const std::filesystem::path& path);

struct AugmentOptions {
  double fraction = 0.20;
  double magnitude = 1.0;  // px, uniform per axis
};

// Moves floor(fraction * T) distinct pen-down points (all of them if there
// are fewer) by i.i.d. uniform offsets. Indices of moved points are written
// to `moved` when given. No renormalisation.
TrajectorySequence perturb_points(const TrajectorySequence& seq, const AugmentOptions& opts, Rng& rng,
                                  std::vector<std::size_t>* moved = nullptr);

// perturb_points() followed by normalize().
TrajectorySequence augment(const TrajectorySequence& seq, const AugmentOptions& opts, Rng& rng);

}  // namespace olhtr::data
