// SPDX-License-Identifier: Apache-2.0

#include "olhtr/data/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace olhtr::data {

using nlohmann::json;

void validate(const TrajectorySequence& seq) {
  if (seq.points.size() < 2) throw DatasetError("sequence '" + seq.id + "' has fewer than 2 points");
  for (std::size_t t = 0; t < seq.points.size(); ++t) {
    const auto& p = seq.points[t];
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw DatasetError("sequence '" + seq.id + "' point " + std::to_string(t) + " is not finite");
    if (p.pen != 0 && p.pen != 1)
      throw DatasetError("sequence '" + seq.id + "' point " + std::to_string(t) + " has pen state " +
                         std::to_string(p.pen));
  }
}

TrajectorySequence parse_record(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DatasetError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DatasetError("record is not an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "points" && key != "text") throw DatasetError("unknown field '" + key + "'");
  }
  if (!j.contains("id") || !j["id"].is_string()) throw DatasetError("missing string field 'id'");
  if (!j.contains("text") || !j["text"].is_string()) throw DatasetError("missing string field 'text'");
  if (!j.contains("points") || !j["points"].is_array()) throw DatasetError("missing array field 'points'");

  TrajectorySequence seq;
  seq.id = j["id"].get<std::string>();
  seq.text = j["text"].get<std::string>();
  for (const auto& p : j["points"]) {
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
      throw DatasetError("point must be [px, py, s]");
    const double s = p[2].get<double>();
    if (s != 0.0 && s != 1.0) throw DatasetError("pen state must be 0 or 1, got " + p[2].dump());
    seq.points.push_back({p[0].get<double>(), p[1].get<double>(), static_cast<int>(s)});
  }
  validate(seq);
  return seq;
}

std::string format_record(const TrajectorySequence& seq) {
  json points = json::array();
  for (const auto& p : seq.points) points.push_back(json::array({p.x, p.y, p.pen}));
  json j = {{"id", seq.id}, {"points", std::move(points)}, {"text", seq.text}};
  return j.dump();
}

std::vector<TrajectorySequence> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset " + path.string());
  std::vector<TrajectorySequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const std::exception& e) {
      throw DatasetError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.empty()) throw DatasetError(path.string() + ": dataset is empty");
  return out;
}

void save_dataset(const std::vector<TrajectorySequence>& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write dataset " + path.string());
  for (const auto& seq : dataset) out << format_record(seq) << '\n';
  if (!out) throw DatasetError("write failed for " + path.string());
}

TrajectorySequence normalize(const TrajectorySequence& seq) {
  validate(seq);
  double x_min = seq.points[0].x, x_max = x_min, y_min = seq.points[0].y, y_max = y_min;
  for (const auto& p : seq.points) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
    y_min = std::min(y_min, p.y);
    y_max = std::max(y_max, p.y);
  }
  const double height = static_cast<double>(kImageHeight);
  TrajectorySequence out = seq;
  if (y_max > y_min) {
    const double k = height / (y_max - y_min);
    for (auto& p : out.points) {
      p.x = (p.x - x_min) * k;
      p.y = (p.y - y_min) * k;
    }
    // Pin the extremes so the bounds hold exactly despite rounding.
    for (std::size_t t = 0; t < out.points.size(); ++t) {
      if (seq.points[t].y == y_max) out.points[t].y = height;
      if (seq.points[t].y == y_min) out.points[t].y = 0.0;
    }
  } else {
    const double width = x_max - x_min;
    const double k = width > 512.0 ? 512.0 / width : 1.0;
    for (auto& p : out.points) {
      p.x = (p.x - x_min) * k;
      p.y = height / 2.0;
    }
  }
  return out;
}

std::pair<std::size_t, std::size_t> raster_cell(const PenPoint& p) {
  const double row = std::clamp(std::round(p.y), 0.0, static_cast<double>(kImageHeight - 1));
  const double col = std::max(0.0, std::round(p.x));
  return {static_cast<std::size_t>(row), static_cast<std::size_t>(col)};
}

namespace {

void bresenham(RenderedImage& img, long r0, long c0, long r1, long c1) {
  const long dc = std::abs(c1 - c0), dr = -std::abs(r1 - r0);
  const long sc = c0 < c1 ? 1 : -1, sr = r0 < r1 ? 1 : -1;
  long err = dc + dr;
  while (true) {
    img.pixels[static_cast<std::size_t>(r0) * img.width + static_cast<std::size_t>(c0)] = 1.0f;
    if (r0 == r1 && c0 == c1) break;
    const long e2 = 2 * err;
    if (e2 >= dr) {
      err += dr;
      c0 += sc;
    }
    if (e2 <= dc) {
      err += dc;
      r0 += sr;
    }
  }
}

}  // namespace

RenderedImage render(const TrajectorySequence& normalized) {
  double x_max = 0.0;
  for (const auto& p : normalized.points) x_max = std::max(x_max, p.x);
  std::size_t width = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(x_max)) + 1);
  width = (width + 7) / 8 * 8;

  RenderedImage img;
  img.width = width;
  img.pixels.assign(RenderedImage::height * width, 0.0f);
  const auto& pts = normalized.points;
  for (std::size_t t = 0; t < pts.size(); ++t) {
    if (pts[t].pen != 1) continue;
    const auto [r, c] = raster_cell(pts[t]);
    if (t > 0 && pts[t - 1].pen == 1) {
      const auto [r0, c0] = raster_cell(pts[t - 1]);
      bresenham(img, static_cast<long>(r0), static_cast<long>(c0), static_cast<long>(r), static_cast<long>(c));
    } else {
      img.pixels[r * width + c] = 1.0f;
    }
  }
  return img;
}

void write_pgm(const RenderedImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image " + path.string());
  out << "P5\n" << image.width << ' ' << RenderedImage::height << "\n255\n";
  for (float v : image.pixels) out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

TrajectorySequence perturb_points(const TrajectorySequence& seq, const AugmentOptions& opts, Rng& rng,
                                  std::vector<std::size_t>* moved) {
  if (opts.fraction < 0.0 || opts.fraction > 1.0) throw std::invalid_argument("augment: fraction outside [0, 1]");
  if (opts.magnitude < 0.0) throw std::invalid_argument("augment: negative magnitude");
  std::vector<std::size_t> candidates;
  for (std::size_t t = 0; t < seq.points.size(); ++t)
    if (seq.points[t].pen == 1) candidates.push_back(t);
  const auto wanted = static_cast<std::size_t>(std::floor(opts.fraction * static_cast<double>(seq.points.size())));
  const std::size_t count = std::min(wanted, candidates.size());

  // Partial Fisher-Yates: the first `count` entries are a uniform subset.
  for (std::size_t i = 0; i < count; ++i)
    std::swap(candidates[i], candidates[i + uniform_index(rng, candidates.size() - i)]);
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());

  TrajectorySequence out = seq;
  for (std::size_t t : candidates) {
    out.points[t].x += uniform(rng, -opts.magnitude, opts.magnitude);
    out.points[t].y += uniform(rng, -opts.magnitude, opts.magnitude);
  }
  if (moved) *moved = candidates;
  return out;
}

TrajectorySequence augment(const TrajectorySequence& seq, const AugmentOptions& opts, Rng& rng) {
  return normalize(perturb_points(seq, opts, rng));
}

}  // namespace olhtr::data
