/*
Copyright 2026 The detpaint Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "detpaint/maskgen.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace detpaint::maskgen {
namespace {

constexpr int kReferenceSize = 256;
constexpr int kReferenceMargin = 16;
constexpr int kMaxStrokesPerAttempt = 400;

int RandomInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double RandomReal(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int RoundToInt(double v) { return static_cast<int>(std::floor(v + 0.5)); }

void ClearBorder(int margin, Mask* mask) {
  for (int y = 0; y < mask->height; ++y) {
    for (int x = 0; x < mask->width; ++x) {
      if (y < margin || y >= mask->height - margin || x < margin ||
          x >= mask->width - margin) {
        mask->at(y, x) = 0;
      }
    }
  }
}

}  // namespace

int MaskGenConfig::EffectiveMargin() const {
  if (border_margin >= 0) return border_margin;
  return RoundToInt(static_cast<double>(kReferenceMargin) * size /
                    kReferenceSize);
}

void MaskGenConfig::Validate() const {
  auto check = [](const IntRange& r, const char* name, int lowest) {
    if (r.min < lowest || r.max < r.min) {
      throw ValidationError(std::string("maskgen: invalid range ") + name);
    }
  };
  check(num_strokes, "num_strokes", 0);
  check(brush_width, "brush_width", 1);
  check(vertex_count, "vertex_count", 1);
  if (size <= 0) throw ValidationError("maskgen: size must be positive");
  if (!(max_segment_fraction > 0.0)) {
    throw ValidationError("maskgen: max_segment_fraction must be positive");
  }
  if (border_constrained && 2 * EffectiveMargin() >= size) {
    throw ValidationError("maskgen: border margin leaves no drawable area");
  }
}

void DrawStroke(const Stroke& stroke, Mask* mask) {
  const int radius = stroke.brush_width / 2;
  auto stamp = [&](int cy, int cx) {
    for (int dy = -radius; dy <= radius; ++dy) {
      const int y = cy + dy;
      if (y < 0 || y >= mask->height) continue;
      for (int dx = -radius; dx <= radius; ++dx) {
        const int x = cx + dx;
        if (x < 0 || x >= mask->width) continue;
        if (dy * dy + dx * dx <= radius * radius) mask->at(y, x) = 1;
      }
    }
  };
  const auto& v = stroke.vertices;
  if (v.size() == 1) stamp(v[0][0], v[0][1]);
  for (std::size_t i = 1; i < v.size(); ++i) {
    const int dy = v[i][0] - v[i - 1][0];
    const int dx = v[i][1] - v[i - 1][1];
    const int steps = std::max({std::abs(dy), std::abs(dx), 1});
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      stamp(RoundToInt(v[i - 1][0] + t * dy), RoundToInt(v[i - 1][1] + t * dx));
    }
  }
}

Stroke SampleStroke(const MaskGenConfig& config, std::mt19937_64& rng) {
  const int margin = config.border_constrained ? config.EffectiveMargin() : 0;
  Stroke stroke;
  stroke.brush_width =
      RandomInt(rng, config.brush_width.min, config.brush_width.max);
  // Keep the whole disc inside [margin, size - margin).
  const int max_radius = std::max(0, (config.size - 2 * margin - 1) / 2);
  int radius = std::min(stroke.brush_width / 2, max_radius);
  if (stroke.brush_width / 2 > max_radius) stroke.brush_width = 2 * radius + 1;
  const int lo = config.border_constrained ? margin + radius : 0;
  const int hi = config.border_constrained ? config.size - margin - 1 - radius
                                           : config.size - 1;

  const int vertices =
      RandomInt(rng, config.vertex_count.min, config.vertex_count.max);
  double y = RandomInt(rng, lo, hi);
  double x = RandomInt(rng, lo, hi);
  stroke.vertices.push_back({static_cast<int>(y), static_cast<int>(x)});
  const double max_len = std::max(1.0, config.max_segment_fraction * config.size);
  for (int i = 1; i < vertices; ++i) {
    const double angle = RandomReal(rng, 0.0, 2.0 * std::numbers::pi);
    const double length = RandomReal(rng, 0.2 * max_len, max_len);
    y = std::clamp(y + length * std::sin(angle), static_cast<double>(lo),
                   static_cast<double>(hi));
    x = std::clamp(x + length * std::cos(angle), static_cast<double>(lo),
                   static_cast<double>(hi));
    stroke.vertices.push_back({RoundToInt(y), RoundToInt(x)});
  }
  return stroke;
}

Mask GenerateStrokeMask(const MaskGenConfig& config) {
  config.Validate();
  std::mt19937_64 rng(config.seed);
  Mask mask(config.size, config.size);
  const int strokes =
      RandomInt(rng, config.num_strokes.min, config.num_strokes.max);
  for (int i = 0; i < strokes; ++i) DrawStroke(SampleStroke(config, rng), &mask);
  return mask;
}

Mask RotateMask(const Mask& mask, double rotation_deg) {
  double deg = std::fmod(rotation_deg, 360.0);
  if (deg < 0.0) deg += 360.0;
  if (deg == 0.0) return mask;
  const double theta = deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double cy = (mask.height - 1) / 2.0, cx = (mask.width - 1) / 2.0;
  Mask out(mask.height, mask.width);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const double dy = y - cy, dx = x - cx;
      // Inverse mapping: destination pixel -> source pixel.
      const int sx = RoundToInt(c * dx + s * dy + cx);
      const int sy = RoundToInt(-s * dx + c * dy + cy);
      if (sy >= 0 && sy < mask.height && sx >= 0 && sx < mask.width) {
        out.at(y, x) = mask.at(sy, sx) ? 1 : 0;
      }
    }
  }
  return out;
}

Mask DilateMask(const Mask& mask, int radius) {
  if (radius < 0) throw ValidationError("dilation radius must be >= 0");
  if (radius == 0) return mask;
  Mask rows(mask.height, mask.width);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      std::uint8_t v = 0;
      for (int k = std::max(0, x - radius);
           k <= std::min(mask.width - 1, x + radius) && !v; ++k) {
        v = mask.at(y, k);
      }
      rows.at(y, x) = v;
    }
  }
  Mask out(mask.height, mask.width);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      std::uint8_t v = 0;
      for (int k = std::max(0, y - radius);
           k <= std::min(mask.height - 1, y + radius) && !v; ++k) {
        v = rows.at(k, x);
      }
      out.at(y, x) = v;
    }
  }
  return out;
}

Mask AugmentMask(const Mask& mask, double rotation_deg, int dilation_px,
                 const CropRect& crop) {
  if (crop.height <= 0 || crop.width <= 0 || crop.top < 0 || crop.left < 0 ||
      crop.top + crop.height > mask.height ||
      crop.left + crop.width > mask.width) {
    throw ValidationError("AugmentMask: crop rectangle out of bounds");
  }
  if (dilation_px < 0) throw ValidationError("dilation radius must be >= 0");
  const Mask dilated = DilateMask(RotateMask(mask, rotation_deg), dilation_px);
  Mask cropped(crop.height, crop.width);
  for (int y = 0; y < crop.height; ++y) {
    for (int x = 0; x < crop.width; ++x) {
      cropped.at(y, x) = dilated.at(crop.top + y, crop.left + x);
    }
  }
  return ResizeNearest(cropped, mask.height, mask.width);
}

double MaskRatio(const Mask& mask) {
  if (mask.data.empty()) return 0.0;
  std::size_t holes = 0;
  for (auto v : mask.data) holes += v ? 1 : 0;
  return static_cast<double>(holes) / static_cast<double>(mask.data.size());
}

std::optional<RatioBucket> BucketOf(double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ValidationError("mask ratio must lie in [0, 1]");
  }
  for (const RatioBucket& b : kBuckets) {
    if (ratio > b.lower && ratio <= b.upper) return b;
  }
  return std::nullopt;
}

std::optional<Mask> GenerateMaskForBucket(const BucketedGenOptions& options,
                                          const RatioBucket& bucket,
                                          std::uint64_t seed) {
  const MaskGenConfig& cfg = options.base;
  cfg.Validate();
  const int size = cfg.size;
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(attempt)};
    std::mt19937_64 rng(seq);
    const double rotation =
        RandomReal(rng, -options.max_rotation_deg, options.max_rotation_deg);
    const int dilation = RandomInt(rng, 0, options.max_dilation_px);
    const double fraction = RandomReal(rng, options.min_crop_fraction, 1.0);
    CropRect crop;
    crop.height = crop.width = std::max(1, RoundToInt(fraction * size));
    crop.top = RandomInt(rng, 0, size - crop.height);
    crop.left = RandomInt(rng, 0, size - crop.width);

    Mask canvas(size, size);
    for (int s = 0; s < kMaxStrokesPerAttempt; ++s) {
      DrawStroke(SampleStroke(cfg, rng), &canvas);
      Mask augmented = AugmentMask(canvas, rotation, dilation, crop);
      if (cfg.border_constrained) ClearBorder(cfg.EffectiveMargin(), &augmented);
      const double ratio = MaskRatio(augmented);
      if (ratio > bucket.upper) break;
      if (ratio > bucket.lower) return augmented;
    }
  }
  return std::nullopt;
}

}  // namespace detpaint::maskgen
