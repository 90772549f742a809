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

// Procedural free-form masks built from random brush-stroke polylines.

#ifndef DETPAINT_MASKGEN_H_
#define DETPAINT_MASKGEN_H_

#include <array>
#include <cstdint>
#include <optional>
#include <random>

#include "detpaint/imaging.h"

namespace detpaint::maskgen {

struct IntRange {
  int min = 1;
  int max = 1;
};

struct MaskGenConfig {
  IntRange num_strokes{1, 4};
  IntRange brush_width{6, 20};
  IntRange vertex_count{4, 12};
  // Max segment length as a fraction of the canvas size.
  double max_segment_fraction = 0.25;
  bool border_constrained = false;
  // Negative means "16 px at 256, scaled with the canvas size".
  int border_margin = -1;
  int size = 256;
  std::uint64_t seed = 0;

  int EffectiveMargin() const;
  void Validate() const;
};

// One stroke: a polyline drawn with a round brush.
struct Stroke {
  std::vector<std::array<int, 2>> vertices;  // (row, col)
  int brush_width = 1;
};

// Draws a stroke onto the mask (disc brush swept along every segment).
void DrawStroke(const Stroke& stroke, Mask* mask);

// Samples one stroke. With a non-zero margin, every hole pixel the stroke
// paints lies in [margin, size - margin).
Stroke SampleStroke(const MaskGenConfig& config, std::mt19937_64& rng);

// Deterministic in (config, config.seed). num_strokes.min == max == 0 yields
// an empty mask.
Mask GenerateStrokeMask(const MaskGenConfig& config);

struct CropRect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

// Rotation (nearest neighbour about the canvas centre), then dilation with a
// (2r+1)^2 square element, then crop and nearest-neighbour resize back to the
// mask's size.
Mask AugmentMask(const Mask& mask, double rotation_deg, int dilation_px,
                 const CropRect& crop);

Mask RotateMask(const Mask& mask, double rotation_deg);
Mask DilateMask(const Mask& mask, int radius);

// Fraction of hole pixels.
double MaskRatio(const Mask& mask);

struct RatioBucket {
  int index = 0;
  double lower = 0.0;  // exclusive
  double upper = 0.0;  // inclusive
};

inline constexpr int kNumBuckets = 6;
inline constexpr std::array<RatioBucket, kNumBuckets> kBuckets = {{
    {0, 0.01, 0.1},
    {1, 0.1, 0.2},
    {2, 0.2, 0.3},
    {3, 0.3, 0.4},
    {4, 0.4, 0.5},
    {5, 0.5, 0.6},
}};

// Bucket with lower < ratio <= upper, or nullopt outside (0.01, 0.6].
// Throws ValidationError when ratio is outside [0, 1].
std::optional<RatioBucket> BucketOf(double ratio);

// Parameters for quota-driven generation of bucketed masks.
struct BucketedGenOptions {
  MaskGenConfig base;
  double max_rotation_deg = 45.0;
  int max_dilation_px = 2;
  double min_crop_fraction = 0.8;
  int max_attempts = 2000;
};

// Generates one mask whose ratio falls in `bucket`, adding strokes until the
// augmented mask reaches the bucket. nullopt when max_attempts is exhausted.
std::optional<Mask> GenerateMaskForBucket(const BucketedGenOptions& options,
                                          const RatioBucket& bucket,
                                          std::uint64_t seed);

}  // namespace detpaint::maskgen

#endif  // DETPAINT_MASKGEN_H_
