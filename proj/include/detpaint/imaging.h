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

#ifndef DETPAINT_IMAGING_H_
#define DETPAINT_IMAGING_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "detpaint/tensor.h"

namespace detpaint {

// H x W x C image with interleaved channels and values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// H x W binary map; 1 marks a missing (hole) pixel, 0 a valid pixel.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }

  friend bool operator==(const Mask&, const Mask&) = default;
};

// H x W real-valued map.
struct Plane {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Plane() = default;
  Plane(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  double at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }

  friend bool operator==(const Plane&, const Plane&) = default;
};

// Detector output: per-pixel artifact probability in [0, 1].
struct ValuationMap : Plane {
  using Plane::Plane;
};

// Reconstruction weights derived from a ValuationMap; every element >= 1.
struct WeightMap : Plane {
  using Plane::Plane;
};

// Loads an 8-bit PNG or JPEG, converts to `channels` (1 or 3) and resizes to
// target_size x target_size with bilinear interpolation.
Image LoadImage(const std::filesystem::path& path, int target_size,
                int channels = 3);

// Sorted image files (.png, .jpg, .jpeg; only .png when png_only) in `dir`.
// Throws ValidationError when `dir` is not a directory.
std::vector<std::filesystem::path> ListImageFiles(
    const std::filesystem::path& dir, bool recursive, bool png_only = false);

// Loads a single-channel mask (255 = hole, thresholded at 128) and resizes it
// with nearest-neighbor sampling.
Mask LoadMask(const std::filesystem::path& path, int target_size);

// Quantizes to 8 bits (round half up) and writes a PNG.
void SaveImagePng(const Image& image, const std::filesystem::path& path);
void SaveMaskPng(const Mask& mask, const std::filesystem::path& path);

// Raw 8-bit raster codec, shared by the loaders above.
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};
Raster ReadRaster(const std::filesystem::path& path);
void WritePng(const Raster& raster, const std::filesystem::path& path);

Image FromRaster(const Raster& raster, int channels);
Raster ToRaster(const Image& image);

// Half-pixel-centre bilinear resampling.
Image ResizeBilinear(const Image& image, int height, int width);
Mask ResizeNearest(const Mask& mask, int height, int width);

// I_in = gt * (1 - M) + M: holes are painted white.
Image ComposeInput(const Image& gt, const Mask& mask);

// out * M + gt * (1 - M): pastes the valid region of gt back onto out.
Image CompositeOutput(const Image& out, const Image& gt, const Mask& mask);

// Colour gradient for valuation maps: blue (0) -> cyan -> green (0.5) ->
// yellow -> red (1), piecewise linear between five equally spaced stops.
inline constexpr std::array<std::array<std::uint8_t, 3>, 5> kJetStops = {{
    {0, 0, 255},
    {0, 255, 255},
    {0, 255, 0},
    {255, 255, 0},
    {255, 0, 0},
}};
std::array<std::uint8_t, 3> JetColor(double value);
Raster ColorizeMap(const Plane& map);
void ExportColormap(const Plane& map, const std::filesystem::path& path);

// Conversions between HWC images and single-sample NCHW tensors.
Tensor ImagesToTensor(std::span<const Image> images);
Image TensorToImage(const Tensor& t, int n);
Tensor MasksToTensor(std::span<const Mask> masks);

void CheckSameSize(const Image& a, const Image& b, const char* what);
void CheckSameSize(const Image& a, const Mask& m, const char* what);

}  // namespace detpaint

#endif  // DETPAINT_IMAGING_H_
