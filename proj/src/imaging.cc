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

#include "detpaint/imaging.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

namespace detpaint {
namespace {

bool HasPngSignature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), sizeof(sig));
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

Raster ReadPng(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Raster raster;
  raster.height = static_cast<int>(image.height);
  raster.width = static_cast<int>(image.width);
  raster.channels = gray ? 1 : 3;
  raster.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raster.pixels.data(), 0,
                             nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return raster;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Raster ReadJpeg(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"),
                                             &std::fclose);
  if (!file) throw IoError("cannot open " + path.string());
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = JpegErrorExit;
  Raster raster;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("cannot decode JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space =
      cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  raster.height = static_cast<int>(cinfo.output_height);
  raster.width = static_cast<int>(cinfo.output_width);
  raster.channels = cinfo.output_components;
  raster.pixels.resize(static_cast<std::size_t>(raster.height) * raster.width *
                       raster.channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raster.pixels.data() +
                   static_cast<std::size_t>(cinfo.output_scanline) *
                       raster.width * raster.channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return raster;
}

std::uint8_t Quantize(double v) {
  const double scaled = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(scaled);
}

}  // namespace

void CheckSameSize(const Image& a, const Image& b, const char* what) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
    throw ValidationError(std::string(what) + ": image sizes differ");
  }
}

void CheckSameSize(const Image& a, const Mask& m, const char* what) {
  if (a.height != m.height || a.width != m.width) {
    throw ValidationError(std::string(what) + ": image and mask sizes differ");
  }
}

Raster ReadRaster(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw IoError("no such file: " + path.string());
  }
  Raster raster = HasPngSignature(path) ? ReadPng(path) : ReadJpeg(path);
  if (raster.height <= 0 || raster.width <= 0) {
    throw ValidationError("zero-dimension image: " + path.string());
  }
  return raster;
}

void WritePng(const Raster& raster, const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = raster.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, raster.pixels.data(),
                               0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

Image FromRaster(const Raster& raster, int channels) {
  if (channels != 1 && channels != 3) {
    throw ValidationError("channels must be 1 or 3");
  }
  Image image(raster.height, raster.width, channels);
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) {
      const std::uint8_t* p =
          &raster.pixels[(static_cast<std::size_t>(y) * raster.width + x) *
                         raster.channels];
      if (channels == raster.channels) {
        for (int c = 0; c < channels; ++c) image.at(y, x, c) = p[c] / 255.0;
      } else if (channels == 3) {
        for (int c = 0; c < 3; ++c) image.at(y, x, c) = p[0] / 255.0;
      } else {
        const double luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        image.at(y, x, 0) = std::clamp(luma / 255.0, 0.0, 1.0);
      }
    }
  }
  return image;
}

Raster ToRaster(const Image& image) {
  Raster raster{image.height, image.width, image.channels, {}};
  raster.pixels.resize(image.data.size());
  std::transform(image.data.begin(), image.data.end(), raster.pixels.begin(),
                 Quantize);
  return raster;
}

Image ResizeBilinear(const Image& image, int height, int width) {
  if (height <= 0 || width <= 0) {
    throw ValidationError("resize: target size must be positive");
  }
  if (height == image.height && width == image.width) return image;
  Image out(height, width, image.channels);
  const double sy = static_cast<double>(image.height) / height;
  const double sx = static_cast<double>(image.width) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < image.channels; ++c) {
        const double top =
            image.at(y0, x0, c) + wx * (image.at(y0, x1, c) - image.at(y0, x0, c));
        const double bottom =
            image.at(y1, x0, c) + wx * (image.at(y1, x1, c) - image.at(y1, x0, c));
        out.at(y, x, c) = std::clamp(top + wy * (bottom - top), 0.0, 1.0);
      }
    }
  }
  return out;
}

Mask ResizeNearest(const Mask& mask, int height, int width) {
  if (height <= 0 || width <= 0) {
    throw ValidationError("resize: target size must be positive");
  }
  if (height == mask.height && width == mask.width) return mask;
  Mask out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(
        static_cast<int>((y + 0.5) * mask.height / height), mask.height - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(
          static_cast<int>((x + 0.5) * mask.width / width), mask.width - 1);
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

Image LoadImage(const std::filesystem::path& path, int target_size,
                int channels) {
  if (target_size <= 0) throw ValidationError("target size must be positive");
  return ResizeBilinear(FromRaster(ReadRaster(path), channels), target_size,
                        target_size);
}

Mask LoadMask(const std::filesystem::path& path, int target_size) {
  if (target_size <= 0) throw ValidationError("target size must be positive");
  const Raster raster = ReadRaster(path);
  Mask mask(raster.height, raster.width);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    mask.data[i] = raster.pixels[i * raster.channels] >= 128 ? 1 : 0;
  }
  return ResizeNearest(mask, target_size, target_size);
}

void SaveImagePng(const Image& image, const std::filesystem::path& path) {
  WritePng(ToRaster(image), path);
}

void SaveMaskPng(const Mask& mask, const std::filesystem::path& path) {
  Raster raster{mask.height, mask.width, 1, {}};
  raster.pixels.resize(mask.data.size());
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    raster.pixels[i] = mask.data[i] ? 255 : 0;
  }
  WritePng(raster, path);
}

Image ComposeInput(const Image& gt, const Mask& mask) {
  CheckSameSize(gt, mask, "ComposeInput");
  Image out = gt;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    const double m = mask.data[p];
    for (int c = 0; c < gt.channels; ++c) {
      double& v = out.data[p * gt.channels + c];
      v = v * (1.0 - m) + m;
    }
  }
  return out;
}

Image CompositeOutput(const Image& out, const Image& gt, const Mask& mask) {
  CheckSameSize(out, gt, "CompositeOutput");
  CheckSameSize(gt, mask, "CompositeOutput");
  Image result = gt;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    if (!mask.data[p]) continue;
    for (int c = 0; c < gt.channels; ++c) {
      result.data[p * gt.channels + c] = out.data[p * gt.channels + c];
    }
  }
  return result;
}

std::array<std::uint8_t, 3> JetColor(double value) {
  const double v = std::clamp(value, 0.0, 1.0) * (kJetStops.size() - 1);
  const int lo = std::min(static_cast<int>(v),
                          static_cast<int>(kJetStops.size()) - 2);
  const double t = v - lo;
  std::array<std::uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    const double a = kJetStops[lo][c];
    const double b = kJetStops[lo + 1][c];
    rgb[c] = static_cast<std::uint8_t>(std::floor(a + t * (b - a) + 0.5));
  }
  return rgb;
}

Raster ColorizeMap(const Plane& map) {
  Raster raster{map.height, map.width, 3, {}};
  raster.pixels.resize(map.data.size() * 3);
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    const auto rgb = JetColor(map.data[i]);
    std::copy(rgb.begin(), rgb.end(), raster.pixels.begin() + i * 3);
  }
  return raster;
}

void ExportColormap(const Plane& map, const std::filesystem::path& path) {
  for (double v : map.data) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("colormap values must lie in [0, 1]");
    }
  }
  WritePng(ColorizeMap(map), path);
}

Tensor ImagesToTensor(std::span<const Image> images) {
  if (images.empty()) throw ValidationError("empty image batch");
  const Image& first = images.front();
  Tensor t(static_cast<int>(images.size()), first.channels, first.height,
           first.width);
  for (int n = 0; n < t.n(); ++n) {
    CheckSameSize(first, images[n], "ImagesToTensor");
    for (int c = 0; c < t.c(); ++c) {
      for (int y = 0; y < t.h(); ++y) {
        for (int x = 0; x < t.w(); ++x) {
          t.at(n, c, y, x) = images[n].at(y, x, c);
        }
      }
    }
  }
  return t;
}

Image TensorToImage(const Tensor& t, int n) {
  Image image(t.h(), t.w(), t.c());
  for (int c = 0; c < t.c(); ++c) {
    for (int y = 0; y < t.h(); ++y) {
      for (int x = 0; x < t.w(); ++x) image.at(y, x, c) = t.at(n, c, y, x);
    }
  }
  return image;
}

Tensor MasksToTensor(std::span<const Mask> masks) {
  if (masks.empty()) throw ValidationError("empty mask batch");
  Tensor t(static_cast<int>(masks.size()), 1, masks.front().height,
           masks.front().width);
  for (int n = 0; n < t.n(); ++n) {
    if (masks[n].height != t.h() || masks[n].width != t.w()) {
      throw ValidationError("MasksToTensor: mask sizes differ");
    }
    std::copy(masks[n].data.begin(), masks[n].data.end(), t.sample(n));
  }
  return t;
}

std::vector<std::filesystem::path> ListImageFiles(
    const std::filesystem::path& dir, bool recursive, bool png_only) {
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError("not a directory: " + dir.string());
  }
  auto wanted = [&](const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") return true;
    return !png_only && (ext == ".jpg" || ext == ".jpeg");
  };
  std::vector<std::filesystem::path> out;
  auto visit = [&](const std::filesystem::directory_entry& e) {
    if (e.is_regular_file() && wanted(e.path())) out.push_back(e.path());
  };
  if (recursive) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
      visit(e);
    }
  } else {
    for (const auto& e : std::filesystem::directory_iterator(dir)) visit(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detpaint
