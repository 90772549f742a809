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

// Encoder-decoder inpainting generator.
//
// Layer plan (b = base_channels, C = image channels):
//
//   stem      conv   k3 s1 p1      C+1 -> b      IN, ReLU
//   down1     conv   k4 s2 p1      b   -> 2b     IN, ReLU
//   down2     conv   k4 s2 p1      2b  -> 4b     IN, ReLU
//   res{i}    conv   k3 s1 d2 p2   4b  -> 4b     IN, ReLU
//             conv   k3 s1 d2 p2   4b  -> 4b     IN, + skip, ReLU
//   up1       deconv k4 s2 p1      4b  -> 2b     IN, ReLU
//   up2       deconv k4 s2 p1      2b  -> b      IN, ReLU
//   out       conv   k3 s1 p1      b   -> C      sigmoid
//
// The hole mask is concatenated to the corrupted image as the last input
// channel.

#ifndef DETPAINT_GENERATOR_H_
#define DETPAINT_GENERATOR_H_

#include <cstdint>

#include "detpaint/imaging.h"
#include "detpaint/nn.h"

namespace detpaint {

struct GeneratorConfig {
  int base_channels = 64;
  int num_residual_blocks = 8;
  int dilation = 2;
  int image_channels = 3;

  int input_channels() const { return image_channels + 1; }
  int output_channels() const { return image_channels; }
  void Validate() const;

  friend bool operator==(const GeneratorConfig&,
                         const GeneratorConfig&) = default;
};

using GeneratorParams = nn::ParamSet;

inline constexpr double kInitStddev = 0.02;

class Generator {
 public:
  explicit Generator(const GeneratorConfig& config);

  const GeneratorConfig& config() const { return config_; }
  const nn::Network& network() const { return network_; }

  // Seeded N(0, 0.02) weights, zero biases.
  GeneratorParams Build(std::uint64_t init_seed) const;

  // `images` is N x C x H x W (corrupted input), `masks` N x 1 x H x W.
  // H and W must be divisible by 4.
  Tensor Forward(const GeneratorParams& params, const Tensor& images,
                 const Tensor& masks, nn::Tape* tape) const;
  // Gradient with respect to the concatenated (C+1)-channel input.
  Tensor Backward(const GeneratorParams& params, const nn::Tape& tape,
                  const Tensor& grad_out, GeneratorParams* grads) const;

  Image Inpaint(const GeneratorParams& params, const Image& corrupted,
                const Mask& mask) const;

  // Channel-concatenates images and masks.
  static Tensor MakeInput(const Tensor& images, const Tensor& masks);

 private:
  GeneratorConfig config_;
  nn::Network network_;
};

void CheckDivisibleByFour(int height, int width, const char* what);

}  // namespace detpaint

#endif  // DETPAINT_GENERATOR_H_
