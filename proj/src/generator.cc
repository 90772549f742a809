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

#include "detpaint/generator.h"

#include <algorithm>
#include <string>

namespace detpaint {

void CheckDivisibleByFour(int height, int width, const char* what) {
  if (height <= 0 || width <= 0 || height % 4 != 0 || width % 4 != 0) {
    throw ValidationError(std::string(what) +
                          ": spatial size must be a positive multiple of 4, got " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
}

void GeneratorConfig::Validate() const {
  if (base_channels < 1) throw ValidationError("generator: base_channels < 1");
  if (num_residual_blocks < 1) {
    throw ValidationError("generator: num_residual_blocks < 1");
  }
  if (dilation < 1) throw ValidationError("generator: dilation < 1");
  if (image_channels != 1 && image_channels != 3) {
    throw ValidationError("generator: image_channels must be 1 or 3");
  }
}

Generator::Generator(const GeneratorConfig& config) : config_(config) {
  config_.Validate();
  const int b = config_.base_channels;
  const int d = config_.dilation;
  auto conv = [](int in, int out, int k, int s, int dil, int pad) {
    return nn::ConvGeometry{in, out, k, s, dil, pad, pad};
  };
  network_.AddConv("stem", conv(config_.input_channels(), b, 3, 1, 1, 1));
  network_.AddInstanceNorm();
  network_.AddRelu();
  network_.AddConv("down1", conv(b, 2 * b, 4, 2, 1, 1));
  network_.AddInstanceNorm();
  network_.AddRelu();
  network_.AddConv("down2", conv(2 * b, 4 * b, 4, 2, 1, 1));
  network_.AddInstanceNorm();
  network_.AddRelu();
  for (int i = 0; i < config_.num_residual_blocks; ++i) {
    const std::string name = "res" + std::to_string(i);
    network_.BeginResidual();
    network_.AddConv(name + ".conv1", conv(4 * b, 4 * b, 3, 1, d, d));
    network_.AddInstanceNorm();
    network_.AddRelu();
    network_.AddConv(name + ".conv2", conv(4 * b, 4 * b, 3, 1, d, d));
    network_.AddInstanceNorm();
    network_.EndResidual();
    network_.AddRelu();
  }
  network_.AddConvTranspose("up1", conv(4 * b, 2 * b, 4, 2, 1, 1));
  network_.AddInstanceNorm();
  network_.AddRelu();
  network_.AddConvTranspose("up2", conv(2 * b, b, 4, 2, 1, 1));
  network_.AddInstanceNorm();
  network_.AddRelu();
  network_.AddConv("out", conv(b, config_.output_channels(), 3, 1, 1, 1));
  network_.AddSigmoid();
}

GeneratorParams Generator::Build(std::uint64_t init_seed) const {
  return network_.InitParams(init_seed, kInitStddev);
}

Tensor Generator::MakeInput(const Tensor& images, const Tensor& masks) {
  if (images.n() != masks.n() || images.h() != masks.h() ||
      images.w() != masks.w() || masks.c() != 1) {
    throw ValidationError("generator: image/mask batch shapes differ");
  }
  Tensor input(images.n(), images.c() + 1, images.h(), images.w());
  for (int n = 0; n < images.n(); ++n) {
    std::copy_n(images.sample(n), images.sample_size(), input.sample(n));
    std::copy_n(masks.sample(n), masks.sample_size(),
                input.sample(n) + images.sample_size());
  }
  return input;
}

Tensor Generator::Forward(const GeneratorParams& params, const Tensor& images,
                          const Tensor& masks, nn::Tape* tape) const {
  CheckDivisibleByFour(images.h(), images.w(), "generator");
  if (images.c() != config_.image_channels) {
    throw ValidationError("generator: wrong number of image channels");
  }
  return network_.Forward(params, MakeInput(images, masks), tape);
}

Tensor Generator::Backward(const GeneratorParams& params, const nn::Tape& tape,
                           const Tensor& grad_out,
                           GeneratorParams* grads) const {
  return network_.Backward(params, tape, grad_out, grads);
}

Image Generator::Inpaint(const GeneratorParams& params, const Image& corrupted,
                         const Mask& mask) const {
  CheckSameSize(corrupted, mask, "generator");
  const Tensor out =
      Forward(params, ImagesToTensor(std::span(&corrupted, 1)),
              MasksToTensor(std::span(&mask, 1)), nullptr);
  return TensorToImage(out, 0);
}

}  // namespace detpaint
