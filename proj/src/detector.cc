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

#include "detpaint/detector.h"

#include <cmath>

#include "detpaint/generator.h"

namespace detpaint {
namespace {

double Sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                  : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

void DetectorConfig::Validate() const {
  if (base_channels < 1) throw ValidationError("detector: base_channels < 1");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw ValidationError("detector: leaky_slope must lie in (0, 1)");
  }
  if (image_channels != 1 && image_channels != 3) {
    throw ValidationError("detector: image_channels must be 1 or 3");
  }
}

Detector::Detector(const DetectorConfig& config) : config_(config) {
  config_.Validate();
  const int b = config_.base_channels;
  const double slope = config_.leaky_slope;
  auto geom = [](int in, int out, int s, int pad_begin, int pad_end) {
    return nn::ConvGeometry{in, out, 4, s, 1, pad_begin, pad_end};
  };
  network_.AddConv("conv1", geom(config_.image_channels, b, 2, 1, 1));
  network_.AddLeakyRelu(slope);
  network_.AddConv("conv2", geom(b, 2 * b, 2, 1, 1));
  network_.AddLeakyRelu(slope);
  network_.AddConv("conv3", geom(2 * b, 4 * b, 1, 1, 2));
  network_.AddLeakyRelu(slope);
  network_.AddConv("conv4", geom(4 * b, 4 * b, 1, 1, 2));
  network_.AddLeakyRelu(slope);
  network_.AddConv("conv5", geom(4 * b, 4 * b, 1, 1, 2));
  network_.AddLeakyRelu(slope);
  network_.AddConvTranspose("up1", geom(4 * b, 2 * b, 2, 1, 1));
  network_.AddLeakyRelu(slope);
  network_.AddConvTranspose("up2", geom(2 * b, 2, 2, 1, 1));
}

DetectorParams Detector::Build(std::uint64_t init_seed) const {
  return network_.InitParams(init_seed, kInitStddev);
}

Tensor Detector::Logits(const DetectorParams& params, const Tensor& images,
                        nn::Tape* tape) const {
  CheckDivisibleByFour(images.h(), images.w(), "detector");
  return network_.Forward(params, images, tape);
}

Tensor ArtifactProbability(const Tensor& logits) {
  if (logits.c() != 2) throw ValidationError("softmax expects two channels");
  Tensor v(logits.n(), 1, logits.h(), logits.w());
  const std::size_t plane = logits.plane_size();
  for (int n = 0; n < logits.n(); ++n) {
    const double* z0 = logits.sample(n);
    const double* z1 = z0 + plane;
    double* out = v.sample(n);
    for (std::size_t i = 0; i < plane; ++i) out[i] = Sigmoid(z1[i] - z0[i]);
  }
  return v;
}

Tensor Detector::Forward(const DetectorParams& params, const Tensor& images,
                         DetectorTape* tape) const {
  Tensor v = ArtifactProbability(
      Logits(params, images, tape != nullptr ? &tape->body : nullptr));
  if (tape != nullptr) tape->output = v;
  return v;
}

Tensor Detector::Backward(const DetectorParams& params,
                          const DetectorTape& tape,
                          const Tensor& grad_valuation,
                          DetectorParams* grads) const {
  const Tensor& v = tape.output;
  if (!v.SameShape(grad_valuation)) {
    throw ValidationError("detector: gradient shape mismatch");
  }
  Tensor grad_logits(v.n(), 2, v.h(), v.w());
  const std::size_t plane = v.plane_size();
  for (int n = 0; n < v.n(); ++n) {
    const double* vn = v.sample(n);
    const double* gn = grad_valuation.sample(n);
    double* g0 = grad_logits.sample(n);
    double* g1 = g0 + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = gn[i] * vn[i] * (1.0 - vn[i]);
      g1[i] = d;
      g0[i] = -d;
    }
  }
  return network_.Backward(params, tape.body, grad_logits, grads);
}

Tensor Detector::Score(const DetectorParams& params, const Tensor& images,
                       DetectorTape* tape) const {
  const Tensor logits =
      Logits(params, images, tape != nullptr ? &tape->body : nullptr);
  Tensor score(logits.n(), 1, 1, 1);
  const std::size_t plane = logits.plane_size();
  for (int n = 0; n < logits.n(); ++n) {
    const double* z0 = logits.sample(n);
    const double* z1 = z0 + plane;
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) sum += z1[i] - z0[i];
    score.at(n, 0, 0, 0) = Sigmoid(sum / static_cast<double>(plane));
  }
  if (tape != nullptr) tape->output = score;
  return score;
}

Tensor Detector::BackwardScore(const DetectorParams& params,
                               const DetectorTape& tape,
                               const Tensor& grad_score,
                               DetectorParams* grads) const {
  const Tensor& score = tape.output;
  const Tensor& first_input = tape.body.saved.front();
  const int h = first_input.h(), w = first_input.w();
  Tensor grad_logits(score.n(), 2, h, w);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int n = 0; n < score.n(); ++n) {
    const double s = score.at(n, 0, 0, 0);
    const double d =
        grad_score.at(n, 0, 0, 0) * s * (1.0 - s) / static_cast<double>(plane);
    double* g0 = grad_logits.sample(n);
    double* g1 = g0 + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      g1[i] = d;
      g0[i] = -d;
    }
  }
  return network_.Backward(params, tape.body, grad_logits, grads);
}

ValuationMap ToValuationMap(const Tensor& valuation, int n) {
  ValuationMap map(valuation.h(), valuation.w());
  std::copy_n(valuation.sample(n), valuation.plane_size(), map.data.begin());
  return map;
}

ValuationMap Detector::Evaluate(const DetectorParams& params,
                                const Image& image) const {
  return ToValuationMap(
      Forward(params, ImagesToTensor(std::span(&image, 1)), nullptr), 0);
}

}  // namespace detpaint
