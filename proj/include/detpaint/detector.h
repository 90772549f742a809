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

// Seven-layer fully convolutional artifact detector.
//
//   conv1   conv   k4 s2 "same"   C  -> b     LReLU
//   conv2   conv   k4 s2 "same"   b  -> 2b    LReLU
//   conv3   conv   k4 s1 "same"   2b -> 4b    LReLU
//   conv4   conv   k4 s1 "same"   4b -> 4b    LReLU
//   conv5   conv   k4 s1 "same"   4b -> 4b    LReLU
//   up1     deconv k4 s2 p1       4b -> 2b    LReLU
//   up2     deconv k4 s2 p1       2b -> 2
//
// "same" padding for an even kernel at stride 1 pads one pixel before and two
// after. A per-pixel softmax over the two output channels gives the valuation
// map V (probability of channel 1, "artifact").

#ifndef DETPAINT_DETECTOR_H_
#define DETPAINT_DETECTOR_H_

#include <cstdint>

#include "detpaint/imaging.h"
#include "detpaint/nn.h"

namespace detpaint {

struct DetectorConfig {
  int base_channels = 64;
  int image_channels = 3;
  double leaky_slope = 0.2;

  void Validate() const;

  friend bool operator==(const DetectorConfig&,
                         const DetectorConfig&) = default;
};

using DetectorParams = nn::ParamSet;

// Activations from a detector forward pass.
struct DetectorTape {
  nn::Tape body;
  Tensor output;  // valuation (N x 1 x H x W) or global score (N x 1 x 1 x 1)
};

class Detector {
 public:
  explicit Detector(const DetectorConfig& config);

  const DetectorConfig& config() const { return config_; }
  const nn::Network& network() const { return network_; }

  DetectorParams Build(std::uint64_t init_seed) const;

  // Two-channel pre-softmax logits, N x 2 x H x W.
  Tensor Logits(const DetectorParams& params, const Tensor& images,
                nn::Tape* tape) const;

  // Valuation map V, N x 1 x H x W, strictly inside (0, 1).
  Tensor Forward(const DetectorParams& params, const Tensor& images,
                 DetectorTape* tape) const;
  // Backpropagates dL/dV; returns dL/dimages.
  Tensor Backward(const DetectorParams& params, const DetectorTape& tape,
                  const Tensor& grad_valuation, DetectorParams* grads) const;

  // Global-average discriminator head used by the adversarial baseline:
  // d = sigmoid(mean over pixels of (logit_1 - logit_0)), N x 1 x 1 x 1.
  Tensor Score(const DetectorParams& params, const Tensor& images,
               DetectorTape* tape) const;
  Tensor BackwardScore(const DetectorParams& params, const DetectorTape& tape,
                       const Tensor& grad_score, DetectorParams* grads) const;

  ValuationMap Evaluate(const DetectorParams& params, const Image& image) const;

 private:
  DetectorConfig config_;
  nn::Network network_;
};

// Softmax over two channels: probability of channel 1. Returns N x 1 x H x W.
Tensor ArtifactProbability(const Tensor& logits);

ValuationMap ToValuationMap(const Tensor& valuation, int n);

}  // namespace detpaint

#endif  // DETPAINT_DETECTOR_H_
