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

// Detector segmentation losses, valuation-to-weight mapping and generator
// reconstruction losses.
//
// Every loss exists in two forms: a typed wrapper over images/maps that
// returns the scalar, and a span kernel that also returns the gradient with
// respect to its first argument. Images passed to span kernels are planar
// (C x H x W), masks and maps are H x W; masks hold 0.0 / 1.0.
// Logarithms clamp their argument at kLogEpsilon.

#ifndef DETPAINT_LOSSES_H_
#define DETPAINT_LOSSES_H_

#include <span>
#include <string>
#include <vector>

#include "detpaint/imaging.h"

namespace detpaint::losses {

inline constexpr double kLogEpsilon = 1e-12;

enum class MappingKind { kLinear, kExponential };

std::string ToString(MappingKind kind);
MappingKind ParseMappingKind(const std::string& name);

struct LossConfig {
  double gamma = 2.0;
  MappingKind mapping = MappingKind::kExponential;
  double base_x = 10.0;
  // Adversarial baseline: lambda_adv * L_adv + lambda_l1 * L_l1.
  double lambda_adv = 0.1;
  double lambda_l1 = 1.0;
  // Hard-weighted baseline: lambda_hole inside the mask, lambda_valid outside.
  double lambda_hole = 6.0;
  double lambda_valid = 1.0;

  void Validate() const;

  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct LossGrad {
  double value = 0.0;
  std::vector<double> grad;
};

// -- span kernels -----------------------------------------------------------

LossGrad CeLossGrad(std::span<const double> v, std::span<const double> m);
LossGrad BalancedCeLossGrad(std::span<const double> v,
                            std::span<const double> m, double alpha);
LossGrad FocalLossGrad(std::span<const double> v, std::span<const double> m,
                       double alpha, double gamma);

// W from V, and dW/dV elementwise.
std::vector<double> MapWeights(std::span<const double> v,
                               const LossConfig& config);
std::vector<double> MapWeightsDerivative(std::span<const double> v,
                                         const LossConfig& config);

// (1/N) sum W_p |out - gt| over all C*H*W elements, W broadcast over channels.
// Gradient is with respect to `out`; *grad_weights (if non-null) receives
// dL/dW per pixel.
LossGrad WeightedL1Grad(std::span<const double> out,
                        std::span<const double> gt,
                        std::span<const double> weights, int channels,
                        std::vector<double>* grad_weights = nullptr);

LossGrad HardWeightedL1Grad(std::span<const double> out,
                            std::span<const double> gt,
                            std::span<const double> mask, int channels,
                            double lambda_hole, double lambda_valid);

struct AdvLosses {
  double gen_loss = 0.0;   // mean log(1 - d_fake)
  double disc_loss = 0.0;  // -mean[log d_real + log(1 - d_fake)]
  std::vector<double> disc_grad_real;
  std::vector<double> disc_grad_fake;
  std::vector<double> gen_grad_fake;
};

AdvLosses AdversarialLosses(std::span<const double> d_real,
                            std::span<const double> d_fake);

// -- typed wrappers ---------------------------------------------------------

double CeLoss(const ValuationMap& v, const Mask& m);
double BalancedCeLoss(const ValuationMap& v, const Mask& m, double alpha);
double FocalLoss(const ValuationMap& v, const Mask& m, double alpha,
                 double gamma);
WeightMap ComputeWeightMap(const ValuationMap& v, const LossConfig& config);
double WeightedL1(const Image& out, const Image& gt, const WeightMap& w);
double HardWeightedL1(const Image& out, const Image& gt, const Mask& m,
                      double lambda_hole = 6.0, double lambda_valid = 1.0);

std::vector<double> MaskToDoubles(const Mask& m);
// HWC -> CHW.
std::vector<double> ToPlanar(const Image& image);

}  // namespace detpaint::losses

#endif  // DETPAINT_LOSSES_H_
