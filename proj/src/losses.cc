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

#include "detpaint/losses.h"

#include <cmath>

namespace detpaint::losses {
namespace {

// Clamped log and its derivative (zero where the clamp is active).
double SafeLog(double x) { return std::log(std::max(x, kLogEpsilon)); }
double SafeLogDerivative(double x) { return x > kLogEpsilon ? 1.0 / x : 0.0; }

void CheckPair(std::span<const double> a, std::span<const double> b,
               const char* what) {
  if (a.size() != b.size()) {
    throw ValidationError(std::string(what) + ": size mismatch");
  }
  if (a.empty()) throw ValidationError(std::string(what) + ": empty input");
}

void CheckAlpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("alpha must lie in [0, 1]");
  }
}

double Sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void CheckPlanar(std::span<const double> out, std::span<const double> gt,
                 std::size_t per_pixel, int channels, const char* what) {
  CheckPair(out, gt, what);
  if (channels <= 0 || out.size() != per_pixel * channels) {
    throw ValidationError(std::string(what) +
                          ": weight map does not match the image size");
  }
}

}  // namespace

std::string ToString(MappingKind kind) {
  return kind == MappingKind::kLinear ? "linear" : "exponential";
}

MappingKind ParseMappingKind(const std::string& name) {
  if (name == "linear") return MappingKind::kLinear;
  if (name == "exponential") return MappingKind::kExponential;
  throw ValidationError("unknown mapping kind: " + name);
}

void LossConfig::Validate() const {
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  if (!(base_x > 1.0)) throw ValidationError("base_x must be > 1");
}

LossGrad CeLossGrad(std::span<const double> v, std::span<const double> m) {
  CheckPair(v, m, "ce_loss");
  const double inv_n = 1.0 / static_cast<double>(v.size());
  LossGrad r{0.0, std::vector<double>(v.size())};
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += m[i] * SafeLog(v[i]) + (1.0 - m[i]) * SafeLog(1.0 - v[i]);
    r.grad[i] = -inv_n * (m[i] * SafeLogDerivative(v[i]) -
                          (1.0 - m[i]) * SafeLogDerivative(1.0 - v[i]));
  }
  r.value = -sum * inv_n;
  return r;
}

LossGrad BalancedCeLossGrad(std::span<const double> v,
                            std::span<const double> m, double alpha) {
  CheckPair(v, m, "balanced_ce_loss");
  CheckAlpha(alpha);
  const double inv_n = 1.0 / static_cast<double>(v.size());
  LossGrad r{0.0, std::vector<double>(v.size())};
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double pos = (1.0 - alpha) * m[i];
    const double neg = alpha * (1.0 - m[i]);
    sum += pos * SafeLog(v[i]) + neg * SafeLog(1.0 - v[i]);
    r.grad[i] = -inv_n * (pos * SafeLogDerivative(v[i]) -
                          neg * SafeLogDerivative(1.0 - v[i]));
  }
  r.value = -sum * inv_n;
  return r;
}

LossGrad FocalLossGrad(std::span<const double> v, std::span<const double> m,
                       double alpha, double gamma) {
  CheckPair(v, m, "focal_loss");
  CheckAlpha(alpha);
  if (!(gamma >= 0.0)) throw ValidationError("focal_loss: gamma must be >= 0");
  const double inv_n = 1.0 / static_cast<double>(v.size());
  LossGrad r{0.0, std::vector<double>(v.size())};
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double p = v[i];
    const double q = 1.0 - p;
    const double pos = (1.0 - alpha) * m[i];
    const double neg = alpha * (1.0 - m[i]);
    const double q_pow = std::pow(q, gamma);
    const double p_pow = std::pow(p, gamma);
    // d/dp of q^gamma and p^gamma; zero when gamma == 0.
    const double dq_pow = gamma == 0.0 ? 0.0 : -gamma * std::pow(q, gamma - 1);
    const double dp_pow = gamma == 0.0 ? 0.0 : gamma * std::pow(p, gamma - 1);
    const double log_p = SafeLog(p);
    const double log_q = SafeLog(q);
    sum += pos * q_pow * log_p + neg * p_pow * log_q;
    double d = 0.0;
    if (pos != 0.0) d += pos * (dq_pow * log_p + q_pow * SafeLogDerivative(p));
    if (neg != 0.0) d += neg * (dp_pow * log_q - p_pow * SafeLogDerivative(q));
    r.grad[i] = -inv_n * d;
  }
  r.value = -sum * inv_n;
  return r;
}

std::vector<double> MapWeights(std::span<const double> v,
                               const LossConfig& config) {
  config.Validate();
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = config.mapping == MappingKind::kLinear ? 1.0 + v[i]
                                                  : std::pow(config.base_x, v[i]);
  }
  return w;
}

std::vector<double> MapWeightsDerivative(std::span<const double> v,
                                         const LossConfig& config) {
  config.Validate();
  std::vector<double> d(v.size(), 1.0);
  if (config.mapping == MappingKind::kExponential) {
    const double log_x = std::log(config.base_x);
    for (std::size_t i = 0; i < v.size(); ++i) {
      d[i] = std::pow(config.base_x, v[i]) * log_x;
    }
  }
  return d;
}

LossGrad WeightedL1Grad(std::span<const double> out,
                        std::span<const double> gt,
                        std::span<const double> weights, int channels,
                        std::vector<double>* grad_weights) {
  CheckPlanar(out, gt, weights.size(), channels, "weighted_l1");
  const std::size_t plane = weights.size();
  const double inv_n = 1.0 / static_cast<double>(out.size());
  LossGrad r{0.0, std::vector<double>(out.size())};
  if (grad_weights != nullptr) grad_weights->assign(plane, 0.0);
  double sum = 0.0;
  for (int c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      const std::size_t i = c * plane + p;
      const double diff = out[i] - gt[i];
      sum += weights[p] * std::abs(diff);
      r.grad[i] = weights[p] * inv_n * Sign(diff);
      if (grad_weights != nullptr) (*grad_weights)[p] += inv_n * std::abs(diff);
    }
  }
  r.value = sum * inv_n;
  return r;
}

LossGrad HardWeightedL1Grad(std::span<const double> out,
                            std::span<const double> gt,
                            std::span<const double> mask, int channels,
                            double lambda_hole, double lambda_valid) {
  CheckPlanar(out, gt, mask.size(), channels, "hard_weighted_l1");
  std::vector<double> weights(mask.size());
  for (std::size_t p = 0; p < mask.size(); ++p) {
    weights[p] = lambda_hole * mask[p] + lambda_valid * (1.0 - mask[p]);
  }
  return WeightedL1Grad(out, gt, weights, channels);
}

AdvLosses AdversarialLosses(std::span<const double> d_real,
                            std::span<const double> d_fake) {
  CheckPair(d_real, d_fake, "adv_losses");
  for (std::span<const double> s : {d_real, d_fake}) {
    for (double d : s) {
      if (!(d >= 0.0 && d <= 1.0)) {
        throw ValidationError("adv_losses: discriminator output outside [0, 1]");
      }
    }
  }
  const double inv_b = 1.0 / static_cast<double>(d_real.size());
  AdvLosses r;
  r.disc_grad_real.resize(d_real.size());
  r.disc_grad_fake.resize(d_fake.size());
  r.gen_grad_fake.resize(d_fake.size());
  double gen = 0.0, disc = 0.0;
  for (std::size_t i = 0; i < d_real.size(); ++i) {
    const double log_fake = SafeLog(1.0 - d_fake[i]);
    gen += log_fake;
    disc += SafeLog(d_real[i]) + log_fake;
    r.disc_grad_real[i] = -inv_b * SafeLogDerivative(d_real[i]);
    r.disc_grad_fake[i] = inv_b * SafeLogDerivative(1.0 - d_fake[i]);
    r.gen_grad_fake[i] = -inv_b * SafeLogDerivative(1.0 - d_fake[i]);
  }
  r.gen_loss = gen * inv_b;
  r.disc_loss = -disc * inv_b;
  return r;
}

std::vector<double> MaskToDoubles(const Mask& m) {
  return std::vector<double>(m.data.begin(), m.data.end());
}

std::vector<double> ToPlanar(const Image& image) {
  std::vector<double> planar(image.data.size());
  const std::size_t plane = image.pixel_count();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < image.channels; ++c) {
      planar[c * plane + p] = image.data[p * image.channels + c];
    }
  }
  return planar;
}

namespace {

void CheckMapMask(const Plane& v, const Mask& m, const char* what) {
  if (v.height != m.height || v.width != m.width) {
    throw ValidationError(std::string(what) + ": map and mask sizes differ");
  }
}

void CheckImageMap(const Image& a, const Plane& w, const char* what) {
  if (a.height != w.height || a.width != w.width) {
    throw ValidationError(std::string(what) + ": image and map sizes differ");
  }
}

}  // namespace

double CeLoss(const ValuationMap& v, const Mask& m) {
  CheckMapMask(v, m, "ce_loss");
  return CeLossGrad(v.data, MaskToDoubles(m)).value;
}

double BalancedCeLoss(const ValuationMap& v, const Mask& m, double alpha) {
  CheckMapMask(v, m, "balanced_ce_loss");
  return BalancedCeLossGrad(v.data, MaskToDoubles(m), alpha).value;
}

double FocalLoss(const ValuationMap& v, const Mask& m, double alpha,
                 double gamma) {
  CheckMapMask(v, m, "focal_loss");
  return FocalLossGrad(v.data, MaskToDoubles(m), alpha, gamma).value;
}

WeightMap ComputeWeightMap(const ValuationMap& v, const LossConfig& config) {
  WeightMap w(v.height, v.width);
  w.data = MapWeights(v.data, config);
  return w;
}

double WeightedL1(const Image& out, const Image& gt, const WeightMap& w) {
  CheckSameSize(out, gt, "weighted_l1");
  CheckImageMap(out, w, "weighted_l1");
  return WeightedL1Grad(ToPlanar(out), ToPlanar(gt), w.data, out.channels)
      .value;
}

double HardWeightedL1(const Image& out, const Image& gt, const Mask& m,
                      double lambda_hole, double lambda_valid) {
  CheckSameSize(out, gt, "hard_weighted_l1");
  CheckSameSize(out, m, "hard_weighted_l1");
  return HardWeightedL1Grad(ToPlanar(out), ToPlanar(gt), MaskToDoubles(m),
                            out.channels, lambda_hole, lambda_valid)
      .value;
}

}  // namespace detpaint::losses
