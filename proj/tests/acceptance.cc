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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "detpaint/cli.h"
#include "detpaint/detector.h"
#include "detpaint/generator.h"
#include "detpaint/losses.h"
#include "detpaint/maskgen.h"
#include "detpaint/metrics.h"
#include "detpaint/training.h"
#include "test_util.h"

namespace detpaint {
namespace {

using testing::MaxGradientError;
using testing::RandomBits;
using testing::RandomTensor;
using testing::RandomVector;
using testing::SpreadParams;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double a) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), format, a);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Loss identities.

Outcome LossIdentities() {
  double worst_focal = 0.0, worst_half = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 64 + trial;
    const auto v = RandomVector(n, 1000 + trial, 0.0, 1.0);
    const auto m = RandomBits(n, 2000 + trial);
    const double alpha = RandomVector(1, 3000 + trial, 0.0, 1.0)[0];
    const double focal = losses::FocalLossGrad(v, m, alpha, 0.0).value;
    const double bce = losses::BalancedCeLossGrad(v, m, alpha).value;
    worst_focal = std::max(worst_focal, std::abs(focal - bce));
    const double half = losses::BalancedCeLossGrad(v, m, 0.5).value;
    const double ce = losses::CeLossGrad(v, m).value;
    worst_half = std::max(worst_half, std::abs(half - 0.5 * ce));
  }
  const bool pass = worst_focal < 1e-10 && worst_half < 1e-10;
  return {pass, "max |focal(g=0) - bce| = " + Fmt("%.3g", worst_focal) +
                    ", max |bce(0.5) - ce/2| = " + Fmt("%.3g", worst_half)};
}

// ---------------------------------------------------------------------------
// 2. Closed-form loss values.

Outcome ClosedForms() {
  const std::size_t n = 64;
  const std::vector<double> half(n, 0.5), ones(n, 1.0);
  const auto m = RandomBits(n, 7);
  const double ce = losses::CeLossGrad(half, m).value;
  const double bce = losses::BalancedCeLossGrad(half, ones, 0.25).value;
  const double focal = losses::FocalLossGrad(half, ones, 0.25, 2.0).value;
  losses::LossConfig cfg;
  cfg.mapping = losses::MappingKind::kExponential;
  cfg.base_x = 10.0;
  const double w = losses::MapWeights(std::vector<double>{0.5}, cfg)[0];
  struct Case {
    const char* name;
    double got, want;
  };
  const Case cases[] = {{"ce", ce, 0.693147},
                        {"balanced_ce", bce, 0.519860},
                        {"focal", focal, 0.129965},
                        {"weight", w, 3.162278}};
  bool pass = true;
  std::string detail;
  for (const Case& c : cases) {
    const double dev = std::abs(c.got - c.want);
    pass &= dev < 1e-6;
    detail += std::string(c.name) + "=" + Fmt("%.6f", c.got) + " ";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 3. Gradient oracle on 8x8 inputs.

double LossGradientErrors(std::string* detail) {
  const std::size_t n = 64;
  double worst = 0.0;
  auto check = [&](const char* name, std::vector<double> x,
                   const std::function<losses::LossGrad(
                       const std::vector<double>&)>& fn) {
    const losses::LossGrad lg = fn(x);
    const double e = MaxGradientError([&] { return fn(x).value; }, x, lg.grad,
                                      x.size(), 11);
    *detail += std::string(name) + " " + Fmt("%.1e", e) + ", ";
    worst = std::max(worst, e);
  };
  const auto v = RandomVector(n, 21, 0.05, 0.95);
  const auto m = RandomBits(n, 22);
  check("ce", v, [&](const auto& x) { return losses::CeLossGrad(x, m); });
  check("bce", v, [&](const auto& x) {
    return losses::BalancedCeLossGrad(x, m, 0.3);
  });
  check("focal", v, [&](const auto& x) {
    return losses::FocalLossGrad(x, m, 0.3, 2.0);
  });

  // l1 terms: keep residuals away from the kink at zero.
  const int channels = 3;
  const auto gt = RandomVector(n * channels, 23, 0.0, 1.0);
  auto offsets = RandomVector(n * channels, 24, 0.01, 0.3);
  const auto signs = RandomBits(n * channels, 25);
  std::vector<double> out(gt.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = gt[i] + (signs[i] > 0.5 ? offsets[i] : -offsets[i]);
  }
  const auto w = RandomVector(n, 26, 1.0, 10.0);
  check("weighted_l1", out, [&](const auto& x) {
    return losses::WeightedL1Grad(x, gt, w, channels);
  });
  check("hard_weighted_l1", out, [&](const auto& x) {
    return losses::HardWeightedL1Grad(x, gt, m, channels, 6.0, 1.0);
  });
  // Gradient of weighted l1 with respect to the weights.
  {
    std::vector<double> wx = w, grad_w;
    losses::WeightedL1Grad(out, gt, wx, channels, &grad_w);
    const double e = MaxGradientError(
        [&] { return losses::WeightedL1Grad(out, gt, wx, channels).value; },
        wx, grad_w, wx.size(), 12);
    *detail += "weighted_l1/W " + Fmt("%.1e", e) + ", ";
    worst = std::max(worst, e);
  }
  return worst;
}

// Checks every parameter tensor (sampled) and the input of a network whose
// scalar objective is sum(r * f(x)).
double NetworkGradientError(
    nn::ParamSet* params, Tensor* input,
    const std::function<Tensor(const nn::ParamSet&, const Tensor&)>& forward,
    const std::function<Tensor(const Tensor&, nn::ParamSet*)>& backward,
    std::uint64_t seed) {
  const Tensor probe = forward(*params, *input);
  const Tensor r = RandomTensor(probe.n(), probe.c(), probe.h(), probe.w(),
                                seed);
  auto objective = [&] {
    const Tensor y = forward(*params, *input);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += r.data()[i] * y.data()[i];
    return s;
  };
  nn::ParamSet grads = params->ZerosLike();
  const Tensor grad_input = backward(r, &grads);
  double worst = 0.0;
  for (int t = 0; t < params->count(); ++t) {
    const auto g = grads[t].span();
    const bool vanishing = std::all_of(
        g.begin(), g.end(), [](double v) { return std::abs(v) < 1e-12; });
    if (vanishing) {
      // Biases feeding instance norm: the gradient is identically zero, so
      // compare the difference quotient absolutely.
      double* p = (*params)[t].data();
      for (std::size_t i = 0; i < std::min<std::size_t>(6, g.size()); ++i) {
        if (std::abs(testing::CentralDifference(objective, &p[i])) > 1e-7) {
          worst = std::max(worst, 1.0);
        }
      }
      continue;
    }
    worst = std::max(worst, MaxGradientError(objective, (*params)[t].span(),
                                             g, 6, seed + t));
  }
  // The generator input carries an extra mask channel after the image
  // channels; keep only the image part of each sample.
  std::vector<double> grad_image;
  for (int n = 0; n < input->n(); ++n) {
    const double* g = grad_input.sample(n);
    grad_image.insert(grad_image.end(), g, g + input->sample_size());
  }
  worst = std::max(worst, MaxGradientError(objective, input->span(),
                                           grad_image, 24, seed + 999));
  return worst;
}

Outcome GradientOracle() {
  std::string detail;
  const double loss_err = LossGradientErrors(&detail);

  GeneratorConfig gc;
  gc.base_channels = 4;
  const Generator gen(gc);
  nn::ParamSet gp = gen.Build(5);
  SpreadParams(&gp, 61);
  Tensor images = RandomTensor(2, 3, 8, 8, 31, 0.0, 1.0);
  Tensor masks(2, 1, 8, 8);
  const auto bits = RandomBits(masks.size(), 32);
  std::copy(bits.begin(), bits.end(), masks.data());
  nn::Tape gen_tape;
  const double gen_err = NetworkGradientError(
      &gp, &images,
      [&](const nn::ParamSet& p, const Tensor& x) {
        return gen.Forward(p, x, masks, nullptr);
      },
      [&](const Tensor& r, nn::ParamSet* g) {
        gen.Forward(gp, images, masks, &gen_tape);
        return gen.Backward(gp, gen_tape, r, g);
      },
      41);

  DetectorConfig dc;
  dc.base_channels = 4;
  const Detector det(dc);
  nn::ParamSet dp = det.Build(6);
  SpreadParams(&dp, 62);
  Tensor det_in = RandomTensor(2, 3, 8, 8, 33, 0.0, 1.0);
  DetectorTape det_tape;
  const double det_err = NetworkGradientError(
      &dp, &det_in,
      [&](const nn::ParamSet& p, const Tensor& x) {
        return det.Forward(p, x, nullptr);
      },
      [&](const Tensor& r, nn::ParamSet* g) {
        det.Forward(dp, det_in, &det_tape);
        return det.Backward(dp, det_tape, r, g);
      },
      51);

  detail += "generator " + Fmt("%.1e", gen_err) + ", detector " +
            Fmt("%.1e", det_err);
  const bool pass = loss_err < 1e-3 && gen_err < 1e-3 && det_err < 1e-3;
  return {pass, "max rel err: " + detail};
}

// ---------------------------------------------------------------------------
// 4. Architecture contracts.

struct ShapeRow {
  const char* name;
  std::vector<int> shape;
};

bool MatchTable(const nn::ParamSet& params, const std::vector<ShapeRow>& table,
                std::string* why) {
  if (params.count() != static_cast<int>(table.size())) {
    *why = "tensor count " + std::to_string(params.count()) + " != " +
           std::to_string(table.size());
    return false;
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& e = params.entries()[i];
    if (e.name != table[i].name || e.value.shape() != table[i].shape) {
      *why = "mismatch at " + e.name + " " + e.value.ShapeString();
      return false;
    }
  }
  return true;
}

std::vector<ShapeRow> GeneratorTable() {
  // Default widths: b = 64, C = 3, 8 residual blocks.
  std::vector<ShapeRow> t = {
      {"stem.weight", {64, 4, 3, 3}},    {"stem.bias", {64, 1, 1, 1}},
      {"down1.weight", {128, 64, 4, 4}}, {"down1.bias", {128, 1, 1, 1}},
      {"down2.weight", {256, 128, 4, 4}}, {"down2.bias", {256, 1, 1, 1}},
  };
  static const char* kBlocks[] = {"res0", "res1", "res2", "res3",
                                  "res4", "res5", "res6", "res7"};
  static std::vector<std::string> names;
  names.clear();
  for (const char* b : kBlocks) {
    for (const char* conv : {".conv1", ".conv2"}) {
      names.push_back(std::string(b) + conv + ".weight");
      names.push_back(std::string(b) + conv + ".bias");
    }
  }
  for (std::size_t i = 0; i < names.size(); i += 2) {
    t.push_back({names[i].c_str(), {256, 256, 3, 3}});
    t.push_back({names[i + 1].c_str(), {256, 1, 1, 1}});
  }
  t.push_back({"up1.weight", {256, 128, 4, 4}});
  t.push_back({"up1.bias", {128, 1, 1, 1}});
  t.push_back({"up2.weight", {128, 64, 4, 4}});
  t.push_back({"up2.bias", {64, 1, 1, 1}});
  t.push_back({"out.weight", {3, 64, 3, 3}});
  t.push_back({"out.bias", {3, 1, 1, 1}});
  return t;
}

std::vector<ShapeRow> DetectorTable() {
  return {
      {"conv1.weight", {64, 3, 4, 4}},    {"conv1.bias", {64, 1, 1, 1}},
      {"conv2.weight", {128, 64, 4, 4}},  {"conv2.bias", {128, 1, 1, 1}},
      {"conv3.weight", {256, 128, 4, 4}}, {"conv3.bias", {256, 1, 1, 1}},
      {"conv4.weight", {256, 256, 4, 4}}, {"conv4.bias", {256, 1, 1, 1}},
      {"conv5.weight", {256, 256, 4, 4}}, {"conv5.bias", {256, 1, 1, 1}},
      {"up1.weight", {256, 128, 4, 4}},   {"up1.bias", {128, 1, 1, 1}},
      {"up2.weight", {128, 2, 4, 4}},     {"up2.bias", {2, 1, 1, 1}},
  };
}

Outcome ArchitectureContracts() {
  const Generator gen{GeneratorConfig{}};
  const Detector det{DetectorConfig{}};
  const nn::ParamSet gp = gen.Build(1);
  const nn::ParamSet dp = det.Build(2);
  std::string why;
  bool pass = true;
  std::string detail;
  if (!MatchTable(gp, GeneratorTable(), &why)) {
    pass = false;
    detail += "generator table: " + why + "; ";
  }
  if (!MatchTable(dp, DetectorTable(), &why)) {
    pass = false;
    detail += "detector table: " + why + "; ";
  }
  pass &= gp.ScalarCount() == 10756675 && dp.ScalarCount() == 3285058;
  detail += "params G=" + std::to_string(gp.ScalarCount()) +
            " D=" + std::to_string(dp.ScalarCount()) + "; ";

  const Tensor images = RandomTensor(1, 3, 64, 64, 3, 0.0, 1.0);
  Tensor masks(1, 1, 64, 64);
  for (int y = 20; y < 40; ++y) {
    for (int x = 10; x < 50; ++x) masks.at(0, 0, y, x) = 1.0;
  }
  const Tensor out = gen.Forward(gp, images, masks, nullptr);
  const Tensor v = det.Forward(dp, images, nullptr);
  const auto [gmin, gmax] = std::minmax_element(out.vec().begin(), out.vec().end());
  const auto [vmin, vmax] = std::minmax_element(v.vec().begin(), v.vec().end());
  const bool shapes = out.shape() == std::vector<int>{1, 3, 64, 64} &&
                      v.shape() == std::vector<int>{1, 1, 64, 64};
  const bool ranges = *gmin > 0.0 && *gmax < 1.0 && *vmin > 0.0 && *vmax < 1.0;
  pass &= shapes && ranges;
  detail += "G out " + out.ShapeString() + " in [" + Fmt("%.4f", *gmin) + ", " +
            Fmt("%.4f", *gmax) + "], V " + v.ShapeString() + " in [" +
            Fmt("%.4f", *vmin) + ", " + Fmt("%.4f", *vmax) + "]";
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 5 and 6. Overfit one batch; det vs weight.

constexpr int kTrainSize = 64;
constexpr int kTrainWidth = 16;
constexpr int kTrainSteps = 300;
constexpr std::uint64_t kTrainSeed = 2026;

training::Batch FixedBatch() {
  std::vector<Image> images;
  std::vector<Mask> masks;
  for (int i = 0; i < 4; ++i) {
    images.push_back(testing::SyntheticImage(100 + i, kTrainSize));
    masks.push_back(testing::StrokeMask(1 + i, 200 + i, kTrainSize));
  }
  return training::MakeBatch(images, masks);
}

training::TrainConfig SmallConfig(training::Mode mode) {
  training::TrainConfig c;
  c.mode = mode;
  c.seed = kTrainSeed;
  c.batch_size = 4;
  c.image_size = kTrainSize;
  c.generator.base_channels = kTrainWidth;
  c.detector.base_channels = kTrainWidth;
  c.Validate();
  return c;
}

// Batch-mean weighted l1 of the current generator under the current
// detector's weight map, computed directly from the public forward passes.
double DetWeightedL1(const training::Trainer& trainer,
                     const training::TrainState& state,
                     const training::Batch& batch) {
  const Tensor out = trainer.Inpaint(state, batch);
  const Tensor v = trainer.Valuate(state, out);
  const std::size_t plane = out.plane_size();
  double total = 0.0;
  for (int n = 0; n < out.n(); ++n) {
    const auto w = losses::MapWeights(
        std::span<const double>(v.sample(n), plane), trainer.config().loss);
    double s = 0.0;
    for (int c = 0; c < out.c(); ++c) {
      for (std::size_t p = 0; p < plane; ++p) {
        const std::size_t i = c * plane + p;
        s += w[p] * std::abs(out.sample(n)[i] - batch.images.sample(n)[i]);
      }
    }
    total += s / out.sample_size();
  }
  return total / out.n();
}

struct DetRun {
  double initial = 0.0;
  double final = 0.0;
  double v_in = 0.0;
  double v_out = 0.0;
  double masked_l1 = 0.0;
};

DetRun RunDet(const training::Batch& batch) {
  const training::Trainer trainer(SmallConfig(training::Mode::kDet));
  training::TrainState state = trainer.Initialize();
  DetRun r;
  r.initial = DetWeightedL1(trainer, state, batch);
  for (int s = 0; s < kTrainSteps; ++s) trainer.Step(&state, batch);
  r.final = DetWeightedL1(trainer, state, batch);
  const Tensor out = trainer.Inpaint(state, batch);
  const auto [in, outside] =
      training::MeanValuationInOut(trainer.Valuate(state, out), batch.masks);
  r.v_in = in;
  r.v_out = outside;
  r.masked_l1 = training::MaskedL1(out, batch);
  return r;
}

double RunWeightMaskedL1(const training::Batch& batch) {
  const training::Trainer trainer(SmallConfig(training::Mode::kWeight));
  training::TrainState state = trainer.Initialize();
  for (int s = 0; s < kTrainSteps; ++s) trainer.Step(&state, batch);
  return training::MaskedL1(trainer.Inpaint(state, batch), batch);
}

// ---------------------------------------------------------------------------
// 7. Metric oracles.

Outcome MetricOracles() {
  bool pass = true;
  std::string detail;
  const Image a = testing::SyntheticImage(1, 32);
  Image b = a;
  for (std::size_t i = 0; i < b.data.size(); ++i) {
    b.data[i] += (i % 2 == 0) ? 0.1 : -0.1;
  }
  const double psnr = metrics::Psnr(b, a);
  pass &= std::abs(psnr - 20.0) < 1e-9;
  detail += "psnr " + Fmt("%.12f", psnr);

  const double ssim = metrics::Ssim(a, a);
  pass &= std::abs(ssim - 1.0) < 1e-9;
  detail += ", ssim(x,x) " + Fmt("%.12f", ssim);

  metrics::FeatureSetStats s1;
  s1.mean = Eigen::VectorXd::Zero(2);
  s1.covariance = Eigen::MatrixXd::Identity(2, 2);
  metrics::FeatureSetStats s2 = s1;
  s2.mean(0) = 1.0;
  metrics::FeatureSetStats s3 = s1;
  s3.covariance *= 4.0;
  const double f0 = metrics::FrechetDistance(s1, s1);
  const double f1 = metrics::FrechetDistance(s1, s2);
  const double f2 = metrics::FrechetDistance(s1, s3);
  pass &= std::abs(f0) < 1e-6 && std::abs(f1 - 1.0) < 1e-6 &&
          std::abs(f2 - 2.0) < 1e-6;
  detail += ", frechet " + Fmt("%.3g", f0) + "/" + Fmt("%.9f", f1) + "/" +
            Fmt("%.9f", f2);

  const Image c = testing::SyntheticImage(2, 32);
  double sum = 0.0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      for (int ch = 0; ch < 3; ++ch) sum += std::abs(a.at(y, x, ch) - c.at(y, x, ch));
    }
  }
  const double oracle = 100.0 * sum / (32 * 32 * 3);
  const double l1 = metrics::L1ErrorPercent(a, c);
  pass &= std::abs(l1 - oracle) < 1e-10;
  detail += ", l1 dev " + Fmt("%.3g", std::abs(l1 - oracle));
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 8. Mask pipeline.

int RunCli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"detpaint"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::Run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome MaskPipeline() {
  const auto root = testing::TempDir("acceptance_masks");
  const auto a = root / "a", b = root / "b";
  const std::vector<std::string> common = {"genmasks", "--per-bucket", "100",
                                           "--seed", "77"};
  auto with_out = [&](const std::filesystem::path& dir) {
    auto args = common;
    args.push_back("--out");
    args.push_back(dir.string());
    return args;
  };
  const int code_a = RunCli(with_out(a));
  const int code_b = RunCli(with_out(b));
  int total = 0, misplaced = 0, differing = 0;
  for (int bucket = 0; bucket < maskgen::kNumBuckets; ++bucket) {
    const auto files = ListImageFiles(a / std::to_string(bucket), false, true);
    for (const auto& f : files) {
      ++total;
      const Mask m = LoadMask(f, 256);
      const auto got = maskgen::BucketOf(maskgen::MaskRatio(m));
      if (!got || got->index != bucket) ++misplaced;
      const auto twin = b / std::to_string(bucket) / f.filename();
      if (testing::ReadBytes(f) != testing::ReadBytes(twin)) ++differing;
    }
  }
  std::filesystem::remove_all(root);
  const bool pass = code_a == 0 && code_b == 0 && total == 600 &&
                    misplaced == 0 && differing == 0;
  return {pass, std::to_string(total) + " masks, " + std::to_string(misplaced) +
                    " outside their bucket, " + std::to_string(differing) +
                    " differ between runs"};
}

// ---------------------------------------------------------------------------
// 9. Resume reproducibility.

Outcome ResumeReproducibility() {
  training::Dataset data;
  for (int i = 0; i < 4; ++i) {
    data.images.push_back(testing::SyntheticImage(300 + i, kTrainSize));
    data.masks.push_back(testing::StrokeMask(i + 1, 400 + i, kTrainSize));
  }
  training::TrainConfig config = SmallConfig(training::Mode::kDet);
  config.batch_size = 2;
  config.epochs = 25;  // 2 steps per epoch
  config.checkpoint_interval = 25;
  const training::Trainer trainer(config);

  const auto root = testing::TempDir("acceptance_resume");
  training::LoopOptions full;
  full.out_dir = root / "full";
  const training::TrainState uninterrupted =
      training::TrainLoop(trainer, data, trainer.Initialize(), full);

  const training::Checkpoint mid =
      training::LoadCheckpoint(training::CheckpointPath(root / "full", 25));
  training::LoopOptions resumed_opts;
  resumed_opts.out_dir = root / "resumed";
  const training::TrainState resumed = training::TrainLoop(
      trainer, data, training::StateFromCheckpoint(mid, config), resumed_opts);

  const auto bytes_full =
      testing::ReadBytes(training::CheckpointPath(root / "full", 50));
  const auto bytes_resumed =
      testing::ReadBytes(training::CheckpointPath(root / "resumed", 50));
  std::filesystem::remove_all(root);
  const bool equal_state = uninterrupted == resumed;
  const bool equal_bytes = !bytes_full.empty() && bytes_full == bytes_resumed;
  const bool pass = mid.step == 25 && uninterrupted.step == 50 &&
                    equal_state && equal_bytes;
  return {pass, std::string("steps 50, resumed from 25; state ") +
                    (equal_state ? "bitwise equal" : "DIFFERS") +
                    ", checkpoint bytes " + (equal_bytes ? "equal" : "DIFFER")};
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace detpaint

int main() {
  using namespace detpaint;
  using Clock = std::chrono::steady_clock;

  // Criteria 5 and 6 share the det-mode run.
  std::optional<DetRun> det_run;
  std::optional<training::Batch> batch;
  auto ensure_det = [&] {
    if (!batch) batch = FixedBatch();
    if (!det_run) det_run = RunDet(*batch);
  };

  const std::vector<Criterion> criteria = {
      {1, "loss identity suite", LossIdentities},
      {2, "closed-form loss values", ClosedForms},
      {3, "gradient oracle", GradientOracle},
      {4, "architecture contracts", ArchitectureContracts},
      {5, "overfit one batch (det mode)",
       [&] {
         ensure_det();
         const double ratio = det_run->initial / det_run->final;
         const bool pass = ratio >= 5.0 && det_run->v_in > det_run->v_out;
         return Outcome{
             pass, "weighted l1 " + Fmt("%.5f", det_run->initial) + " -> " +
                       Fmt("%.5f", det_run->final) + " (x" + Fmt("%.2f", ratio) +
                       "), mean V in " + Fmt("%.4f", det_run->v_in) +
                       " vs out " + Fmt("%.4f", det_run->v_out) + ", width " +
                       std::to_string(kTrainWidth) + ", " +
                       std::to_string(kTrainSteps) + " steps"};
       }},
      {6, "det vs weight masked l1",
       [&] {
         ensure_det();
         const double weight = RunWeightMaskedL1(*batch);
         const bool pass = det_run->masked_l1 <= weight;
         return Outcome{pass, "masked l1 det " +
                                  Fmt("%.6f", det_run->masked_l1) +
                                  " vs weight " + Fmt("%.6f", weight)};
       }},
      {7, "metric oracles", MetricOracles},
      {8, "mask pipeline", MaskPipeline},
      {9, "resume reproducibility", ResumeReproducibility},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(Clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("[%s] criterion %d: %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL",
                c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
