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

#include "detpaint/training.h"

#include <cmath>
#include <string>

namespace detpaint::training {
namespace {

using Clock = std::chrono::steady_clock;

double ElapsedMs(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename T>
T Read(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void ReadLoss(const nlohmann::json& j, losses::LossConfig* loss) {
  if (!j.is_object()) throw ConfigError("config key 'loss' must be an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = "loss." + key;
    if (key == "gamma") {
      loss->gamma = Read<double>(value, path);
    } else if (key == "mapping_kind") {
      try {
        loss->mapping = losses::ParseMappingKind(Read<std::string>(value, path));
      } catch (const ValidationError& e) {
        throw ConfigError("config key '" + path + "': " + e.what());
      }
    } else if (key == "base_x") {
      loss->base_x = Read<double>(value, path);
    } else if (key == "lambda_adv") {
      loss->lambda_adv = Read<double>(value, path);
    } else if (key == "lambda_l1") {
      loss->lambda_l1 = Read<double>(value, path);
    } else if (key == "lambda_1") {
      loss->lambda_hole = Read<double>(value, path);
    } else if (key == "lambda_2") {
      loss->lambda_valid = Read<double>(value, path);
    } else {
      throw ConfigError("unknown config key '" + path + "'");
    }
  }
}

void ReadGenerator(const nlohmann::json& j, GeneratorConfig* g) {
  if (!j.is_object()) {
    throw ConfigError("config key 'generator' must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    const std::string path = "generator." + key;
    if (key == "base_channels") {
      g->base_channels = Read<int>(value, path);
    } else if (key == "num_residual_blocks") {
      g->num_residual_blocks = Read<int>(value, path);
    } else if (key == "dilation") {
      g->dilation = Read<int>(value, path);
    } else {
      throw ConfigError("unknown config key '" + path + "'");
    }
  }
}

void ReadDetector(const nlohmann::json& j, DetectorConfig* d) {
  if (!j.is_object()) {
    throw ConfigError("config key 'detector' must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    const std::string path = "detector." + key;
    if (key == "base_channels") {
      d->base_channels = Read<int>(value, path);
    } else if (key == "leaky_slope") {
      d->leaky_slope = Read<double>(value, path);
    } else {
      throw ConfigError("unknown config key '" + path + "'");
    }
  }
}

}  // namespace

std::string ToString(Mode mode) {
  switch (mode) {
    case Mode::kDet:
      return "det";
    case Mode::kWeight:
      return "weight";
    case Mode::kAdv:
      return "adv";
  }
  return "?";
}

Mode ParseMode(const std::string& name) {
  if (name == "det") return Mode::kDet;
  if (name == "weight") return Mode::kWeight;
  if (name == "adv") return Mode::kAdv;
  throw ConfigError("unknown mode '" + name + "' (expected det, weight, adv)");
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (image_size <= 0 || image_size % 4 != 0) {
    throw ConfigError("image_size must be a positive multiple of 4");
  }
  if (checkpoint_interval < 1) {
    throw ConfigError("checkpoint_interval must be >= 1");
  }
  if (image_channels != 1 && image_channels != 3) {
    throw ConfigError("image_channels must be 1 or 3");
  }
  try {
    loss.Validate();
    generator.Validate();
    detector.Validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  if (generator.image_channels != image_channels ||
      detector.image_channels != image_channels) {
    throw ConfigError("network image_channels differ from image_channels");
  }
}

nn::AdamConfig TrainConfig::adam() const {
  nn::AdamConfig adam;
  adam.learning_rate = learning_rate;
  adam.beta1 = beta1;
  adam.beta2 = beta2;
  return adam;
}

nlohmann::json ConfigToJson(const TrainConfig& c) {
  return {
      {"mode", ToString(c.mode)},
      {"learning_rate", c.learning_rate},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"image_size", c.image_size},
      {"image_channels", c.image_channels},
      {"seed", c.seed},
      {"stop_gradient_through_valuation", c.stop_gradient_through_valuation},
      {"checkpoint_interval", c.checkpoint_interval},
      {"loss",
       {{"gamma", c.loss.gamma},
        {"mapping_kind", losses::ToString(c.loss.mapping)},
        {"base_x", c.loss.base_x},
        {"lambda_adv", c.loss.lambda_adv},
        {"lambda_l1", c.loss.lambda_l1},
        {"lambda_1", c.loss.lambda_hole},
        {"lambda_2", c.loss.lambda_valid}}},
      {"generator",
       {{"base_channels", c.generator.base_channels},
        {"num_residual_blocks", c.generator.num_residual_blocks},
        {"dilation", c.generator.dilation}}},
      {"detector",
       {{"base_channels", c.detector.base_channels},
        {"leaky_slope", c.detector.leaky_slope}}},
  };
}

TrainConfig ConfigFromJson(const nlohmann::json& j, const TrainConfig& base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig c = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "mode") {
      c.mode = ParseMode(Read<std::string>(value, key));
    } else if (key == "learning_rate") {
      c.learning_rate = Read<double>(value, key);
    } else if (key == "beta1") {
      c.beta1 = Read<double>(value, key);
    } else if (key == "beta2") {
      c.beta2 = Read<double>(value, key);
    } else if (key == "batch_size") {
      c.batch_size = Read<int>(value, key);
    } else if (key == "epochs") {
      c.epochs = Read<int>(value, key);
    } else if (key == "image_size") {
      c.image_size = Read<int>(value, key);
    } else if (key == "image_channels") {
      c.image_channels = Read<int>(value, key);
    } else if (key == "seed") {
      c.seed = Read<std::uint64_t>(value, key);
    } else if (key == "stop_gradient_through_valuation") {
      c.stop_gradient_through_valuation = Read<bool>(value, key);
    } else if (key == "checkpoint_interval") {
      c.checkpoint_interval = Read<int>(value, key);
    } else if (key == "loss") {
      ReadLoss(value, &c.loss);
    } else if (key == "generator") {
      ReadGenerator(value, &c.generator);
    } else if (key == "detector") {
      ReadDetector(value, &c.detector);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  c.generator.image_channels = c.image_channels;
  c.detector.image_channels = c.image_channels;
  c.Validate();
  return c;
}

nlohmann::json MetricsToJson(const StepMetrics& m) {
  nlohmann::json j = {{"step", m.step},
                      {"mode", ToString(m.mode)},
                      {"loss_g", m.loss_g},
                      {"lr", m.lr},
                      {"wall_ms", m.wall_ms}};
  if (m.loss_d) j["loss_d"] = *m.loss_d;
  if (m.mean_v_in) j["mean_v_in"] = *m.mean_v_in;
  if (m.mean_v_out) j["mean_v_out"] = *m.mean_v_out;
  return j;
}

StepMetrics MetricsFromJson(const nlohmann::json& j) {
  StepMetrics m;
  m.step = j.at("step").get<std::int64_t>();
  m.mode = ParseMode(j.at("mode").get<std::string>());
  m.loss_g = j.at("loss_g").get<double>();
  m.lr = j.at("lr").get<double>();
  m.wall_ms = j.at("wall_ms").get<double>();
  if (j.contains("loss_d")) m.loss_d = j["loss_d"].get<double>();
  if (j.contains("mean_v_in")) m.mean_v_in = j["mean_v_in"].get<double>();
  if (j.contains("mean_v_out")) m.mean_v_out = j["mean_v_out"].get<double>();
  return m;
}

std::uint64_t GeneratorInitSeed(std::uint64_t seed) {
  return SplitMix64(seed ^ 0x67656e657261746fULL);
}

std::uint64_t CriticInitSeed(std::uint64_t seed) {
  return SplitMix64(seed ^ 0x6465746563746f72ULL);
}

Batch MakeBatch(std::span<const Image> images, std::span<const Mask> masks) {
  if (images.size() != masks.size()) {
    throw ValidationError("batch: image and mask counts differ");
  }
  Batch batch{ImagesToTensor(images), MasksToTensor(masks)};
  if (batch.images.h() != batch.masks.h() ||
      batch.images.w() != batch.masks.w()) {
    throw ValidationError("batch: image and mask sizes differ");
  }
  return batch;
}

Tensor ComposeBatchInput(const Batch& batch) {
  Tensor in = batch.images;
  const std::size_t plane = in.plane_size();
  for (int n = 0; n < in.n(); ++n) {
    const double* m = batch.masks.sample(n);
    for (int c = 0; c < in.c(); ++c) {
      double* p = in.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] = p[i] * (1.0 - m[i]) + m[i];
    }
  }
  return in;
}

double MaskedL1(const Tensor& out, const Batch& batch) {
  const std::size_t plane = out.plane_size();
  double sum = 0.0;
  double count = 0.0;
  for (int n = 0; n < out.n(); ++n) {
    const double* m = batch.masks.sample(n);
    for (int c = 0; c < out.c(); ++c) {
      const double* o = out.sample(n) + c * plane;
      const double* g = batch.images.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        if (m[i] > 0.5) {
          sum += std::abs(o[i] - g[i]);
          count += 1.0;
        }
      }
    }
  }
  return count > 0.0 ? sum / count : 0.0;
}

std::pair<double, double> MeanValuationInOut(const Tensor& valuation,
                                             const Tensor& masks) {
  double in = 0.0, out = 0.0, n_in = 0.0, n_out = 0.0;
  for (std::size_t i = 0; i < valuation.size(); ++i) {
    if (masks.data()[i] > 0.5) {
      in += valuation.data()[i];
      n_in += 1.0;
    } else {
      out += valuation.data()[i];
      n_out += 1.0;
    }
  }
  return {n_in > 0.0 ? in / n_in : 0.0, n_out > 0.0 ? out / n_out : 0.0};
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const TrainConfig& config)
    : config_(config),
      generator_(config.generator),
      critic_(config.detector) {
  config_.Validate();
}

TrainState Trainer::Initialize() const {
  TrainState state;
  state.generator = generator_.Build(GeneratorInitSeed(config_.seed));
  state.generator_adam = nn::AdamState::For(state.generator);
  if (has_critic()) {
    state.critic = critic_.Build(CriticInitSeed(config_.seed));
    state.critic_adam = nn::AdamState::For(state.critic);
  }
  state.data_seed = config_.seed;
  return state;
}

void Trainer::CheckBatch(const Batch& batch) const {
  if (batch.images.n() < 1) throw ValidationError("empty batch");
  if (batch.images.c() != config_.image_channels) {
    throw ValidationError("batch has the wrong number of channels");
  }
  if (batch.masks.n() != batch.images.n() || batch.masks.c() != 1 ||
      batch.masks.h() != batch.images.h() ||
      batch.masks.w() != batch.images.w()) {
    throw ValidationError("batch masks do not match images");
  }
  CheckDivisibleByFour(batch.images.h(), batch.images.w(), "batch");
}

void Trainer::CheckFinite(double value, const char* what, std::int64_t step) {
  if (!std::isfinite(value)) {
    throw TrainingError(std::string("non-finite ") + what + " at step " +
                        std::to_string(step) + ": " + std::to_string(value));
  }
}

StepMetrics Trainer::Step(TrainState* state, const Batch& batch) const {
  switch (config_.mode) {
    case Mode::kDet:
      return StepDet(state, batch);
    case Mode::kWeight:
      return StepWeight(state, batch);
    case Mode::kAdv:
      return StepAdv(state, batch);
  }
  throw ValidationError("unknown mode");
}

Tensor Trainer::Inpaint(const TrainState& state, const Batch& batch) const {
  return generator_.Forward(state.generator, ComposeBatchInput(batch),
                            batch.masks, nullptr);
}

Tensor Trainer::Valuate(const TrainState& state, const Tensor& images) const {
  if (config_.mode != Mode::kDet) {
    throw ValidationError("valuation maps exist only in det mode");
  }
  return critic_.Forward(state.critic, images, nullptr);
}

namespace {

// Focal loss of the detector on `images` against the batch masks, averaged
// over the batch. Fills grad_valuation with dL/dV.
double BatchFocal(const Tensor& valuation, const Tensor& masks, double gamma,
                  Tensor* grad_valuation) {
  const int batch = valuation.n();
  const std::size_t plane = valuation.plane_size();
  *grad_valuation = Tensor(batch, 1, valuation.h(), valuation.w());
  double total = 0.0;
  for (int n = 0; n < batch; ++n) {
    std::span<const double> v(valuation.sample(n), plane);
    std::span<const double> m(masks.sample(n), plane);
    double holes = 0.0;
    for (double x : m) holes += x;
    const double alpha = holes / static_cast<double>(plane);
    const losses::LossGrad lg = losses::FocalLossGrad(v, m, alpha, gamma);
    total += lg.value / batch;
    double* g = grad_valuation->sample(n);
    for (std::size_t i = 0; i < plane; ++i) g[i] = lg.grad[i] / batch;
  }
  return total;
}

}  // namespace

double Trainer::DetectorOnlyStep(TrainState* state, const Batch& batch) const {
  CheckBatch(batch);
  if (config_.mode != Mode::kDet) {
    throw ValidationError("DetectorOnlyStep requires det mode");
  }
  const Tensor out = Inpaint(*state, batch);
  DetectorTape tape;
  const Tensor v = critic_.Forward(state->critic, out, &tape);
  Tensor grad_v;
  const double loss = BatchFocal(v, batch.masks, config_.loss.gamma, &grad_v);
  CheckFinite(loss, "detector loss", state->step);
  DetectorParams grads = state->critic.ZerosLike();
  critic_.Backward(state->critic, tape, grad_v, &grads);
  state->critic_adam.Apply(config_.adam(), grads, &state->critic);
  return loss;
}

double Trainer::WeightedReconstructionGrad(const TrainState& state,
                                           const Batch& batch,
                                           const Tensor& out,
                                           bool stop_gradient,
                                           Tensor* grad_out,
                                           Tensor* valuation) const {
  DetectorTape det_tape;
  *valuation = critic_.Forward(state.critic, out, &det_tape);
  const Tensor& v = *valuation;
  const int b = out.n();
  const std::size_t plane = out.plane_size();
  const std::size_t sample = out.sample_size();
  *grad_out = Tensor(out.n(), out.c(), out.h(), out.w());
  Tensor grad_v(b, 1, out.h(), out.w());
  double loss = 0.0;
  for (int n = 0; n < b; ++n) {
    std::span<const double> vn(v.sample(n), plane);
    const std::vector<double> w = losses::MapWeights(vn, config_.loss);
    std::vector<double> grad_w;
    const losses::LossGrad lg = losses::WeightedL1Grad(
        std::span<const double>(out.sample(n), sample),
        std::span<const double>(batch.images.sample(n), sample), w, out.c(),
        &grad_w);
    loss += lg.value / b;
    for (std::size_t i = 0; i < sample; ++i) {
      grad_out->sample(n)[i] = lg.grad[i] / b;
    }
    if (!stop_gradient) {
      const std::vector<double> dw =
          losses::MapWeightsDerivative(vn, config_.loss);
      for (std::size_t i = 0; i < plane; ++i) {
        grad_v.sample(n)[i] = grad_w[i] * dw[i] / b;
      }
    }
  }
  if (!stop_gradient) {
    // W depends on the output through the detector; its parameters stay put.
    const Tensor through =
        critic_.Backward(state.critic, det_tape, grad_v, nullptr);
    for (std::size_t i = 0; i < grad_out->size(); ++i) {
      grad_out->data()[i] += through.data()[i];
    }
  }
  return loss;
}

GeneratorParams Trainer::DetGeneratorGradient(const TrainState& state,
                                              const Batch& batch,
                                              bool stop_gradient) const {
  CheckBatch(batch);
  nn::Tape gen_tape;
  const Tensor out = generator_.Forward(state.generator,
                                        ComposeBatchInput(batch), batch.masks,
                                        &gen_tape);
  Tensor grad_out, v;
  WeightedReconstructionGrad(state, batch, out, stop_gradient, &grad_out, &v);
  GeneratorParams grads = state.generator.ZerosLike();
  generator_.Backward(state.generator, gen_tape, grad_out, &grads);
  return grads;
}

StepMetrics Trainer::StepDet(TrainState* state, const Batch& batch) const {
  CheckBatch(batch);
  if (config_.mode != Mode::kDet) throw ValidationError("StepDet requires det mode");
  const auto start = Clock::now();
  StepMetrics metrics;
  metrics.mode = Mode::kDet;
  metrics.lr = config_.learning_rate;

  // (a) Inpaint.
  nn::Tape gen_tape;
  const Tensor out = generator_.Forward(state->generator,
                                        ComposeBatchInput(batch), batch.masks,
                                        &gen_tape);

  // (b) Detector update on the detached output.
  {
    DetectorTape tape;
    const Tensor v = critic_.Forward(state->critic, out, &tape);
    Tensor grad_v;
    const double loss_d =
        BatchFocal(v, batch.masks, config_.loss.gamma, &grad_v);
    CheckFinite(loss_d, "detector loss", state->step);
    DetectorParams grads = state->critic.ZerosLike();
    critic_.Backward(state->critic, tape, grad_v, &grads);
    state->critic_adam.Apply(config_.adam(), grads, &state->critic);
    metrics.loss_d = loss_d;
  }

  // (c) Generator update on the detector-weighted reconstruction loss.
  Tensor grad_out, v;
  const double loss_g = WeightedReconstructionGrad(
      *state, batch, out, config_.stop_gradient_through_valuation, &grad_out,
      &v);
  CheckFinite(loss_g, "generator loss", state->step);
  GeneratorParams grads = state->generator.ZerosLike();
  generator_.Backward(state->generator, gen_tape, grad_out, &grads);
  state->generator_adam.Apply(config_.adam(), grads, &state->generator);

  const auto [v_in, v_out] = MeanValuationInOut(v, batch.masks);
  metrics.loss_g = loss_g;
  metrics.mean_v_in = v_in;
  metrics.mean_v_out = v_out;
  metrics.step = ++state->step;
  metrics.wall_ms = ElapsedMs(start);
  return metrics;
}

StepMetrics Trainer::StepWeight(TrainState* state, const Batch& batch) const {
  CheckBatch(batch);
  const auto start = Clock::now();
  nn::Tape gen_tape;
  const Tensor out = generator_.Forward(state->generator,
                                        ComposeBatchInput(batch), batch.masks,
                                        &gen_tape);
  const int b = out.n();
  const std::size_t plane = out.plane_size();
  const std::size_t sample = out.sample_size();
  Tensor grad_out(out.n(), out.c(), out.h(), out.w());
  double loss_g = 0.0;
  for (int n = 0; n < b; ++n) {
    const losses::LossGrad lg = losses::HardWeightedL1Grad(
        std::span<const double>(out.sample(n), sample),
        std::span<const double>(batch.images.sample(n), sample),
        std::span<const double>(batch.masks.sample(n), plane), out.c(),
        config_.loss.lambda_hole, config_.loss.lambda_valid);
    loss_g += lg.value / b;
    for (std::size_t i = 0; i < sample; ++i) {
      grad_out.sample(n)[i] = lg.grad[i] / b;
    }
  }
  CheckFinite(loss_g, "generator loss", state->step);
  GeneratorParams grads = state->generator.ZerosLike();
  generator_.Backward(state->generator, gen_tape, grad_out, &grads);
  state->generator_adam.Apply(config_.adam(), grads, &state->generator);

  StepMetrics metrics;
  metrics.mode = Mode::kWeight;
  metrics.lr = config_.learning_rate;
  metrics.loss_g = loss_g;
  metrics.step = ++state->step;
  metrics.wall_ms = ElapsedMs(start);
  return metrics;
}

StepMetrics Trainer::StepAdv(TrainState* state, const Batch& batch) const {
  CheckBatch(batch);
  if (config_.mode != Mode::kAdv) throw ValidationError("StepAdv requires adv mode");
  const auto start = Clock::now();
  nn::Tape gen_tape;
  const Tensor out = generator_.Forward(state->generator,
                                        ComposeBatchInput(batch), batch.masks,
                                        &gen_tape);
  const int b = out.n();

  // Discriminator update: real = ground truth, fake = detached output.
  std::vector<double> d_real(b);
  double loss_d = 0.0;
  {
    DetectorTape real_tape, fake_tape;
    const Tensor sr = critic_.Score(state->critic, batch.images, &real_tape);
    const Tensor sf = critic_.Score(state->critic, out, &fake_tape);
    d_real.assign(sr.vec().begin(), sr.vec().end());
    const losses::AdvLosses adv = losses::AdversarialLosses(sr.vec(), sf.vec());
    loss_d = adv.disc_loss;
    CheckFinite(loss_d, "discriminator loss", state->step);
    DetectorParams grads = state->critic.ZerosLike();
    Tensor gr(b, 1, 1, 1), gf(b, 1, 1, 1);
    std::copy(adv.disc_grad_real.begin(), adv.disc_grad_real.end(), gr.data());
    std::copy(adv.disc_grad_fake.begin(), adv.disc_grad_fake.end(), gf.data());
    critic_.BackwardScore(state->critic, real_tape, gr, &grads);
    critic_.BackwardScore(state->critic, fake_tape, gf, &grads);
    state->critic_adam.Apply(config_.adam(), grads, &state->critic);
  }

  // Generator update: lambda_adv * mean log(1 - D(out)) + lambda_l1 * l1.
  DetectorTape tape;
  const Tensor sf = critic_.Score(state->critic, out, &tape);
  const losses::AdvLosses adv = losses::AdversarialLosses(d_real, sf.vec());
  Tensor g_score(b, 1, 1, 1);
  std::copy(adv.gen_grad_fake.begin(), adv.gen_grad_fake.end(), g_score.data());
  const Tensor adv_grad =
      critic_.BackwardScore(state->critic, tape, g_score, nullptr);

  const std::size_t sample = out.sample_size();
  const std::vector<double> ones(out.plane_size(), 1.0);
  const double lambda_adv = config_.loss.lambda_adv;
  const double lambda_l1 = config_.loss.lambda_l1;
  Tensor grad_out(out.n(), out.c(), out.h(), out.w());
  double l1 = 0.0;
  for (int n = 0; n < b; ++n) {
    const losses::LossGrad lg = losses::WeightedL1Grad(
        std::span<const double>(out.sample(n), sample),
        std::span<const double>(batch.images.sample(n), sample), ones,
        out.c());
    l1 += lg.value / b;
    for (std::size_t i = 0; i < sample; ++i) {
      grad_out.sample(n)[i] = lambda_l1 * (lg.grad[i] / b) +
                              lambda_adv * adv_grad.sample(n)[i];
    }
  }
  const double loss_g = lambda_adv * adv.gen_loss + lambda_l1 * l1;
  CheckFinite(loss_g, "generator loss", state->step);
  GeneratorParams grads = state->generator.ZerosLike();
  generator_.Backward(state->generator, gen_tape, grad_out, &grads);
  state->generator_adam.Apply(config_.adam(), grads, &state->generator);

  StepMetrics metrics;
  metrics.mode = Mode::kAdv;
  metrics.lr = config_.learning_rate;
  metrics.loss_g = loss_g;
  metrics.loss_d = loss_d;
  metrics.step = ++state->step;
  metrics.wall_ms = ElapsedMs(start);
  return metrics;
}

}  // namespace detpaint::training
