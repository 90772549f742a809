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

// Training frameworks:
//
//   det     detector-weighted reconstruction. Each step updates the detector
//           on focal loss against the hole mask, then the generator on
//           weighted l1 with W = weight_map(Det(G(I_in, M))).
//   weight  generator only, l1 weighted lambda_hole inside / lambda_valid
//           outside the hole.
//   adv     discriminator (detector backbone + global-average head) and
//           generator with lambda_adv * adversarial + lambda_l1 * l1.

#ifndef DETPAINT_TRAINING_H_
#define DETPAINT_TRAINING_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "detpaint/detector.h"
#include "detpaint/generator.h"
#include "detpaint/imaging.h"
#include "detpaint/losses.h"
#include "detpaint/nn.h"

namespace detpaint::training {

enum class Mode { kDet, kWeight, kAdv };

std::string ToString(Mode mode);
Mode ParseMode(const std::string& name);

// Raised for invalid configuration keys or values; names the offending key.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Raised when a step produces a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  Mode mode = Mode::kDet;
  double learning_rate = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  int batch_size = 8;
  int epochs = 1;
  int image_size = 64;
  int image_channels = 3;
  std::uint64_t seed = 0;
  bool stop_gradient_through_valuation = false;
  int checkpoint_interval = 100;
  losses::LossConfig loss;
  GeneratorConfig generator;
  DetectorConfig detector;

  void Validate() const;
  nn::AdamConfig adam() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::json ConfigToJson(const TrainConfig& config);
// Starts from `base` and overrides every key present in `j`. Unknown keys
// throw ConfigError naming the key.
TrainConfig ConfigFromJson(const nlohmann::json& j,
                           const TrainConfig& base = TrainConfig{});

struct TrainState {
  GeneratorParams generator;
  nn::AdamState generator_adam;
  // Detector (det mode) or discriminator (adv mode); empty in weight mode.
  DetectorParams critic;
  nn::AdamState critic_adam;
  std::int64_t step = 0;
  // Batch order and mask pairing are counter-based functions of (seed, step),
  // so the step counter is the complete data-RNG state.
  std::uint64_t data_seed = 0;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

struct Batch {
  Tensor images;  // ground truth, N x C x H x W
  Tensor masks;   // N x 1 x H x W, 0/1
};

Batch MakeBatch(std::span<const Image> images, std::span<const Mask> masks);

// I_gt * (1 - M) + M on batch tensors.
Tensor ComposeBatchInput(const Batch& batch);

struct StepMetrics {
  std::int64_t step = 0;
  Mode mode = Mode::kDet;
  double loss_g = 0.0;
  std::optional<double> loss_d;
  std::optional<double> mean_v_in;
  std::optional<double> mean_v_out;
  double lr = 0.0;
  double wall_ms = 0.0;
};

nlohmann::json MetricsToJson(const StepMetrics& m);
StepMetrics MetricsFromJson(const nlohmann::json& j);

// Derives the network initialisation seeds from the run seed.
std::uint64_t GeneratorInitSeed(std::uint64_t seed);
std::uint64_t CriticInitSeed(std::uint64_t seed);

class Trainer {
 public:
  explicit Trainer(const TrainConfig& config);

  const TrainConfig& config() const { return config_; }
  const Generator& generator() const { return generator_; }
  const Detector& critic() const { return critic_; }
  bool has_critic() const { return config_.mode != Mode::kWeight; }

  TrainState Initialize() const;

  // Dispatches on config().mode. Increments state->step.
  StepMetrics Step(TrainState* state, const Batch& batch) const;

  StepMetrics StepDet(TrainState* state, const Batch& batch) const;
  StepMetrics StepWeight(TrainState* state, const Batch& batch) const;
  StepMetrics StepAdv(TrainState* state, const Batch& batch) const;

  // Det mode: one detector update with the generator held fixed. Returns the
  // focal loss before the update. Does not advance state->step.
  double DetectorOnlyStep(TrainState* state, const Batch& batch) const;

  // Generator output on the batch (no update).
  Tensor Inpaint(const TrainState& state, const Batch& batch) const;
  // Detector valuation of `images` (det mode).
  Tensor Valuate(const TrainState& state, const Tensor& images) const;

  // Gradient of the det-mode generator objective with respect to the
  // generator parameters, without updating anything. Exposed for tests.
  GeneratorParams DetGeneratorGradient(const TrainState& state,
                                       const Batch& batch,
                                       bool stop_gradient) const;

 private:
  void CheckBatch(const Batch& batch) const;
  // Weighted l1 of `out` under W = weight_map(Det(out)); fills dL/dout and
  // the valuation used.
  double WeightedReconstructionGrad(const TrainState& state,
                                    const Batch& batch, const Tensor& out,
                                    bool stop_gradient, Tensor* grad_out,
                                    Tensor* valuation) const;
  static void CheckFinite(double value, const char* what, std::int64_t step);

  TrainConfig config_;
  Generator generator_;
  Detector critic_;
};

// Mean |out - gt| over hole pixels and channels, per batch.
double MaskedL1(const Tensor& out, const Batch& batch);
// Mean valuation inside/outside the holes.
std::pair<double, double> MeanValuationInOut(const Tensor& valuation,
                                             const Tensor& masks);

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout (little-endian):
//   8 bytes   magic "DPCKPT\0\1"
//   uint32    format version
//   uint64    header byte length
//   header    JSON: {"format_version", "config", "seed", "step", "data_seed",
//              "sections": [{"name", "adam_step", "tensors":
//              [{"name", "shape"}]}]}
//   payload   float64 tensor data, sections and tensors in header order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointSection {
  std::string name;
  std::int64_t adam_step = 0;
  nn::ParamSet tensors;
};

struct Checkpoint {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::uint64_t data_seed = 0;
  std::vector<CheckpointSection> sections;

  const CheckpointSection* Find(const std::string& name) const;
};

std::vector<std::uint8_t> SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint DeserializeCheckpoint(std::span<const std::uint8_t> bytes);
void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

Checkpoint ToCheckpoint(const TrainConfig& config, const TrainState& state);
// Rejects sections whose tensor names or shapes differ from the networks
// built from `config`.
TrainState StateFromCheckpoint(const Checkpoint& ckpt,
                               const TrainConfig& config);
TrainConfig ConfigFromCheckpoint(const Checkpoint& ckpt);

// Section name of the second network for a mode, or "" in weight mode.
std::string CriticSectionName(Mode mode);

// ---------------------------------------------------------------------------
// Data and loop

struct Dataset {
  std::vector<Image> images;
  std::vector<Mask> masks;

  // Loads every PNG/JPEG under images_dir (sorted by path) and every PNG under
  // masks_dir (recursively, sorted by path).
  static Dataset Load(const std::filesystem::path& images_dir,
                      const std::filesystem::path& masks_dir, int image_size,
                      int channels);
};

int StepsPerEpoch(const TrainConfig& config, std::size_t dataset_size);

// Sample indices and mask indices used at global step `step`.
struct BatchPlan {
  std::vector<std::size_t> images;
  std::vector<std::size_t> masks;
};
BatchPlan PlanBatch(const TrainConfig& config, std::uint64_t data_seed,
                    std::int64_t step, std::size_t num_images,
                    std::size_t num_masks);

struct LoopOptions {
  // When set: checkpoints/ and logs/metrics.jsonl are written below it.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const StepMetrics&)> on_step;
};

// Runs from state.step to epochs * StepsPerEpoch. Checkpoints every
// checkpoint_interval steps and at the end.
TrainState TrainLoop(const Trainer& trainer, const Dataset& dataset,
                     TrainState state, const LoopOptions& options);

std::filesystem::path CheckpointPath(const std::filesystem::path& out_dir,
                                     std::int64_t step);

}  // namespace detpaint::training

#endif  // DETPAINT_TRAINING_H_
