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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "detpaint/training.h"

namespace detpaint::training {
namespace {

constexpr std::uint32_t kMaskStreamTag = 0x6d61736b;

std::mt19937_64 Stream(std::uint64_t seed,
                       std::initializer_list<std::uint32_t> extra) {
  std::vector<std::uint32_t> words = {static_cast<std::uint32_t>(seed),
                                      static_cast<std::uint32_t>(seed >> 32)};
  words.insert(words.end(), extra);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

Dataset Dataset::Load(const std::filesystem::path& images_dir,
                      const std::filesystem::path& masks_dir, int image_size,
                      int channels) {
  Dataset d;
  for (const auto& p : ListImageFiles(images_dir, false)) {
    d.images.push_back(LoadImage(p, image_size, channels));
  }
  for (const auto& p : ListImageFiles(masks_dir, true, true)) {
    d.masks.push_back(LoadMask(p, image_size));
  }
  if (d.images.empty()) {
    throw ValidationError("no images found in " + images_dir.string());
  }
  if (d.masks.empty()) {
    throw ValidationError("no masks found in " + masks_dir.string());
  }
  return d;
}

int StepsPerEpoch(const TrainConfig& config, std::size_t dataset_size) {
  if (dataset_size == 0) throw ValidationError("dataset is empty");
  return static_cast<int>((dataset_size + config.batch_size - 1) /
                          config.batch_size);
}

BatchPlan PlanBatch(const TrainConfig& config, std::uint64_t data_seed,
                    std::int64_t step, std::size_t num_images,
                    std::size_t num_masks) {
  if (num_images == 0 || num_masks == 0) {
    throw ValidationError("dataset is empty");
  }
  const int spe = StepsPerEpoch(config, num_images);
  const auto epoch = static_cast<std::uint32_t>(step / spe);
  const auto k = static_cast<std::uint32_t>(step % spe);

  std::vector<std::size_t> order(num_images);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng = Stream(data_seed, {epoch});
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  BatchPlan plan;
  const std::size_t begin = static_cast<std::size_t>(k) * config.batch_size;
  const std::size_t end =
      std::min(begin + static_cast<std::size_t>(config.batch_size), num_images);
  plan.images.assign(order.begin() + begin, order.begin() + end);

  std::mt19937_64 mask_rng = Stream(data_seed, {epoch, k, kMaskStreamTag});
  std::uniform_int_distribution<std::size_t> pick(0, num_masks - 1);
  for (std::size_t i = 0; i < plan.images.size(); ++i) {
    plan.masks.push_back(pick(mask_rng));
  }
  return plan;
}

std::filesystem::path CheckpointPath(const std::filesystem::path& out_dir,
                                     std::int64_t step) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%08lld.ckpt",
                static_cast<long long>(step));
  return out_dir / "checkpoints" / name;
}

TrainState TrainLoop(const Trainer& trainer, const Dataset& dataset,
                     TrainState state, const LoopOptions& options) {
  if (dataset.images.empty() || dataset.masks.empty()) {
    throw ValidationError("dataset is empty");
  }
  const TrainConfig& config = trainer.config();
  const std::int64_t total =
      static_cast<std::int64_t>(config.epochs) *
      StepsPerEpoch(config, dataset.images.size());

  std::ofstream log;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir / "checkpoints");
    std::filesystem::create_directories(*options.out_dir / "logs");
    const auto log_path = *options.out_dir / "logs" / "metrics.jsonl";
    log.open(log_path, std::ios::app);
    if (!log) throw IoError("cannot open " + log_path.string());
  }

  auto save = [&](const TrainState& s) {
    if (!options.out_dir) return;
    const auto path = CheckpointPath(*options.out_dir, s.step);
    SaveCheckpoint(ToCheckpoint(config, s), path);
    std::ofstream latest(*options.out_dir / "checkpoints" / "latest");
    latest << path.filename().string() << "\n";
  };

  while (state.step < total) {
    const BatchPlan plan =
        PlanBatch(config, state.data_seed, state.step, dataset.images.size(),
                  dataset.masks.size());
    std::vector<Image> images;
    std::vector<Mask> masks;
    for (std::size_t i = 0; i < plan.images.size(); ++i) {
      images.push_back(dataset.images[plan.images[i]]);
      masks.push_back(dataset.masks[plan.masks[i]]);
    }
    const StepMetrics m = trainer.Step(&state, MakeBatch(images, masks));
    if (log.is_open()) {
      log << MetricsToJson(m).dump() << "\n";
      log.flush();
    }
    if (options.on_step) options.on_step(m);
    if (state.step % config.checkpoint_interval == 0 || state.step == total) {
      save(state);
    }
  }
  return state;
}

}  // namespace detpaint::training
