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

#include "detpaint/cli.h"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "detpaint/maskgen.h"
#include "detpaint/metrics.h"

namespace detpaint::cli {
namespace {

namespace fs = std::filesystem;
using training::TrainConfig;

// Thrown for flag combinations CLI11 cannot express.
class UsageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct GenmasksFlags {
  int per_bucket = 100;
  int size = 256;
  bool border = false;
  int max_attempts = 2000;
};

struct TrainFlags {
  std::string mode;
  std::string images;
  std::string masks;
  std::string resume;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<int> image_size;
  std::optional<int> base_channels;
  std::optional<int> checkpoint_interval;
  std::optional<double> learning_rate;
  bool stop_gradient = false;
};

struct InferFlags {
  std::string checkpoint;
  std::string image;
  std::string mask;
  std::string output;
  bool composite = false;
};

struct EvaluateFlags {
  std::string checkpoint;
  std::string stub;
  std::string images;
  std::string masks;
  std::string report;
  std::optional<int> image_size;
  bool composite = false;
  bool fid = false;
  std::string extractor;
};

struct VisualizeFlags {
  std::string checkpoint;
  std::string stub;
  std::string image;
  std::string mask;
};

nlohmann::json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw training::ConfigError("cannot parse " + path.string() + ": " +
                                e.what());
  }
}

void WriteJsonFile(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + path.string());
}

// Config precedence: base < --config file < individual flags.
TrainConfig ResolveConfig(const GlobalFlags& global, TrainConfig base,
                          const nlohmann::json& flag_overrides) {
  if (!global.config.empty()) {
    base = training::ConfigFromJson(ReadJsonFile(global.config), base);
  }
  nlohmann::json overrides = flag_overrides;
  if (global.seed) overrides["seed"] = *global.seed;
  if (!overrides.empty()) base = training::ConfigFromJson(overrides, base);
  return base;
}

std::string UtcNow() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct LoadedModel {
  TrainConfig config;
  training::TrainState state;
};

LoadedModel LoadModel(const GlobalFlags& global, const fs::path& path) {
  const training::Checkpoint ckpt = training::LoadCheckpoint(path);
  LoadedModel m;
  m.config = ResolveConfig(global, training::ConfigFromCheckpoint(ckpt), {});
  m.state = training::StateFromCheckpoint(ckpt, m.config);
  return m;
}

Image HorizontalConcat(const Image& a, const Image& b) {
  Image out(a.height, a.width + b.width, a.channels);
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < a.channels; ++c) {
        out.at(y, x, c) = x < a.width ? a.at(y, x, c) : b.at(y, x - a.width, c);
      }
    }
  }
  return out;
}

Raster HorizontalConcat(const Raster& a, const Raster& b) {
  Raster out{a.height, a.width + b.width, a.channels, {}};
  out.pixels.reserve(static_cast<std::size_t>(out.height) * out.width *
                     out.channels);
  const std::size_t ra = static_cast<std::size_t>(a.width) * a.channels;
  const std::size_t rb = static_cast<std::size_t>(b.width) * b.channels;
  for (int y = 0; y < a.height; ++y) {
    out.pixels.insert(out.pixels.end(), a.pixels.begin() + y * ra,
                      a.pixels.begin() + (y + 1) * ra);
    out.pixels.insert(out.pixels.end(), b.pixels.begin() + y * rb,
                      b.pixels.begin() + (y + 1) * rb);
  }
  return out;
}

// ---------------------------------------------------------------------------

int RunGenmasks(const GlobalFlags& global, const GenmasksFlags& flags,
                std::ostream& out, std::ostream& err) {
  maskgen::BucketedGenOptions options;
  options.base.size = flags.size;
  options.base.border_constrained = flags.border;
  options.max_attempts = flags.max_attempts;
  options.base.Validate();
  if (flags.per_bucket < 1) throw UsageError("--per-bucket must be >= 1");
  if (flags.max_attempts < 1) throw UsageError("--max-attempts must be >= 1");
  const std::uint64_t seed = global.seed.value_or(0);
  const fs::path root = global.out;

  nlohmann::json summary = {{"seed", seed},
                            {"size", flags.size},
                            {"border", flags.border},
                            {"per_bucket", flags.per_bucket},
                            {"buckets", nlohmann::json::array()}};
  bool quota_met = true;
  for (const maskgen::RatioBucket& bucket : maskgen::kBuckets) {
    const fs::path dir = root / std::to_string(bucket.index);
    fs::create_directories(dir);
    std::vector<double> ratios;
    for (int i = 0; i < flags.per_bucket; ++i) {
      const auto mask = maskgen::GenerateMaskForBucket(
          options, bucket, MaskSeed(seed, bucket.index, i));
      if (!mask) continue;
      char name[32];
      std::snprintf(name, sizeof(name), "%05d.png", i);
      SaveMaskPng(*mask, dir / name);
      ratios.push_back(maskgen::MaskRatio(*mask));
    }
    nlohmann::json b = {{"bucket", bucket.index},
                        {"lower", bucket.lower},
                        {"upper", bucket.upper},
                        {"requested", flags.per_bucket},
                        {"generated", ratios.size()},
                        {"ratios", ratios}};
    if (!ratios.empty()) {
      b["min_ratio"] = *std::min_element(ratios.begin(), ratios.end());
      b["max_ratio"] = *std::max_element(ratios.begin(), ratios.end());
    }
    summary["buckets"].push_back(b);
    out << "bucket " << bucket.index << " (" << bucket.lower << ", "
        << bucket.upper << "]: " << ratios.size() << "/" << flags.per_bucket
        << "\n";
    if (static_cast<int>(ratios.size()) < flags.per_bucket) {
      quota_met = false;
      err << "bucket " << bucket.index << ": quota unmet after "
          << flags.max_attempts << " attempts per mask\n";
    }
  }
  WriteJsonFile(summary, root / "summary.json");
  return quota_met ? kExitOk : kExitQuota;
}

int RunTrain(const GlobalFlags& global, const TrainFlags& flags,
             std::ostream& out) {
  nlohmann::json overrides = nlohmann::json::object();
  if (!flags.mode.empty()) overrides["mode"] = flags.mode;
  if (flags.epochs) overrides["epochs"] = *flags.epochs;
  if (flags.batch_size) overrides["batch_size"] = *flags.batch_size;
  if (flags.image_size) overrides["image_size"] = *flags.image_size;
  if (flags.checkpoint_interval) {
    overrides["checkpoint_interval"] = *flags.checkpoint_interval;
  }
  if (flags.learning_rate) overrides["learning_rate"] = *flags.learning_rate;
  if (flags.stop_gradient) overrides["stop_gradient_through_valuation"] = true;
  if (flags.base_channels) {
    overrides["generator"]["base_channels"] = *flags.base_channels;
    overrides["detector"]["base_channels"] = *flags.base_channels;
  }
  // Validates the mode and every flag value before any file is read.
  training::ConfigFromJson(overrides);

  std::optional<training::Checkpoint> resume;
  TrainConfig base;
  if (!flags.resume.empty()) {
    resume = training::LoadCheckpoint(flags.resume);
    base = training::ConfigFromCheckpoint(*resume);
  }
  const TrainConfig config = ResolveConfig(global, base, overrides);
  const training::Trainer trainer(config);
  training::TrainState state = resume
                                   ? training::StateFromCheckpoint(*resume, config)
                                   : trainer.Initialize();

  const training::Dataset dataset = training::Dataset::Load(
      flags.images, flags.masks, config.image_size, config.image_channels);

  const fs::path root = global.out;
  fs::create_directories(root / "samples");
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path)) {
    RunManifest manifest;
    manifest.config = training::ConfigToJson(config);
    manifest.seed = config.seed;
    manifest.start_time = UtcNow();
    manifest.out_dir = root;
    WriteJsonFile(ManifestToJson(manifest), manifest_path);
  }

  training::LoopOptions options;
  options.out_dir = root;
  options.on_step = [&](const training::StepMetrics& m) {
    out << "step " << m.step << " loss_g " << m.loss_g;
    if (m.loss_d) out << " loss_d " << *m.loss_d;
    out << "\n";
  };
  state = training::TrainLoop(trainer, dataset, std::move(state), options);

  const Image& gt = dataset.images.front();
  const Mask& mask = dataset.masks.front();
  const Image result =
      trainer.generator().Inpaint(state.generator, ComposeInput(gt, mask), mask);
  char name[40];
  std::snprintf(name, sizeof(name), "step_%08lld.png",
                static_cast<long long>(state.step));
  SaveImagePng(HorizontalConcat(ComposeInput(gt, mask), result),
               root / "samples" / name);
  out << "finished at step " << state.step << "\n";
  return kExitOk;
}

int RunInfer(const GlobalFlags& global, const InferFlags& flags,
             std::ostream& out) {
  const LoadedModel model = LoadModel(global, flags.checkpoint);
  const int size = model.config.image_size;
  const Image gt = LoadImage(flags.image, size, model.config.image_channels);
  const Mask mask = LoadMask(flags.mask, size);
  const Generator generator(model.config.generator);
  const Image result =
      generator.Inpaint(model.state.generator, ComposeInput(gt, mask), mask);
  const fs::path output = flags.output;
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  SaveImagePng(result, output);
  out << "wrote " << output.string() << "\n";
  if (flags.composite) {
    fs::path composite = output;
    composite.replace_filename(output.stem().string() + "_composite.png");
    SaveImagePng(CompositeOutput(result, gt, mask), composite);
    out << "wrote " << composite.string() << "\n";
  }
  return kExitOk;
}

int RunEvaluate(const GlobalFlags& global, const EvaluateFlags& flags,
                std::ostream& out) {
  if (flags.checkpoint.empty() == flags.stub.empty()) {
    throw UsageError("exactly one of --checkpoint or --stub is required");
  }
  if (flags.fid && flags.extractor.empty()) {
    throw UsageError(
        "--fid needs a feature extractor; pass --extractor projection");
  }
  if (!flags.extractor.empty() && !flags.fid) {
    throw UsageError("--extractor is only meaningful with --fid");
  }

  std::optional<LoadedModel> model;
  std::optional<Generator> generator;
  int size = flags.image_size.value_or(64);
  int channels = 3;
  if (!flags.checkpoint.empty()) {
    model = LoadModel(global, flags.checkpoint);
    generator.emplace(model->config.generator);
    size = flags.image_size.value_or(model->config.image_size);
    channels = model->config.image_channels;
  }
  metrics::Inpainter inpainter;
  if (flags.stub == "perfect") {
    inpainter = [](const Image&, const Mask&, const Image& gt) { return gt; };
  } else if (flags.stub == "identity") {
    inpainter = [](const Image& in, const Mask&, const Image&) { return in; };
  } else {
    inpainter = [&](const Image& in, const Mask& mask, const Image&) {
      return generator->Inpaint(model->state.generator, in, mask);
    };
  }

  const metrics::EvalData data =
      metrics::LoadEvalData(flags.images, flags.masks, size, channels);
  const metrics::RandomProjectionExtractor extractor(global.seed.value_or(0));
  metrics::EvalOptions options;
  options.composite = flags.composite;
  if (flags.fid) options.extractor = &extractor;
  const metrics::MetricsReport report =
      metrics::EvaluateDataset(inpainter, data, options);
  const nlohmann::json j = metrics::ReportToJson(report);
  out << j.dump(2) << "\n";

  fs::path report_path = flags.report;
  if (report_path.empty() && !global.out.empty()) {
    report_path = fs::path(global.out) / "report.json";
  }
  if (!report_path.empty()) {
    if (report_path.has_parent_path()) {
      fs::create_directories(report_path.parent_path());
    }
    WriteJsonFile(j, report_path);
  }
  return kExitOk;
}

int RunVisualize(const GlobalFlags& global, const VisualizeFlags& flags,
                 std::ostream& out) {
  if (flags.checkpoint.empty() == flags.stub.empty()) {
    throw UsageError("exactly one of --checkpoint or --stub is required");
  }

  ValuationMap v_out, v_gt;
  if (!flags.stub.empty()) {
    const Raster raster = ReadRaster(flags.image);
    v_out = ValuationMap(raster.height, raster.width);
    v_gt = ValuationMap(raster.height, raster.width);
  } else {
    const training::Checkpoint ckpt = training::LoadCheckpoint(flags.checkpoint);
    const TrainConfig ckpt_config = training::ConfigFromCheckpoint(ckpt);
    if (ckpt_config.mode != training::Mode::kDet) {
      throw UsageError("checkpoint was trained in " +
                       training::ToString(ckpt_config.mode) +
                       " mode and has no artifact detector; visualize needs a "
                       "det-mode checkpoint");
    }
    const TrainConfig config = ResolveConfig(global, ckpt_config, {});
    const training::TrainState state =
        training::StateFromCheckpoint(ckpt, config);
    const Image gt =
        LoadImage(flags.image, config.image_size, config.image_channels);
    const Mask mask = LoadMask(flags.mask, config.image_size);
    const Generator generator(config.generator);
    const Detector detector(config.detector);
    const Image result =
        generator.Inpaint(state.generator, ComposeInput(gt, mask), mask);
    v_out = detector.Evaluate(state.critic, result);
    v_gt = detector.Evaluate(state.critic, gt);
  }

  const fs::path root = global.out;
  fs::create_directories(root);
  ExportColormap(v_out, root / "valuation_out.png");
  ExportColormap(v_gt, root / "valuation_gt.png");
  WritePng(HorizontalConcat(ColorizeMap(v_out), ColorizeMap(v_gt)),
           root / "side_by_side.png");
  out << "wrote " << (root / "side_by_side.png").string() << "\n";
  return kExitOk;
}

}  // namespace

nlohmann::json ManifestToJson(const RunManifest& m) {
  return {{"config", m.config},
          {"version", m.version},
          {"seed", m.seed},
          {"start_time", m.start_time},
          {"out_dir", m.out_dir.string()},
          {"layout",
           {{"manifest", "manifest.json"},
            {"checkpoints", "checkpoints/"},
            {"metrics_log", "logs/metrics.jsonl"},
            {"samples", "samples/"}}}};
}

std::uint64_t MaskSeed(std::uint64_t seed, int bucket, int index) {
  std::uint64_t x = seed ^ (static_cast<std::uint64_t>(bucket) << 40) ^
                    static_cast<std::uint64_t>(index);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"detpaint: detection-weighted image inpainting"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags global;
  app.add_option("--config", global.config, "JSON config file");
  app.add_option("--seed", global.seed, "Run seed");
  app.add_option("--out", global.out, "Output directory");

  GenmasksFlags gm;
  auto* genmasks = app.add_subcommand("genmasks", "Generate bucketed masks");
  genmasks->add_option("--per-bucket", gm.per_bucket, "Masks per bucket");
  genmasks->add_option("--size", gm.size, "Mask side length in pixels");
  genmasks->add_flag("--border", gm.border, "Keep strokes off the border");
  genmasks->add_option("--max-attempts", gm.max_attempts,
                       "Attempts per mask before giving up");

  TrainFlags tr;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--mode", tr.mode, "det, weight or adv");
  train->add_option("--images", tr.images, "Training image directory")
      ->required();
  train->add_option("--masks", tr.masks, "Mask directory")->required();
  train->add_option("--resume", tr.resume, "Checkpoint to resume from");
  train->add_option("--epochs", tr.epochs);
  train->add_option("--batch-size", tr.batch_size);
  train->add_option("--image-size", tr.image_size);
  train->add_option("--base-channels", tr.base_channels,
                    "Base width of both networks");
  train->add_option("--checkpoint-interval", tr.checkpoint_interval);
  train->add_option("--lr", tr.learning_rate);
  train->add_flag("--stop-gradient", tr.stop_gradient,
                  "Hold the weight map constant in the generator step");

  InferFlags in;
  auto* infer = app.add_subcommand("infer", "Inpaint one image");
  infer->add_option("--checkpoint", in.checkpoint)->required();
  infer->add_option("--image", in.image)->required();
  infer->add_option("--mask", in.mask)->required();
  infer->add_option("--output", in.output, "Output PNG")->required();
  infer->add_flag("--composite", in.composite,
                  "Also write the composited image");

  EvaluateFlags ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on test data");
  evaluate->add_option("--checkpoint", ev.checkpoint);
  evaluate->add_option("--stub", ev.stub, "Oracle generator")
      ->check(CLI::IsMember({"perfect", "identity"}));
  evaluate->add_option("--images", ev.images)->required();
  evaluate->add_option("--masks", ev.masks)->required();
  evaluate->add_option("--report", ev.report, "Report JSON path");
  evaluate->add_option("--image-size", ev.image_size);
  evaluate->add_flag("--composite", ev.composite);
  evaluate->add_flag("--fid", ev.fid);
  evaluate->add_option("--extractor", ev.extractor, "Feature extractor")
      ->check(CLI::IsMember({"projection"}));

  VisualizeFlags vi;
  auto* visualize =
      app.add_subcommand("visualize", "Colormap the detector valuation");
  visualize->add_option("--checkpoint", vi.checkpoint);
  visualize->add_option("--stub", vi.stub, "Zero valuation")
      ->check(CLI::IsMember({"zero"}));
  visualize->add_option("--image", vi.image)->required();
  visualize->add_option("--mask", vi.mask);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const bool needs_out =
        genmasks->parsed() || train->parsed() || visualize->parsed();
    if (needs_out && global.out.empty()) throw UsageError("--out is required");
    if (genmasks->parsed()) {
      return RunGenmasks(global, gm, out, err);
    }
    if (train->parsed()) return RunTrain(global, tr, out);
    if (infer->parsed()) return RunInfer(global, in, out);
    if (evaluate->parsed()) return RunEvaluate(global, ev, out);
    if (visualize->parsed()) {
      if (vi.stub.empty() && vi.mask.empty()) {
        throw UsageError("--mask is required with --checkpoint");
      }
      return RunVisualize(global, vi, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace detpaint::cli
