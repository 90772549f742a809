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

#include <string>

#include "detpaint/metrics.h"

namespace detpaint::metrics {
namespace {

nlohmann::json SummaryToJson(const MetricSummary& s) {
  nlohmann::json j = {{"count", s.count},
                      {"l1_percent", s.l1_percent},
                      {"psnr_db", s.psnr_db},
                      {"ssim", s.ssim}};
  if (s.fid) j["fid"] = *s.fid;
  return j;
}

MetricSummary SummaryFromJson(const nlohmann::json& j) {
  MetricSummary s;
  s.count = j.at("count").get<std::int64_t>();
  s.l1_percent = j.at("l1_percent").get<double>();
  s.psnr_db = j.at("psnr_db").get<double>();
  s.ssim = j.at("ssim").get<double>();
  if (j.contains("fid")) s.fid = j.at("fid").get<double>();
  return s;
}

struct Accumulator {
  std::int64_t n = 0;
  double l1 = 0.0, psnr = 0.0, ssim = 0.0;
  std::vector<Image> real, fake;

  void Add(const Image& out, const Image& gt, bool keep) {
    l1 += L1ErrorPercent(out, gt);
    psnr += Psnr(out, gt);
    ssim += Ssim(out, gt);
    real.push_back(gt);
    fake.push_back(out);
    if (!keep) {
      real.clear();
      fake.clear();
    }
    ++n;
  }

  MetricSummary Summary(const FeatureExtractor* extractor) const {
    MetricSummary s;
    s.count = n;
    s.l1_percent = l1 / n;
    s.psnr_db = psnr / n;
    s.ssim = ssim / n;
    if (extractor != nullptr && n >= 2) s.fid = Fid(real, fake, *extractor);
    return s;
  }
};

}  // namespace

nlohmann::json ReportToJson(const MetricsReport& report) {
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& [index, summary] : report.buckets) {
    nlohmann::json b = SummaryToJson(summary);
    const maskgen::RatioBucket& rb = maskgen::kBuckets.at(index);
    b["bucket"] = index;
    b["lower"] = rb.lower;
    b["upper"] = rb.upper;
    buckets.push_back(std::move(b));
  }
  return {{"buckets", buckets}, {"overall", SummaryToJson(report.overall)}};
}

MetricsReport ReportFromJson(const nlohmann::json& j) {
  MetricsReport r;
  try {
    for (const auto& b : j.at("buckets")) {
      const int index = b.at("bucket").get<int>();
      if (index < 0 || index >= maskgen::kNumBuckets) {
        throw ValidationError("report bucket index out of range: " +
                              std::to_string(index));
      }
      r.buckets[index] = SummaryFromJson(b);
    }
    r.overall = SummaryFromJson(j.at("overall"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed metrics report: ") + e.what());
  }
  return r;
}

EvalData LoadEvalData(const std::filesystem::path& images_dir,
                      const std::filesystem::path& masks_dir, int image_size,
                      int channels) {
  EvalData data;
  for (const auto& p : ListImageFiles(images_dir, false)) {
    data.images.push_back(LoadImage(p, image_size, channels));
  }
  if (data.images.empty()) {
    throw ValidationError("no images found in " + images_dir.string());
  }
  bool bucketed = false;
  for (int b = 0; b < maskgen::kNumBuckets; ++b) {
    bucketed |= std::filesystem::is_directory(masks_dir / std::to_string(b));
  }
  if (bucketed) {
    for (int b = 0; b < maskgen::kNumBuckets; ++b) {
      const auto dir = masks_dir / std::to_string(b);
      if (!std::filesystem::is_directory(dir)) continue;
      for (const auto& p : ListImageFiles(dir, false, true)) {
        data.masks[b].push_back(LoadMask(p, image_size));
      }
    }
  } else {
    for (const auto& p : ListImageFiles(masks_dir, true, true)) {
      Mask m = LoadMask(p, image_size);
      const auto bucket = maskgen::BucketOf(maskgen::MaskRatio(m));
      if (bucket) data.masks[bucket->index].push_back(std::move(m));
    }
  }
  return data;
}

MetricsReport EvaluateDataset(const Inpainter& inpainter, const EvalData& data,
                              const EvalOptions& options) {
  if (data.images.empty()) throw ValidationError("evaluation set has no images");
  const bool keep = options.extractor != nullptr;
  MetricsReport report;
  Accumulator overall;
  for (int b = 0; b < maskgen::kNumBuckets; ++b) {
    const auto& masks = data.masks[b];
    if (masks.empty()) continue;
    Accumulator acc;
    for (std::size_t j = 0; j < masks.size(); ++j) {
      const Image& gt = data.images[j % data.images.size()];
      const Mask& mask = masks[j];
      CheckSameSize(gt, mask, "evaluate");
      Image out = inpainter(ComposeInput(gt, mask), mask, gt);
      CheckSameSize(out, gt, "evaluate");
      if (options.composite) out = CompositeOutput(out, gt, mask);
      acc.Add(out, gt, keep);
      overall.Add(out, gt, keep);
    }
    report.buckets[b] = acc.Summary(options.extractor);
  }
  if (overall.n == 0) throw ValidationError("evaluation set has no masks");
  report.overall = overall.Summary(options.extractor);
  return report;
}

}  // namespace detpaint::metrics
