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

// Image quality metrics and dataset evaluation. All metrics work on [0, 1]
// images with peak value 1.

#ifndef DETPAINT_METRICS_H_
#define DETPAINT_METRICS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "detpaint/imaging.h"
#include "detpaint/maskgen.h"

namespace detpaint::metrics {

inline constexpr double kPsnrCap = 100.0;

// Mean absolute difference over all elements, times 100.
double L1ErrorPercent(const Image& out, const Image& gt);

// 10 log10(1 / MSE); kPsnrCap when MSE is zero.
double Psnr(const Image& out, const Image& gt);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// Luma (0.299, 0.587, 0.114) for 3-channel images, identity for 1 channel.
std::vector<double> ToGray(const Image& image);
// Normalised 11x11 Gaussian, row-major.
std::array<double, kSsimWindow * kSsimWindow> SsimWindow();
// Single-scale SSIM on the grayscale images, averaged over every fully
// contained window position.
double Ssim(const Image& out, const Image& gt);

struct FeatureSetStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  int dim() const { return static_cast<int>(mean.size()); }
};

// Sample mean and covariance (denominator n - 1). Needs n >= 2.
FeatureSetStats ComputeStats(std::span<const std::vector<double>> features);

inline constexpr double kFrechetTolerance = 1e-6;

// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).
double FrechetDistance(const FeatureSetStats& a, const FeatureSetStats& b);

// Maps an H x W x 3 image in [0, 1] to a fixed-length feature vector.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> Extract(const Image& image) const = 0;
};

// Area-downsamples to grid x grid x 3 and applies a fixed Gaussian random
// projection. Deterministic for a given seed.
class RandomProjectionExtractor : public FeatureExtractor {
 public:
  explicit RandomProjectionExtractor(std::uint64_t seed = 0, int grid = 8,
                                     int dim = 64);

  int dim() const override { return dim_; }
  std::vector<double> Extract(const Image& image) const override;

 private:
  int grid_;
  int dim_;
  Eigen::MatrixXd projection_;  // dim x (grid * grid * 3)
};

double Fid(std::span<const Image> real, std::span<const Image> fake,
           const FeatureExtractor& extractor);

// ---------------------------------------------------------------------------
// Dataset evaluation

struct MetricSummary {
  double l1_percent = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::optional<double> fid;
  std::int64_t count = 0;

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

struct MetricsReport {
  // Keyed by bucket index; buckets without masks are absent.
  std::map<int, MetricSummary> buckets;
  MetricSummary overall;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

nlohmann::json ReportToJson(const MetricsReport& report);
MetricsReport ReportFromJson(const nlohmann::json& j);

struct EvalData {
  std::vector<Image> images;
  std::array<std::vector<Mask>, maskgen::kNumBuckets> masks;
};

// Images from `images_dir`. Masks from subdirectories "0".."5" of
// `masks_dir` when present, otherwise every PNG below it is bucketed by its
// measured ratio (masks outside every bucket are skipped).
EvalData LoadEvalData(const std::filesystem::path& images_dir,
                      const std::filesystem::path& masks_dir, int image_size,
                      int channels);

// Produces I_out from I_in and M. The ground truth is passed only so that
// oracle stubs can be expressed; real models must ignore it.
using Inpainter =
    std::function<Image(const Image& input, const Mask& mask, const Image& gt)>;

struct EvalOptions {
  // Paste valid-region ground truth back before scoring.
  bool composite = false;
  // FID is reported when set (for buckets with at least two samples).
  const FeatureExtractor* extractor = nullptr;
};

// Mask j of bucket b is paired with image j mod |images|. Per-image metrics
// are averaged per bucket and over all pairs.
MetricsReport EvaluateDataset(const Inpainter& inpainter, const EvalData& data,
                              const EvalOptions& options);

}  // namespace detpaint::metrics

#endif  // DETPAINT_METRICS_H_
