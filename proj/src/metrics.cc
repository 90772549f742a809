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

#include "detpaint/metrics.h"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace detpaint::metrics {
namespace {

void CheckPair(const Image& out, const Image& gt, const char* what) {
  CheckSameSize(out, gt, what);
  if (out.data.empty()) throw ValidationError(std::string(what) + ": empty image");
}

// Symmetric eigen decomposition with a PSD check. Eigenvalues are clipped at
// zero; negatives larger than the tolerance raise NumericError.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> PsdEigen(
    const Eigen::MatrixXd& m, const char* what) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) {
    throw NumericError(std::string(what) + ": eigen decomposition failed");
  }
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -kFrechetTolerance * scale) {
    throw NumericError(std::string(what) +
                       " is not positive semidefinite (min eigenvalue " +
                       std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  return es;
}

Eigen::MatrixXd PsdSqrt(const Eigen::MatrixXd& m, const char* what) {
  const auto es = PsdEigen(m, what);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

// Valid-mode separable filtering of an h x w plane with a 1-D kernel.
std::vector<double> FilterValid(const std::vector<double>& x, int h, int w,
                                const std::array<double, kSsimWindow>& k) {
  const int oh = h - kSsimWindow + 1;
  const int ow = w - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x0 = 0; x0 < ow; ++x0) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) {
        s += k[i] * x[static_cast<std::size_t>(y) * w + x0 + i];
      }
      rows[static_cast<std::size_t>(y) * ow + x0] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y0 = 0; y0 < oh; ++y0) {
    for (int x0 = 0; x0 < ow; ++x0) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) {
        s += k[i] * rows[static_cast<std::size_t>(y0 + i) * ow + x0];
      }
      out[static_cast<std::size_t>(y0) * ow + x0] = s;
    }
  }
  return out;
}

std::array<double, kSsimWindow> Gaussian1d() {
  std::array<double, kSsimWindow> g;
  const int r = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - r;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

}  // namespace

double L1ErrorPercent(const Image& out, const Image& gt) {
  CheckPair(out, gt, "l1_error");
  double sum = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    sum += std::abs(out.data[i] - gt.data[i]);
  }
  return 100.0 * sum / static_cast<double>(out.data.size());
}

double Psnr(const Image& out, const Image& gt) {
  CheckPair(out, gt, "psnr");
  double sum = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double d = out.data[i] - gt.data[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(out.data.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

std::vector<double> ToGray(const Image& image) {
  const std::size_t n = image.pixel_count();
  std::vector<double> g(n);
  if (image.channels == 1) {
    g = image.data;
  } else if (image.channels == 3) {
    for (std::size_t p = 0; p < n; ++p) {
      const double* px = &image.data[p * 3];
      g[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
  } else {
    throw ValidationError("grayscale conversion needs 1 or 3 channels");
  }
  return g;
}

std::array<double, kSsimWindow * kSsimWindow> SsimWindow() {
  const auto g = Gaussian1d();
  std::array<double, kSsimWindow * kSsimWindow> w;
  for (int i = 0; i < kSsimWindow; ++i) {
    for (int j = 0; j < kSsimWindow; ++j) w[i * kSsimWindow + j] = g[i] * g[j];
  }
  return w;
}

double Ssim(const Image& out, const Image& gt) {
  CheckPair(out, gt, "ssim");
  const int h = out.height, w = out.width;
  if (h < kSsimWindow || w < kSsimWindow) {
    throw ValidationError("ssim: image " + std::to_string(h) + "x" +
                          std::to_string(w) + " is smaller than the " +
                          std::to_string(kSsimWindow) + "x" +
                          std::to_string(kSsimWindow) + " window");
  }
  const std::vector<double> x = ToGray(out);
  const std::vector<double> y = ToGray(gt);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto g = Gaussian1d();
  const auto mx = FilterValid(x, h, w, g);
  const auto my = FilterValid(y, h, w, g);
  const auto exx = FilterValid(xx, h, w, g);
  const auto eyy = FilterValid(yy, h, w, g);
  const auto exy = FilterValid(xy, h, w, g);
  const double c1 = kSsimK1 * kSsimK1;
  const double c2 = kSsimK2 * kSsimK2;
  double sum = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = exx[i] - mx[i] * mx[i];
    const double vy = eyy[i] - my[i] * my[i];
    const double cov = exy[i] - mx[i] * my[i];
    sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
           ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return sum / static_cast<double>(mx.size());
}

FeatureSetStats ComputeStats(std::span<const std::vector<double>> features) {
  if (features.size() < 2) {
    throw ValidationError("feature statistics need at least 2 samples, got " +
                          std::to_string(features.size()));
  }
  const std::size_t d = features[0].size();
  if (d == 0) throw ValidationError("feature vectors are empty");
  Eigen::MatrixXd x(features.size(), d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) {
      throw ValidationError("feature vectors have inconsistent dimension");
    }
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(features[i].data(), d);
  }
  FeatureSetStats s;
  s.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  s.covariance = centered.transpose() * centered /
                 static_cast<double>(features.size() - 1);
  return s;
}

double FrechetDistance(const FeatureSetStats& a, const FeatureSetStats& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("frechet_distance: dimension mismatch (" +
                          std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()) + ")");
  }
  for (const auto* s : {&a, &b}) {
    if (s->covariance.rows() != s->dim() || s->covariance.cols() != s->dim()) {
      throw ValidationError("frechet_distance: covariance has wrong shape");
    }
  }
  const double mean_term = (a.mean - b.mean).squaredNorm();
  PsdEigen(b.covariance, "covariance b");
  const Eigen::MatrixXd sqrt_a = PsdSqrt(a.covariance, "covariance a");
  // (S_a S_b)^(1/2) is similar to (S_a^(1/2) S_b S_a^(1/2))^(1/2), which is
  // symmetric, so its trace is the sum of real eigenvalue roots.
  const Eigen::MatrixXd inner = sqrt_a * b.covariance * sqrt_a;
  const auto es = PsdEigen(inner, "covariance product");
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return mean_term + a.covariance.trace() + b.covariance.trace() -
         2.0 * tr_sqrt;
}

RandomProjectionExtractor::RandomProjectionExtractor(std::uint64_t seed,
                                                     int grid, int dim)
    : grid_(grid), dim_(dim) {
  if (grid < 1 || dim < 1) {
    throw ValidationError("extractor grid and dim must be positive");
  }
  const int in = grid * grid * 3;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(in));
  projection_.resize(dim, in);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < in; ++j) projection_(i, j) = normal(rng);
  }
}

std::vector<double> RandomProjectionExtractor::Extract(
    const Image& image) const {
  if (image.height < grid_ || image.width < grid_) {
    throw ValidationError("image smaller than the extractor grid");
  }
  if (image.channels != 3 && image.channels != 1) {
    throw ValidationError("extractor needs 1 or 3 channels");
  }
  Eigen::VectorXd cells = Eigen::VectorXd::Zero(grid_ * grid_ * 3);
  std::vector<int> counts(grid_ * grid_, 0);
  for (int y = 0; y < image.height; ++y) {
    const int gy = y * grid_ / image.height;
    for (int x = 0; x < image.width; ++x) {
      const int gx = x * grid_ / image.width;
      const int cell = gy * grid_ + gx;
      ++counts[cell];
      for (int c = 0; c < 3; ++c) {
        cells[cell * 3 + c] += image.at(y, x, image.channels == 3 ? c : 0);
      }
    }
  }
  for (int cell = 0; cell < grid_ * grid_; ++cell) {
    cells.segment(cell * 3, 3) /= counts[cell];
  }
  const Eigen::VectorXd f = projection_ * cells;
  return std::vector<double>(f.data(), f.data() + f.size());
}

double Fid(std::span<const Image> real, std::span<const Image> fake,
           const FeatureExtractor& extractor) {
  if (real.size() < 2 || fake.size() < 2) {
    throw ValidationError("fid needs at least 2 images per set");
  }
  auto features = [&](std::span<const Image> set) {
    std::vector<std::vector<double>> f;
    f.reserve(set.size());
    for (const Image& im : set) f.push_back(extractor.Extract(im));
    return ComputeStats(f);
  };
  return FrechetDistance(features(real), features(fake));
}

}  // namespace detpaint::metrics
