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

#include "detpaint/nn.h"

#include <cmath>
#include <random>
#include <utility>

#include <Eigen/Core>

namespace detpaint::nn {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Unfolds a C x H x W image into a (C*k*k) x (out_h*out_w) matrix.
void Im2Col(const double* image, int channels, int height, int width,
            const ConvGeometry& g, int out_h, int out_w, double* col) {
  const int k = g.kernel;
  const int cols = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    const double* plane = image + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) *
                                cols;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride - g.pad_begin + ky * g.dilation;
          double* dst = row + oy * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + out_w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * g.stride - g.pad_begin + kx * g.dilation;
            dst[ox] = (ix >= 0 && ix < width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatters-adds columns back onto a zeroed image.
void Col2Im(const double* col, int channels, int height, int width,
            const ConvGeometry& g, int out_h, int out_w, double* image) {
  const int k = g.kernel;
  const int cols = out_h * out_w;
  std::fill(image, image + static_cast<std::size_t>(channels) * height * width,
            0.0);
  for (int c = 0; c < channels; ++c) {
    double* plane = image + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row =
            col + static_cast<std::size_t>((c * k + ky) * k + kx) * cols;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride - g.pad_begin + ky * g.dilation;
          if (iy < 0 || iy >= height) continue;
          const double* src = row + oy * out_w;
          double* dst = plane + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * g.stride - g.pad_begin + kx * g.dilation;
            if (ix >= 0 && ix < width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void CheckChannels(const Tensor& x, int expected, const std::string& what) {
  if (x.c() != expected) {
    throw ValidationError(what + ": expected " + std::to_string(expected) +
                          " input channels, got " + std::to_string(x.c()));
  }
}

void ConvBackward(const Tensor& x, const Tensor& weight, const ConvGeometry& g,
                  const Tensor& dy, Tensor* dx, Tensor* dw, Tensor* db) {
  const int kk = g.in_channels * g.kernel * g.kernel;
  const int out_h = dy.h(), out_w = dy.w();
  const int cols = out_h * out_w;
  *dx = Tensor(x.n(), x.c(), x.h(), x.w());
  AlignedBuffer col(static_cast<std::size_t>(kk) * cols);
  AlignedBuffer dcol(col.size());
  ConstMatrixMap w(weight.data(), g.out_channels, kk);
  for (int n = 0; n < x.n(); ++n) {
    ConstMatrixMap dy_n(dy.sample(n), g.out_channels, cols);
    MatrixMap dcol_m(dcol.data(), kk, cols);
    dcol_m.noalias() = w.transpose() * dy_n;
    Col2Im(dcol.data(), x.c(), x.h(), x.w(), g, out_h, out_w, dx->sample(n));
    if (dw != nullptr) {
      Im2Col(x.sample(n), x.c(), x.h(), x.w(), g, out_h, out_w, col.data());
      ConstMatrixMap col_m(col.data(), kk, cols);
      MatrixMap dw_m(dw->data(), g.out_channels, kk);
      dw_m.noalias() += dy_n * col_m.transpose();
      Eigen::Map<Eigen::VectorXd> db_v(db->data(), g.out_channels);
      db_v += dy_n.rowwise().sum();
    }
  }
}

void ConvTransposeBackward(const Tensor& x, const Tensor& weight,
                           const ConvGeometry& g, const Tensor& dy, Tensor* dx,
                           Tensor* dw, Tensor* db) {
  const int kk = g.out_channels * g.kernel * g.kernel;
  const int cols = x.h() * x.w();
  *dx = Tensor(x.n(), x.c(), x.h(), x.w());
  AlignedBuffer col(static_cast<std::size_t>(kk) * cols);
  ConstMatrixMap w(weight.data(), g.in_channels, kk);
  for (int n = 0; n < x.n(); ++n) {
    Im2Col(dy.sample(n), dy.c(), dy.h(), dy.w(), g, x.h(), x.w(), col.data());
    ConstMatrixMap col_m(col.data(), kk, cols);
    MatrixMap dx_n(dx->sample(n), g.in_channels, cols);
    dx_n.noalias() = w * col_m;
    if (dw != nullptr) {
      ConstMatrixMap x_n(x.sample(n), g.in_channels, cols);
      MatrixMap dw_m(dw->data(), g.in_channels, kk);
      dw_m.noalias() += x_n * col_m.transpose();
      ConstMatrixMap dy_n(dy.sample(n), g.out_channels, dy.plane_size());
      Eigen::Map<Eigen::VectorXd> db_v(db->data(), g.out_channels);
      db_v += dy_n.rowwise().sum();
    }
  }
}

Op BareOp(OpKind kind) {
  Op op;
  op.kind = kind;
  return op;
}

}  // namespace

Tensor Conv2dForward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                     const ConvGeometry& g) {
  CheckChannels(x, g.in_channels, "conv");
  const int out_h = g.ConvOutputSize(x.h());
  const int out_w = g.ConvOutputSize(x.w());
  if (out_h <= 0 || out_w <= 0) {
    throw ValidationError("conv: input " + x.ShapeString() + " too small");
  }
  const int kk = g.in_channels * g.kernel * g.kernel;
  const int cols = out_h * out_w;
  Tensor y(x.n(), g.out_channels, out_h, out_w);
  AlignedBuffer col(static_cast<std::size_t>(kk) * cols);
  ConstMatrixMap w(weight.data(), g.out_channels, kk);
  Eigen::Map<const Eigen::VectorXd> b(bias.data(), g.out_channels);
  for (int n = 0; n < x.n(); ++n) {
    Im2Col(x.sample(n), x.c(), x.h(), x.w(), g, out_h, out_w, col.data());
    ConstMatrixMap col_m(col.data(), kk, cols);
    MatrixMap y_n(y.sample(n), g.out_channels, cols);
    y_n.noalias() = w * col_m;
    y_n.colwise() += b;
  }
  return y;
}

Tensor ConvTranspose2dForward(const Tensor& x, const Tensor& weight,
                              const Tensor& bias, const ConvGeometry& g) {
  CheckChannels(x, g.in_channels, "conv_transpose");
  const int out_h = g.TransposedOutputSize(x.h());
  const int out_w = g.TransposedOutputSize(x.w());
  if (g.ConvOutputSize(out_h) != x.h() || g.ConvOutputSize(out_w) != x.w()) {
    throw ValidationError("conv_transpose: inconsistent geometry");
  }
  const int kk = g.out_channels * g.kernel * g.kernel;
  const int cols = x.h() * x.w();
  Tensor y(x.n(), g.out_channels, out_h, out_w);
  AlignedBuffer col(static_cast<std::size_t>(kk) * cols);
  ConstMatrixMap w(weight.data(), g.in_channels, kk);
  for (int n = 0; n < x.n(); ++n) {
    ConstMatrixMap x_n(x.sample(n), g.in_channels, cols);
    MatrixMap col_m(col.data(), kk, cols);
    col_m.noalias() = w.transpose() * x_n;
    Col2Im(col.data(), g.out_channels, out_h, out_w, g, x.h(), x.w(),
           y.sample(n));
    MatrixMap y_n(y.sample(n), g.out_channels, y.plane_size());
    y_n.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.data(),
                                                       g.out_channels);
  }
  return y;
}

// ---------------------------------------------------------------------------
// ParamSet

int ParamSet::Add(std::string name, Tensor value) {
  entries_.push_back({std::move(name), std::move(value)});
  return static_cast<int>(entries_.size()) - 1;
}

Tensor& ParamSet::Get(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw ValidationError("unknown parameter: " + std::string(name));
}

const Tensor& ParamSet::Get(std::string_view name) const {
  return const_cast<ParamSet*>(this)->Get(name);
}

std::size_t ParamSet::ScalarCount() const {
  std::size_t total = 0;
  for (const auto& e : entries_) total += e.value.size();
  return total;
}

ParamSet ParamSet::ZerosLike() const {
  ParamSet out;
  for (const auto& e : entries_) {
    const Tensor& t = e.value;
    out.Add(e.name, Tensor(t.n(), t.c(), t.h(), t.w()));
  }
  return out;
}

void ParamSet::SetZero() {
  for (auto& e : entries_) e.value.Fill(0.0);
}

bool ParamSet::SameLayout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        !entries_[i].value.SameShape(other.entries_[i].value)) {
      return false;
    }
  }
  return true;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (!a.SameLayout(b)) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].value.vec() != b.entries_[i].value.vec()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Network

void Network::AddConv(std::string name, const ConvGeometry& g) {
  Op op{OpKind::kConv, std::move(name), g};
  op.weight_index = param_count_++;
  op.bias_index = param_count_++;
  ops_.push_back(std::move(op));
}

void Network::AddConvTranspose(std::string name, const ConvGeometry& g) {
  Op op{OpKind::kConvTranspose, std::move(name), g};
  op.weight_index = param_count_++;
  op.bias_index = param_count_++;
  ops_.push_back(std::move(op));
}

void Network::AddInstanceNorm() {
  ops_.push_back(BareOp(OpKind::kInstanceNorm));
}
void Network::AddRelu() { ops_.push_back(BareOp(OpKind::kRelu)); }
void Network::AddSigmoid() { ops_.push_back(BareOp(OpKind::kSigmoid)); }

void Network::AddLeakyRelu(double slope) {
  Op op = BareOp(OpKind::kLeakyRelu);
  op.slope = slope;
  ops_.push_back(std::move(op));
}

void Network::BeginResidual() {
  if (in_residual_) throw ValidationError("residual blocks do not nest");
  in_residual_ = true;
  ops_.push_back(BareOp(OpKind::kResidualBegin));
}

void Network::EndResidual() {
  if (!in_residual_) throw ValidationError("EndResidual without Begin");
  in_residual_ = false;
  ops_.push_back(BareOp(OpKind::kResidualEnd));
}

ParamSet Network::ZeroParams() const {
  ParamSet params;
  for (const Op& op : ops_) {
    const ConvGeometry& g = op.geometry;
    if (op.kind == OpKind::kConv) {
      params.Add(op.name + ".weight",
                 Tensor(g.out_channels, g.in_channels, g.kernel, g.kernel));
      params.Add(op.name + ".bias", Tensor(g.out_channels, 1, 1, 1));
    } else if (op.kind == OpKind::kConvTranspose) {
      params.Add(op.name + ".weight",
                 Tensor(g.in_channels, g.out_channels, g.kernel, g.kernel));
      params.Add(op.name + ".bias", Tensor(g.out_channels, 1, 1, 1));
    }
  }
  return params;
}

ParamSet Network::InitParams(std::uint64_t seed, double stddev) const {
  ParamSet params = ZeroParams();
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& e : params.entries()) {
    if (e.name.ends_with(".weight")) {
      for (double& v : e.value.vec()) v = normal(engine);
    }
  }
  return params;
}

Tensor Network::Forward(const ParamSet& params, const Tensor& x,
                        Tape* tape) const {
  if (tape != nullptr) {
    tape->saved.assign(ops_.size(), Tensor());
    tape->aux.assign(ops_.size(), Tensor());
  }
  Tensor cur = x;
  Tensor skip;
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Op& op = ops_[i];
    switch (op.kind) {
      case OpKind::kConv: {
        Tensor y = Conv2dForward(cur, params[op.weight_index],
                                 params[op.bias_index], op.geometry);
        if (tape != nullptr) tape->saved[i] = std::move(cur);
        cur = std::move(y);
        break;
      }
      case OpKind::kConvTranspose: {
        Tensor y = ConvTranspose2dForward(cur, params[op.weight_index],
                                          params[op.bias_index], op.geometry);
        if (tape != nullptr) tape->saved[i] = std::move(cur);
        cur = std::move(y);
        break;
      }
      case OpKind::kInstanceNorm: {
        const std::size_t plane = cur.plane_size();
        Tensor inv_std(cur.n(), cur.c(), 1, 1);
        for (int n = 0; n < cur.n(); ++n) {
          for (int c = 0; c < cur.c(); ++c) {
            double* p = cur.plane(n, c);
            double mean = 0.0;
            for (std::size_t j = 0; j < plane; ++j) mean += p[j];
            mean /= static_cast<double>(plane);
            double var = 0.0;
            for (std::size_t j = 0; j < plane; ++j) {
              const double d = p[j] - mean;
              var += d * d;
            }
            var /= static_cast<double>(plane);
            const double s = 1.0 / std::sqrt(var + kInstanceNormEpsilon);
            for (std::size_t j = 0; j < plane; ++j) p[j] = (p[j] - mean) * s;
            inv_std.at(n, c, 0, 0) = s;
          }
        }
        if (tape != nullptr) {
          tape->saved[i] = cur;
          tape->aux[i] = std::move(inv_std);
        }
        break;
      }
      case OpKind::kRelu:
        if (tape != nullptr) tape->saved[i] = cur;
        for (double& v : cur.vec()) v = v > 0.0 ? v : 0.0;
        break;
      case OpKind::kLeakyRelu:
        if (tape != nullptr) tape->saved[i] = cur;
        for (double& v : cur.vec()) v = v > 0.0 ? v : op.slope * v;
        break;
      case OpKind::kSigmoid:
        for (double& v : cur.vec()) v = 1.0 / (1.0 + std::exp(-v));
        if (tape != nullptr) tape->saved[i] = cur;
        break;
      case OpKind::kResidualBegin:
        skip = cur;
        break;
      case OpKind::kResidualEnd:
        if (!skip.SameShape(cur)) {
          throw ValidationError("residual branch changed the tensor shape");
        }
        for (std::size_t j = 0; j < cur.size(); ++j) {
          cur.data()[j] += skip.data()[j];
        }
        break;
    }
  }
  return cur;
}

Tensor Network::Backward(const ParamSet& params, const Tape& tape,
                         const Tensor& grad_out, ParamSet* grads) const {
  if (tape.saved.size() != ops_.size()) {
    throw ValidationError("Backward: tape does not match network");
  }
  Tensor g = grad_out;
  Tensor skip_grad;
  for (std::size_t r = ops_.size(); r-- > 0;) {
    const Op& op = ops_[r];
    switch (op.kind) {
      case OpKind::kConv: {
        Tensor dx;
        ConvBackward(tape.saved[r], params[op.weight_index], op.geometry, g,
                     &dx, grads ? &(*grads)[op.weight_index] : nullptr,
                     grads ? &(*grads)[op.bias_index] : nullptr);
        g = std::move(dx);
        break;
      }
      case OpKind::kConvTranspose: {
        Tensor dx;
        ConvTransposeBackward(tape.saved[r], params[op.weight_index],
                              op.geometry, g, &dx,
                              grads ? &(*grads)[op.weight_index] : nullptr,
                              grads ? &(*grads)[op.bias_index] : nullptr);
        g = std::move(dx);
        break;
      }
      case OpKind::kInstanceNorm: {
        const Tensor& xhat = tape.saved[r];
        const Tensor& inv_std = tape.aux[r];
        const std::size_t plane = g.plane_size();
        const double count = static_cast<double>(plane);
        for (int n = 0; n < g.n(); ++n) {
          for (int c = 0; c < g.c(); ++c) {
            double* dy = g.plane(n, c);
            const double* xh = xhat.plane(n, c);
            double sum_dy = 0.0, sum_dy_xh = 0.0;
            for (std::size_t j = 0; j < plane; ++j) {
              sum_dy += dy[j];
              sum_dy_xh += dy[j] * xh[j];
            }
            const double s = inv_std.at(n, c, 0, 0) / count;
            for (std::size_t j = 0; j < plane; ++j) {
              dy[j] = s * (count * dy[j] - sum_dy - xh[j] * sum_dy_xh);
            }
          }
        }
        break;
      }
      case OpKind::kRelu: {
        const auto& x = tape.saved[r].vec();
        for (std::size_t j = 0; j < x.size(); ++j) {
          if (!(x[j] > 0.0)) g.data()[j] = 0.0;
        }
        break;
      }
      case OpKind::kLeakyRelu: {
        const auto& x = tape.saved[r].vec();
        for (std::size_t j = 0; j < x.size(); ++j) {
          if (!(x[j] > 0.0)) g.data()[j] *= op.slope;
        }
        break;
      }
      case OpKind::kSigmoid: {
        const auto& y = tape.saved[r].vec();
        for (std::size_t j = 0; j < y.size(); ++j) {
          g.data()[j] *= y[j] * (1.0 - y[j]);
        }
        break;
      }
      case OpKind::kResidualEnd:
        skip_grad = g;
        break;
      case OpKind::kResidualBegin:
        for (std::size_t j = 0; j < g.size(); ++j) {
          g.data()[j] += skip_grad.data()[j];
        }
        break;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::For(const ParamSet& params) {
  return AdamState{params.ZerosLike(), params.ZerosLike(), 0};
}

void AdamState::Apply(const AdamConfig& config, const ParamSet& grads,
                      ParamSet* params) {
  if (!params->SameLayout(grads) || !params->SameLayout(m)) {
    throw ValidationError("Adam: parameter layout mismatch");
  }
  ++step;
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (int i = 0; i < params->count(); ++i) {
    double* p = (*params)[i].data();
    double* mi = m[i].data();
    double* vi = v[i].data();
    const double* gi = grads[i].data();
    const std::size_t size = (*params)[i].size();
    for (std::size_t j = 0; j < size; ++j) {
      mi[j] = config.beta1 * mi[j] + (1.0 - config.beta1) * gi[j];
      vi[j] = config.beta2 * vi[j] + (1.0 - config.beta2) * gi[j] * gi[j];
      const double m_hat = mi[j] / correction1;
      const double v_hat = vi[j] / correction2;
      p[j] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace detpaint::nn
