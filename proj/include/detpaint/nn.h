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

// Minimal convolutional network runtime with hand-written backward passes.
//
// A Network is an immutable, sequential description of operations. Its
// parameters live in a separate ParamSet so that Forward() can be called
// concurrently on the same parameters; the activations needed by Backward()
// are recorded in a caller-owned Tape.

#ifndef DETPAINT_NN_H_
#define DETPAINT_NN_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "detpaint/tensor.h"

namespace detpaint::nn {

// Geometry shared by convolutions and transposed convolutions. Padding may be
// asymmetric (pad_begin on top/left, pad_end on bottom/right).
struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int dilation = 1;
  int pad_begin = 0;
  int pad_end = 0;

  int ConvOutputSize(int in) const {
    return (in + pad_begin + pad_end - dilation * (kernel - 1) - 1) / stride +
           1;
  }
  int TransposedOutputSize(int in) const {
    return (in - 1) * stride - pad_begin - pad_end + dilation * (kernel - 1) +
           1;
  }
};

enum class OpKind {
  kConv,
  kConvTranspose,
  kInstanceNorm,
  kRelu,
  kLeakyRelu,
  kSigmoid,
  kResidualBegin,
  kResidualEnd,
};

struct Op {
  OpKind kind = OpKind::kRelu;
  std::string name;
  ConvGeometry geometry;
  double slope = 0.0;
  int weight_index = -1;
  int bias_index = -1;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Ordered, named collection of parameter tensors.
class ParamSet {
 public:
  int Add(std::string name, Tensor value);
  Tensor& Get(std::string_view name);
  const Tensor& Get(std::string_view name) const;
  Tensor& operator[](int i) { return entries_[i].value; }
  const Tensor& operator[](int i) const { return entries_[i].value; }

  std::vector<NamedTensor>& entries() { return entries_; }
  const std::vector<NamedTensor>& entries() const { return entries_; }
  int count() const { return static_cast<int>(entries_.size()); }
  std::size_t ScalarCount() const;
  ParamSet ZerosLike() const;
  void SetZero();
  // True when names and shapes match element-for-element.
  bool SameLayout(const ParamSet& other) const;

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::vector<NamedTensor> entries_;
};

bool operator==(const ParamSet& a, const ParamSet& b);

// Per-op activations recorded during a forward pass.
struct Tape {
  std::vector<Tensor> saved;
  std::vector<Tensor> aux;
};

class Network {
 public:
  void AddConv(std::string name, const ConvGeometry& g);
  void AddConvTranspose(std::string name, const ConvGeometry& g);
  void AddInstanceNorm();
  void AddRelu();
  void AddLeakyRelu(double slope);
  void AddSigmoid();
  // Everything between BeginResidual() and EndResidual() forms the residual
  // branch; EndResidual() adds the branch input back. Blocks do not nest.
  void BeginResidual();
  void EndResidual();

  const std::vector<Op>& ops() const { return ops_; }

  // Parameter names and shapes in creation order: "<op>.weight", "<op>.bias".
  ParamSet ZeroParams() const;
  // Weights ~ N(0, stddev) from a seeded engine in creation order, biases 0.
  ParamSet InitParams(std::uint64_t seed, double stddev) const;

  Tensor Forward(const ParamSet& params, const Tensor& x, Tape* tape) const;
  // Returns dL/dx. Parameter gradients are accumulated into *grads unless it
  // is null, in which case only the input gradient is computed.
  Tensor Backward(const ParamSet& params, const Tape& tape,
                  const Tensor& grad_out, ParamSet* grads) const;

 private:
  std::vector<Op> ops_;
  int param_count_ = 0;
  bool in_residual_ = false;
};

// Single-layer kernels, exposed for testing.
Tensor Conv2dForward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                     const ConvGeometry& g);
// weight layout {in, out, k, k}.
Tensor ConvTranspose2dForward(const Tensor& x, const Tensor& weight,
                              const Tensor& bias, const ConvGeometry& g);

inline constexpr double kInstanceNormEpsilon = 1e-5;

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double epsilon = 1e-8;
};

// Adam moments for one ParamSet.
struct AdamState {
  ParamSet m;
  ParamSet v;
  std::int64_t step = 0;

  static AdamState For(const ParamSet& params);
  void Apply(const AdamConfig& config, const ParamSet& grads,
             ParamSet* params);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

}  // namespace detpaint::nn

#endif  // DETPAINT_NN_H_
