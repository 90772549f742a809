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

#include <gtest/gtest.h>

#include "test_util.h"

namespace detpaint::nn {
namespace {

using testing::MaxGradientError;
using testing::RandomTensor;

// Direct six-loop convolution.
Tensor NaiveConv(const Tensor& x, const Tensor& w, const Tensor& b,
                 const ConvGeometry& g) {
  const int oh = g.ConvOutputSize(x.h()), ow = g.ConvOutputSize(x.w());
  Tensor y(x.n(), g.out_channels, oh, ow);
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < g.out_channels; ++o)
      for (int yy = 0; yy < oh; ++yy)
        for (int xx = 0; xx < ow; ++xx) {
          double s = b.data()[o];
          for (int i = 0; i < g.in_channels; ++i)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int iy = yy * g.stride - g.pad_begin + ky * g.dilation;
                const int ix = xx * g.stride - g.pad_begin + kx * g.dilation;
                if (iy < 0 || ix < 0 || iy >= x.h() || ix >= x.w()) continue;
                s += w.at(o, i, ky, kx) * x.at(n, i, iy, ix);
              }
          y.at(n, o, yy, xx) = s;
        }
  return y;
}

// Scatter form of the transposed convolution; weight is {in, out, k, k}.
Tensor NaiveConvTranspose(const Tensor& x, const Tensor& w, const Tensor& b,
                          const ConvGeometry& g) {
  const int oh = g.TransposedOutputSize(x.h());
  const int ow = g.TransposedOutputSize(x.w());
  Tensor y(x.n(), g.out_channels, oh, ow);
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < g.out_channels; ++o)
      for (int yy = 0; yy < oh; ++yy)
        for (int xx = 0; xx < ow; ++xx) y.at(n, o, yy, xx) = b.data()[o];
    for (int i = 0; i < g.in_channels; ++i)
      for (int yy = 0; yy < x.h(); ++yy)
        for (int xx = 0; xx < x.w(); ++xx)
          for (int o = 0; o < g.out_channels; ++o)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int oy = yy * g.stride - g.pad_begin + ky * g.dilation;
                const int ox = xx * g.stride - g.pad_begin + kx * g.dilation;
                if (oy < 0 || ox < 0 || oy >= oh || ox >= ow) continue;
                y.at(n, o, oy, ox) += w.at(i, o, ky, kx) * x.at(n, i, yy, xx);
              }
  }
  return y;
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  EXPECT_TRUE(a.SameShape(b)) << a.ShapeString() << " vs " << b.ShapeString();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

TEST(ConvTest, MatchesDirectLoopsAcrossGeometries) {
  const ConvGeometry cases[] = {
      {3, 5, 3, 1, 1, 1, 1},  // same
      {3, 4, 4, 2, 1, 1, 1},  // downsample
      {2, 3, 3, 1, 2, 2, 2},  // dilated
      {4, 2, 4, 1, 1, 1, 2},  // asymmetric same
  };
  std::uint64_t seed = 1;
  for (const ConvGeometry& g : cases) {
    const Tensor x = RandomTensor(2, g.in_channels, 9, 8, seed++);
    const Tensor w =
        RandomTensor(g.out_channels, g.in_channels, g.kernel, g.kernel, seed++);
    const Tensor b = RandomTensor(g.out_channels, 1, 1, 1, seed++);
    EXPECT_LT(MaxAbsDiff(Conv2dForward(x, w, b, g), NaiveConv(x, w, b, g)),
              1e-12);
  }
}

TEST(ConvTest, OutputSizes) {
  EXPECT_EQ((ConvGeometry{1, 1, 4, 2, 1, 1, 1}).ConvOutputSize(64), 32);
  EXPECT_EQ((ConvGeometry{1, 1, 4, 1, 1, 1, 2}).ConvOutputSize(16), 16);
  EXPECT_EQ((ConvGeometry{1, 1, 3, 1, 2, 2, 2}).ConvOutputSize(16), 16);
  EXPECT_EQ((ConvGeometry{1, 1, 4, 2, 1, 1, 1}).TransposedOutputSize(16), 32);
}

TEST(ConvTest, TransposeMatchesScatter) {
  const ConvGeometry g{3, 2, 4, 2, 1, 1, 1};
  const Tensor x = RandomTensor(2, 3, 5, 4, 7);
  const Tensor w = RandomTensor(3, 2, 4, 4, 8);
  const Tensor b = RandomTensor(2, 1, 1, 1, 9);
  const Tensor y = ConvTranspose2dForward(x, w, b, g);
  EXPECT_EQ(y.shape(), (std::vector<int>{2, 2, 10, 8}));
  EXPECT_LT(MaxAbsDiff(y, NaiveConvTranspose(x, w, b, g)), 1e-12);
}

TEST(ConvTest, RejectsWrongChannelCount) {
  const ConvGeometry g{3, 2, 3, 1, 1, 1, 1};
  EXPECT_THROW(Conv2dForward(Tensor(1, 2, 5, 5), Tensor(2, 3, 3, 3),
                             Tensor(2, 1, 1, 1), g),
               ValidationError);
}

Network SmallNet() {
  Network net;
  net.AddConv("a", {2, 4, 3, 1, 1, 1, 1});
  net.AddInstanceNorm();
  net.AddRelu();
  net.BeginResidual();
  net.AddConv("r1", {4, 4, 3, 1, 2, 2, 2});
  net.AddInstanceNorm();
  net.AddRelu();
  net.AddConv("r2", {4, 4, 3, 1, 2, 2, 2});
  net.AddInstanceNorm();
  net.EndResidual();
  net.AddRelu();
  net.AddConv("down", {4, 3, 4, 2, 1, 1, 1});
  net.AddLeakyRelu(0.2);
  net.AddConvTranspose("up", {3, 2, 4, 2, 1, 1, 1});
  net.AddSigmoid();
  return net;
}

TEST(NetworkTest, ParameterNamesInCreationOrder) {
  const ParamSet p = SmallNet().ZeroParams();
  std::vector<std::string> names;
  for (const auto& e : p.entries()) names.push_back(e.name);
  EXPECT_EQ(names, (std::vector<std::string>{
                       "a.weight", "a.bias", "r1.weight", "r1.bias",
                       "r2.weight", "r2.bias", "down.weight", "down.bias",
                       "up.weight", "up.bias"}));
  EXPECT_EQ(p.Get("up.weight").shape(), (std::vector<int>{3, 2, 4, 4}));
  EXPECT_THROW(p.Get("missing"), ValidationError);
}

TEST(NetworkTest, BackwardMatchesFiniteDifferences) {
  const Network net = SmallNet();
  ParamSet p = net.ZeroParams();
  testing::SpreadParams(&p, 3);
  Tensor x = RandomTensor(2, 2, 8, 8, 4);
  const Tensor r = RandomTensor(2, 2, 8, 8, 5);
  auto objective = [&] {
    const Tensor y = net.Forward(p, x, nullptr);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += r.data()[i] * y.data()[i];
    return s;
  };
  Tape tape;
  net.Forward(p, x, &tape);
  ParamSet grads = p.ZerosLike();
  const Tensor gx = net.Backward(p, tape, r, &grads);
  for (int t = 0; t < p.count(); ++t) {
    const std::string& name = p.entries()[t].name;
    if (name == "a.bias" || name == "r1.bias" || name == "r2.bias") {
      // Instance norm removes a per-channel shift entirely.
      for (double g : grads[t].vec()) EXPECT_NEAR(g, 0.0, 1e-12) << name;
      continue;
    }
    EXPECT_LT(MaxGradientError(objective, p[t].span(), grads[t].span(), 20, t),
              1e-4)
        << name;
  }
  EXPECT_LT(MaxGradientError(objective, x.span(), gx.span(), 40, 99), 1e-4);
}

TEST(NetworkTest, BackwardWithoutGradsStillReturnsInputGradient) {
  const Network net = SmallNet();
  ParamSet p = net.InitParams(1, 0.1);
  const Tensor x = RandomTensor(1, 2, 8, 8, 2);
  const Tensor r = RandomTensor(1, 2, 8, 8, 3);
  Tape tape;
  net.Forward(p, x, &tape);
  ParamSet grads = p.ZerosLike();
  EXPECT_EQ(net.Backward(p, tape, r, nullptr), net.Backward(p, tape, r, &grads));
}

TEST(NetworkTest, InstanceNormNormalisesEachChannel) {
  Network net;
  net.AddInstanceNorm();
  const Tensor x = RandomTensor(2, 3, 6, 6, 11, -5.0, 9.0);
  const Tensor y = net.Forward(ParamSet{}, x, nullptr);
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 3; ++c) {
      double mean = 0.0, sq = 0.0;
      for (int i = 0; i < 36; ++i) mean += y.plane(n, c)[i];
      mean /= 36;
      for (int i = 0; i < 36; ++i) sq += std::pow(y.plane(n, c)[i] - mean, 2);
      EXPECT_NEAR(mean, 0.0, 1e-12);
      EXPECT_NEAR(sq / 36, 1.0, 1e-5);
    }
  }
}

TEST(NetworkTest, ZeroResidualBranchIsIdentity) {
  Network net;
  net.BeginResidual();
  net.AddConv("c", {3, 3, 3, 1, 2, 2, 2});
  net.EndResidual();
  const ParamSet p = net.ZeroParams();
  const Tensor x = RandomTensor(1, 3, 7, 7, 12);
  EXPECT_EQ(net.Forward(p, x, nullptr), x);
}

TEST(NetworkTest, ResidualBlocksDoNotNest) {
  Network net;
  net.BeginResidual();
  EXPECT_THROW(net.BeginResidual(), ValidationError);
  Network other;
  EXPECT_THROW(other.EndResidual(), ValidationError);
}

TEST(NetworkTest, InitIsSeededWithZeroBiases) {
  const Network net = SmallNet();
  const ParamSet a = net.InitParams(42, 0.02);
  EXPECT_EQ(a, net.InitParams(42, 0.02));
  EXPECT_FALSE(a == net.InitParams(43, 0.02));
  double sq = 0.0;
  std::size_t count = 0;
  for (const auto& e : a.entries()) {
    if (e.name.ends_with(".bias")) {
      for (double v : e.value.vec()) EXPECT_EQ(v, 0.0);
    } else {
      for (double v : e.value.vec()) sq += v * v;
      count += e.value.size();
    }
  }
  EXPECT_NEAR(std::sqrt(sq / count), 0.02, 0.002);
}

TEST(AdamTest, FirstStepMovesByLearningRateTimesSign) {
  ParamSet p;
  p.Add("x", Tensor(1, 1, 1, 3));
  ParamSet g = p.ZerosLike();
  g[0].vec() = {0.5, -2.0, 0.0};
  AdamState adam = AdamState::For(p);
  adam.Apply(AdamConfig{}, g, &p);
  // beta1 = 0 and bias correction give m_hat = g, v_hat = g^2.
  EXPECT_NEAR(p[0].vec()[0], -1e-4 * 0.5 / (0.5 + 1e-8), 1e-18);
  EXPECT_NEAR(p[0].vec()[1], 1e-4 * 2.0 / (2.0 + 1e-8), 1e-18);
  EXPECT_EQ(p[0].vec()[2], 0.0);
  EXPECT_EQ(adam.step, 1);
}

TEST(AdamTest, SecondStepUsesRunningSecondMoment) {
  ParamSet p;
  p.Add("x", Tensor(1, 1, 1, 1));
  ParamSet g = p.ZerosLike();
  AdamState adam = AdamState::For(p);
  g[0].vec()[0] = 1.0;
  adam.Apply(AdamConfig{}, g, &p);
  const double after_one = p[0].vec()[0];
  g[0].vec()[0] = 3.0;
  adam.Apply(AdamConfig{}, g, &p);
  const double v = 0.9 * 0.1 * 1.0 + 0.1 * 9.0;
  const double v_hat = v / (1.0 - 0.81);
  EXPECT_NEAR(p[0].vec()[0], after_one - 1e-4 * 3.0 / (std::sqrt(v_hat) + 1e-8),
              1e-18);
}

TEST(AdamTest, RejectsLayoutMismatch) {
  ParamSet p;
  p.Add("x", Tensor(1, 1, 1, 2));
  ParamSet other;
  other.Add("y", Tensor(1, 1, 1, 2));
  AdamState adam = AdamState::For(p);
  EXPECT_THROW(adam.Apply(AdamConfig{}, other, &p), ValidationError);
}

}  // namespace
}  // namespace detpaint::nn
