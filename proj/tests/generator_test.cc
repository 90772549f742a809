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

#include "detpaint/generator.h"

#include <gtest/gtest.h>

#include "test_util.h"

namespace detpaint {
namespace {

using testing::RandomTensor;

GeneratorConfig Small(int base = 4) {
  GeneratorConfig c;
  c.base_channels = base;
  return c;
}

Tensor HalfMask(int n, int size) {
  Tensor m(n, 1, size, size);
  for (int i = 0; i < n; ++i) {
    for (int y = 0; y < size / 2; ++y) {
      for (int x = 0; x < size; ++x) m.at(i, 0, y, x) = 1.0;
    }
  }
  return m;
}

// Closed-form parameter count for image channels C and base width b.
std::size_t ExpectedCount(std::size_t b, std::size_t c, std::size_t blocks) {
  const std::size_t stem = (c + 1) * b * 9 + b;
  const std::size_t down1 = b * 2 * b * 16 + 2 * b;
  const std::size_t down2 = 2 * b * 4 * b * 16 + 4 * b;
  const std::size_t res = blocks * 2 * (4 * b * 4 * b * 9 + 4 * b);
  const std::size_t up1 = 4 * b * 2 * b * 16 + 2 * b;
  const std::size_t up2 = 2 * b * b * 16 + b;
  const std::size_t out = b * c * 9 + c;
  return stem + down1 + down2 + res + up1 + up2 + out;
}

TEST(GeneratorTest, DefaultParameterCount) {
  EXPECT_EQ(ExpectedCount(64, 3, 8), 10756675u);
  const Generator g{GeneratorConfig{}};
  EXPECT_EQ(g.network().ZeroParams().ScalarCount(), 10756675u);
}

TEST(GeneratorTest, ParameterCountFollowsWidthAndChannels) {
  for (int b : {4, 8, 16}) {
    EXPECT_EQ(Generator(Small(b)).network().ZeroParams().ScalarCount(),
              ExpectedCount(b, 3, 8));
  }
  GeneratorConfig gray = Small(8);
  gray.image_channels = 1;
  gray.num_residual_blocks = 3;
  EXPECT_EQ(Generator(gray).network().ZeroParams().ScalarCount(),
            ExpectedCount(8, 1, 3));
}

TEST(GeneratorTest, ResidualBlocksUseDilatedConvs) {
  const Generator g{GeneratorConfig{}};
  int begins = 0, dilated = 0;
  for (const nn::Op& op : g.network().ops()) {
    if (op.kind == nn::OpKind::kResidualBegin) ++begins;
    if (op.kind == nn::OpKind::kConv && op.geometry.dilation == 2) {
      ++dilated;
      EXPECT_EQ(op.geometry.kernel, 3);
      EXPECT_EQ(op.geometry.pad_begin, 2);
    }
  }
  EXPECT_EQ(begins, 8);
  EXPECT_EQ(dilated, 16);
  EXPECT_EQ(g.network().ops().back().kind, nn::OpKind::kSigmoid);
}

TEST(GeneratorTest, ShapeAndRangeOnNonSquareInput) {
  const Generator g(Small());
  const GeneratorParams p = g.Build(1);
  const Tensor x = RandomTensor(2, 3, 16, 24, 2, 0.0, 1.0);
  Tensor m(2, 1, 16, 24);
  m.at(0, 0, 3, 3) = 1.0;
  const Tensor y = g.Forward(p, x, m, nullptr);
  EXPECT_EQ(y.shape(), (std::vector<int>{2, 3, 16, 24}));
  for (double v : y.vec()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(GeneratorTest, RejectsBadInputs) {
  const Generator g(Small());
  const GeneratorParams p = g.Build(1);
  EXPECT_THROW(g.Forward(p, Tensor(1, 3, 10, 12), Tensor(1, 1, 10, 12), nullptr),
               ValidationError);
  EXPECT_THROW(g.Forward(p, Tensor(1, 1, 8, 8), Tensor(1, 1, 8, 8), nullptr),
               ValidationError);
  EXPECT_THROW(g.Forward(p, Tensor(1, 3, 8, 8), Tensor(1, 1, 4, 4), nullptr),
               ValidationError);
  GeneratorConfig bad = Small();
  bad.base_channels = 0;
  EXPECT_THROW(bad.Validate(), ValidationError);
  bad = Small();
  bad.image_channels = 2;
  EXPECT_THROW(bad.Validate(), ValidationError);
}

TEST(GeneratorTest, BuildIsSeeded) {
  const Generator g(Small());
  EXPECT_EQ(g.Build(7), g.Build(7));
  EXPECT_FALSE(g.Build(7) == g.Build(8));
}

TEST(GeneratorTest, MaskChannelIsUsed) {
  const Generator g(Small());
  const GeneratorParams p = g.Build(3);
  const Tensor x = RandomTensor(1, 3, 16, 16, 4, 0.0, 1.0);
  const Tensor a = g.Forward(p, x, Tensor(1, 1, 16, 16), nullptr);
  const Tensor b = g.Forward(p, x, HalfMask(1, 16), nullptr);
  EXPECT_FALSE(a == b);
}

TEST(GeneratorTest, SamplesAreIndependentWithinABatch) {
  const Generator g(Small());
  const GeneratorParams p = g.Build(5);
  const Tensor x = RandomTensor(2, 3, 16, 16, 6, 0.0, 1.0);
  const Tensor m = HalfMask(2, 16);
  const Tensor both = g.Forward(p, x, m, nullptr);
  Tensor x1(1, 3, 16, 16), m1(1, 1, 16, 16);
  std::copy_n(x.sample(1), x.sample_size(), x1.data());
  std::copy_n(m.sample(1), m.sample_size(), m1.data());
  const Tensor one = g.Forward(p, x1, m1, nullptr);
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_NEAR(one.data()[i], both.sample(1)[i], 1e-12);
  }
}

TEST(GeneratorTest, InpaintMatchesForward) {
  const Generator g(Small());
  const GeneratorParams p = g.Build(9);
  const Image im = testing::SyntheticImage(1, 16);
  Mask mask(16, 16);
  mask.at(5, 5) = 1;
  const Image out = g.Inpaint(p, im, mask);
  const Tensor t = g.Forward(p, ImagesToTensor(std::span(&im, 1)),
                             MasksToTensor(std::span(&mask, 1)), nullptr);
  EXPECT_EQ(out, TensorToImage(t, 0));
  EXPECT_THROW(g.Inpaint(p, im, Mask(8, 8)), ValidationError);
}

TEST(GeneratorTest, MakeInputAppendsMaskChannel) {
  const Tensor x = RandomTensor(2, 3, 4, 4, 1);
  const Tensor m = HalfMask(2, 4);
  const Tensor in = Generator::MakeInput(x, m);
  EXPECT_EQ(in.shape(), (std::vector<int>{2, 4, 4, 4}));
  EXPECT_EQ(in.at(1, 2, 3, 1), x.at(1, 2, 3, 1));
  EXPECT_EQ(in.at(1, 3, 0, 0), 1.0);
  EXPECT_EQ(in.at(1, 3, 3, 0), 0.0);
}

}  // namespace
}  // namespace detpaint
