#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "vqe/decoder.hpp"

using namespace vqe;

namespace {

// attention is added after upsampling, so level 4 and 3 outputs match the
// preceding conv widths and level 5 matches tap (5,4)
const std::array<int, 6> kTaps{2, 3, 3, 4, 5, 5};
const std::vector<int> kWidths{4, 3, 3, 2, 2};

FeaturePyramid pyramid(std::int64_t h, std::int64_t w, torch::Dtype dt = torch::kFloat32) {
  FeaturePyramid p;
  int i = 0;
  for (const auto& tap : kTargetTaps) {
    const std::int64_t s = std::int64_t{1} << (tap.level - 1);
    p.taps[tap] = torch::randn({1, kTaps[static_cast<std::size_t>(i++)], h / s, w / s}, dt);
  }
  return p;
}

std::map<int, torch::Tensor> attention_for(std::int64_t h, std::int64_t w, torch::Dtype dt = torch::kFloat32) {
  return {{5, torch::randn({1, 5, h / 16, w / 16}, dt)},
          {4, torch::randn({1, 4, h / 8, w / 8}, dt)},
          {3, torch::randn({1, 3, h / 4, w / 4}, dt)}};
}

}  // namespace

TEST(Decoder, BilinearUpsampleDoublesAndPreservesConstants) {
  auto x = torch::full({1, 2, 3, 5}, 0.25f);
  auto y = upsample2(x);
  EXPECT_EQ(y.sizes(), (std::vector<std::int64_t>{1, 2, 6, 10}));
  EXPECT_TRUE(torch::allclose(y, torch::full_like(y, 0.25f)));
}

TEST(Decoder, BranchRestoresInputResolution) {
  torch::manual_seed(0);
  DecoderBranch b(kTaps, kWidths);
  auto out = b->forward(pyramid(32, 48), attention_for(32, 48));
  EXPECT_EQ(out.sizes(), (std::vector<std::int64_t>{1, 2, 32, 48}));
  EXPECT_EQ(b->out_channels(), 2);
  EXPECT_EQ(b->convs.size(), 5u);
}

TEST(Decoder, HasNoTransposedConvolution) {
  DecoderBranch b(kTaps, kWidths);
  for (const auto& m : b->modules(false)) EXPECT_EQ(m->name().find("Transpose"), std::string::npos) << m->name();
}

TEST(Decoder, MaskedBranchIgnoresDisabledLevels) {
  torch::manual_seed(1);
  DecoderBranch b(kTaps, kWidths);
  auto pyr = pyramid(32, 32);
  auto att = attention_for(32, 32);
  auto mask = AblationMask::row('C');  // only block 1 (branch 2, level 5)
  auto with_all = decode_branch(b, 2, pyr, att, mask);
  auto only5 = decode_branch(b, 2, pyr, {{5, att.at(5)}}, mask);
  EXPECT_TRUE(torch::equal(with_all, only5));
  EXPECT_THROW(decode_branch(b, 2, pyr, {}, mask), ConfigError);
  auto none = AblationMask::row('A');
  EXPECT_NO_THROW(decode_branch(b, 2, pyr, {}, none));
}

TEST(Decoder, MismatchedAttentionIsAShapeError) {
  DecoderBranch b(kTaps, kWidths);
  std::map<int, torch::Tensor> att{{5, torch::randn({1, 4, 3, 3})}};
  EXPECT_THROW(b->forward(pyramid(32, 32), att), ShapeError);
}

TEST(Decoder, MergeConcatenatesOrPassesThrough) {
  auto a = torch::randn({2, 3, 4, 4}), b = torch::randn({2, 5, 4, 4});
  auto full = AblationMask::full();
  auto m = merge_branches(a, b, full);
  EXPECT_EQ(m.size(1), 8);
  EXPECT_TRUE(torch::equal(m.narrow(1, 0, 3), a));
  auto single = merge_branches(torch::Tensor{}, b, AblationMask::row('B'));
  EXPECT_TRUE(torch::equal(single, b));
  auto c3 = merge_branches(a[0], b[0], full);
  EXPECT_EQ(c3.size(0), 8);
  EXPECT_THROW(merge_branches(a, torch::randn({2, 5, 4, 2}), full), ShapeError);
}

TEST(Decoder, GradientMatchesFiniteDifferences) {
  torch::manual_seed(2);
  DecoderBranch b(kTaps, kWidths);
  b->to(torch::kFloat64);
  auto pyr = pyramid(32, 32, torch::kFloat64);
  auto att = attention_for(32, 32, torch::kFloat64);
  auto probe = torch::randn({1, 2, 32, 32}, torch::kFloat64);
  std::vector<torch::Tensor> leaves{att.at(5), att.at(4), pyr.taps.at({5, 4}), pyr.taps.at({4, 1})};
  for (auto& p : b->convs[0]->parameters()) leaves.push_back(p);
  for (auto& p : b->convs[1]->parameters()) leaves.push_back(p);
  auto err = oracle::gradcheck([&] { return (b->forward(pyr, att) * probe).sum(); }, leaves);
  EXPECT_LE(err, 1e-3);
}
