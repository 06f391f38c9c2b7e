#include <gtest/gtest.h>

#include <algorithm>

#include "support/oracles.hpp"
#include "vqe/config.hpp"
#include "vqe/losses.hpp"

using namespace vqe;

TEST(Losses, LeastSquaresTargets) {
  auto ones = torch::ones({2, 1, 3, 3}), zeros = torch::zeros({2, 1, 3, 3});
  EXPECT_EQ(adversarial_g(ones).item<float>(), 0.0f);
  EXPECT_EQ(adversarial_g(zeros).item<float>(), 1.0f);
  EXPECT_EQ(discriminator_loss(ones, zeros).item<float>(), 0.0f);
  EXPECT_FLOAT_EQ(discriminator_loss(zeros, ones).item<float>(), 1.0f);
  auto s = torch::tensor({0.5f, 1.5f}).view({1, 1, 1, 2});
  EXPECT_FLOAT_EQ(adversarial_g(s).item<float>(), 0.25f);
}

TEST(Losses, DiscriminatorOptimumIsHalf) {
  // For a fixed mixed distribution the minimizer of the D loss is 0.5
  auto d = torch::linspace(0, 1, 101);
  auto l = 0.5 * d.pow(2) + 0.5 * (d - 1).pow(2);
  EXPECT_EQ(l.argmin().item<std::int64_t>(), 50);
}

TEST(Losses, LayerDistanceIsChannelL1AveragedOverElements) {
  auto a = torch::zeros({1, 2, 2, 2});
  auto b = torch::zeros({1, 2, 2, 2});
  b[0][0][0][0] = 3;
  b[0][1][0][0] = -1;
  b[0][1][1][1] = 2;
  // element norms: 4, 0, 0, 2 -> mean 1.5
  EXPECT_FLOAT_EQ(layer_distance(a, b).item<float>(), 1.5f);
  EXPECT_EQ(layer_distance(b, b).item<float>(), 0.0f);
  EXPECT_THROW(layer_distance(a, torch::zeros({1, 2, 2, 3})), ShapeError);
}

TEST(Losses, PerceptualIsZeroForIdenticalFramesAndSymmetric) {
  Backbone b(ModelConfig::tiny().backbone);
  auto x = torch::rand({2, 1, 32, 32}), y = torch::rand({2, 1, 32, 32});
  EXPECT_EQ(perceptual(b, x, x).item<float>(), 0.0f);
  EXPECT_NEAR(perceptual(b, x, y).item<float>(), perceptual(b, y, x).item<float>(), 1e-5);
  EXPECT_GT(perceptual(b, x, y).item<float>(), 0.0f);
}

TEST(Losses, PerceptualGradientOnlyReachesTheGeneratedFrame) {
  Backbone b(ModelConfig::tiny().backbone);
  auto gen = torch::rand({1, 1, 32, 32}).requires_grad_(true);
  auto raw = torch::rand({1, 1, 32, 32}).requires_grad_(true);
  perceptual(b, gen, raw).backward();
  EXPECT_TRUE(gen.grad().defined());
  EXPECT_FALSE(raw.grad().defined());
}

TEST(Losses, FeatureMatchingUsesSelectedLayers) {
  torch::manual_seed(0);
  PatchDiscriminator d(ModelConfig::tiny().discriminator);
  auto x = torch::rand({1, 1, 64, 64}), y = torch::rand({1, 1, 64, 64});
  std::vector<int> all, first{0}, rest{1, 2};
  auto whole = feature_matching(d, x, y, all).item<double>();
  auto parts = feature_matching(d, x, y, first).item<double>() + feature_matching(d, x, y, rest).item<double>();
  EXPECT_NEAR(whole, parts, 1e-5 * whole);
  EXPECT_EQ(feature_matching(d, x, x, all).item<double>(), 0.0);
  std::vector<int> bad{3};
  EXPECT_THROW(feature_matching(d, x, y, bad), ConfigError);
}

TEST(Losses, GeneratorTotalCombination) {
  auto b = generator_total(0.5, 0.1, 0.2, 10, 10);
  EXPECT_DOUBLE_EQ(b.l_g_total, 0.5 + 1.0 + 2.0);
  EXPECT_DOUBLE_EQ(generator_total(0.5, 0.1, 0.2, 0, 0).l_g_total, 0.5);
  EXPECT_THROW(generator_total(0, 0, 0, -1, 0), ConfigError);
  auto t = generator_objective(torch::tensor(0.5), torch::tensor(0.1), torch::tensor(0.2), 2, 3);
  EXPECT_NEAR(t.item<double>(), 0.5 + 0.2 + 0.6, 1e-6);
}

TEST(Losses, LossLogFormat) {
  LossBundle b;
  b.l_adv = 0.25;
  b.l_vgg = 1;
  b.l_fm = 2;
  b.l_g_total = 30.25;
  b.l_d = 0.5;
  EXPECT_EQ(LossLog::header(), "step\tl_adv\tl_vgg\tl_fm\tl_g_total\tl_d");
  auto line = LossLog::format(7, b);
  EXPECT_EQ(line.substr(0, 2), "7\t");
  EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 5);
}

TEST(Losses, LayerDistanceGradient) {
  auto a = torch::randn({1, 3, 2, 2}, torch::kFloat64), b = torch::randn({1, 3, 2, 2}, torch::kFloat64);
  EXPECT_LE(oracle::gradcheck([&] { return layer_distance(a, b); }, {a}), 1e-4);
}
