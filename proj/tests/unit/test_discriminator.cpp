#include <gtest/gtest.h>

#include <random>

#include "vqe/config.hpp"
#include "vqe/discriminator.hpp"

using namespace vqe;

TEST(Discriminator, DefaultIsThe70PixelPatchStack) {
  PatchDiscriminator d(DiscriminatorConfig{});
  EXPECT_EQ(d->receptive_field(), 70);
  EXPECT_EQ(d->output_size(128, 128), std::make_pair(std::int64_t{14}, std::int64_t{14}));
  auto s = d->forward(torch::rand({1, 1, 128, 128}));
  EXPECT_EQ(s.sizes(), (std::vector<std::int64_t>{1, 1, 14, 14}));
}

TEST(Discriminator, OutputSizeMatchesForward) {
  auto cfg = ModelConfig::tiny().discriminator;
  PatchDiscriminator d(cfg);
  for (std::int64_t h : {34, 40, 64, 97}) {
    auto [oh, ow] = d->output_size(h, h + 3);
    auto s = d->forward(torch::rand({1, 1, h, h + 3}));
    EXPECT_EQ(s.size(2), oh);
    EXPECT_EQ(s.size(3), ow);
  }
}

TEST(Discriminator, TooSmallInputIsRejected) {
  PatchDiscriminator d(DiscriminatorConfig{});
  EXPECT_THROW(d->forward(torch::rand({1, 1, 64, 64})), ShapeError);
  EXPECT_THROW(d->forward(torch::rand({1, 2, 128, 128})), ShapeError);
}

TEST(Discriminator, PixelsOutsideTheWindowDoNotMatter) {
  torch::manual_seed(0);
  auto cfg = ModelConfig::tiny().discriminator;
  PatchDiscriminator d(cfg);
  torch::NoGradGuard guard;
  auto x = torch::rand({1, 1, 64, 64});
  auto base = d->forward(x);
  std::mt19937 rng(1);
  for (int trial = 0; trial < 8; ++trial) {
    const auto r = std::uniform_int_distribution<std::int64_t>(0, base.size(2) - 1)(rng);
    const auto c = std::uniform_int_distribution<std::int64_t>(0, base.size(3) - 1)(rng);
    const auto win = d->window(r, c);
    // perturb every pixel outside the window at once
    auto y = x.clone();
    for (std::int64_t i = 0; i < 64; ++i)
      for (std::int64_t j = 0; j < 64; ++j)
        if (!win.contains(i, j)) y[0][0][i][j] = 1.0f - y[0][0][i][j].item<float>();
    auto s = d->forward(y);
    EXPECT_EQ(s[0][0][r][c].item<float>(), base[0][0][r][c].item<float>()) << r << "," << c;
  }
}

TEST(Discriminator, WindowIsTight) {
  // a pixel just inside the window edge can change the score
  torch::manual_seed(2);
  auto cfg = ModelConfig::tiny().discriminator;
  PatchDiscriminator d(cfg);
  torch::NoGradGuard guard;
  auto x = torch::rand({1, 1, 64, 64});
  auto base = d->forward(x);
  const auto win = d->window(3, 3);
  ASSERT_GE(win.row0, 0);
  auto y = x.clone();
  y[0][0][win.row0][win.col0 + 10] += 0.5f;
  EXPECT_NE(d->forward(y)[0][0][3][3].item<float>(), base[0][0][3][3].item<float>());
}

TEST(Discriminator, RealnessIsTheMeanScore) {
  PatchDiscriminator d(ModelConfig::tiny().discriminator);
  Frame f(torch::rand({64, 64}));
  auto map = discriminate(d, f);
  EXPECT_EQ(realness(d, f), map.mean().item<double>());
}

TEST(Discriminator, ConditionalNeedsTheCompressedFrame) {
  auto cfg = ModelConfig::tiny().discriminator;
  cfg.conditional = true;
  PatchDiscriminator d(cfg);
  Frame f(torch::rand({64, 64}));
  EXPECT_THROW(discriminate(d, f), InvalidInputError);
  EXPECT_EQ(discriminate(d, f, &f).dim(), 3);
}

TEST(Discriminator, TranslationByStrideShiftsTheMap) {
  torch::manual_seed(3);
  PatchDiscriminator d(ModelConfig::tiny().discriminator);
  torch::NoGradGuard guard;
  const auto s = d->total_stride();
  auto x = torch::rand({1, 1, 96, 96});
  auto a = d->forward(x);
  auto b = d->forward(torch::roll(x, {s, s}, {2, 3}));
  // interior elements away from the padded border agree after the shift
  auto ia = a.index({0, 0, torch::indexing::Slice(3, -4), torch::indexing::Slice(3, -4)});
  auto ib = b.index({0, 0, torch::indexing::Slice(4, -3), torch::indexing::Slice(4, -3)});
  EXPECT_LE((ia - ib).abs().max().item<float>(), 1e-5f);
}
