#include "vqe/losses.hpp"

#include <cstdio>

namespace vqe {

namespace {

void require_scores(const torch::Tensor& s, const char* what) {
  if (!s.defined() || s.numel() == 0) throw InvalidInputError(std::string(what) + ": empty score map");
}

}  // namespace

torch::Tensor adversarial_g(const torch::Tensor& fake_scores) {
  require_scores(fake_scores, "adversarial_g");
  return (fake_scores - 1).pow(2).mean();
}

torch::Tensor discriminator_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores) {
  require_scores(real_scores, "discriminator_loss");
  require_scores(fake_scores, "discriminator_loss");
  return 0.5 * fake_scores.pow(2).mean() + 0.5 * (real_scores - 1).pow(2).mean();
}

torch::Tensor layer_distance(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw ShapeError("feature maps differ in shape");
  return (a - b).abs().sum(1).mean();
}

torch::Tensor perceptual(Backbone& backbone, const torch::Tensor& generated, const torch::Tensor& raw) {
  if (generated.sizes() != raw.sizes()) throw ShapeError("perceptual: generated and raw frames differ in size");
  std::map<TapId, torch::Tensor> real;
  {
    torch::NoGradGuard guard;
    real = backbone->forward(raw, kTargetTaps);
  }
  auto fake = backbone->forward(generated, kTargetTaps);
  auto total = torch::zeros({}, generated.options());
  for (const auto& tap : kTargetTaps) total = total + layer_distance(real.at(tap), fake.at(tap));
  return total;
}

torch::Tensor feature_matching(PatchDiscriminator& disc, const torch::Tensor& generated, const torch::Tensor& raw,
                               std::span<const int> layers, const torch::Tensor& condition) {
  if (generated.sizes() != raw.sizes()) throw ShapeError("feature_matching: generated and raw frames differ in size");
  auto g = generated, r = raw;
  if (disc->config().conditional) {
    if (!condition.defined()) throw InvalidInputError("conditional discriminator needs the compressed frame");
    g = torch::cat({g, condition}, 1);
    r = torch::cat({r, condition}, 1);
  }
  std::vector<torch::Tensor> real;
  {
    torch::NoGradGuard guard;
    real = disc->activations(r);
  }
  auto fake = disc->activations(g);
  const auto hidden = static_cast<int>(fake.size()) - 1;
  auto total = torch::zeros({}, generated.options());
  auto add = [&](int i) { total = total + layer_distance(real[static_cast<std::size_t>(i)], fake[static_cast<std::size_t>(i)]); };
  if (layers.empty()) {
    for (int i = 0; i < hidden; ++i) add(i);
  } else {
    for (int i : layers) {
      if (i < 0 || i >= hidden) throw ConfigError("feature-matching layer index out of range");
      add(i);
    }
  }
  return total;
}

LossBundle generator_total(double l_adv, double l_vgg, double l_fm, double alpha, double beta) {
  if (alpha < 0 || beta < 0) throw ConfigError("loss weights must be non-negative");
  LossBundle b;
  b.l_adv = l_adv;
  b.l_vgg = l_vgg;
  b.l_fm = l_fm;
  b.alpha = alpha;
  b.beta = beta;
  b.l_g_total = l_adv + alpha * l_vgg + beta * l_fm;
  return b;
}

torch::Tensor generator_objective(const torch::Tensor& l_adv, const torch::Tensor& l_vgg, const torch::Tensor& l_fm,
                                  double alpha, double beta) {
  if (alpha < 0 || beta < 0) throw ConfigError("loss weights must be non-negative");
  return l_adv + alpha * l_vgg + beta * l_fm;
}

LossLog::LossLog(const std::string& path) : out_(path) {
  if (!out_) throw IoError("cannot write loss log " + path);
  out_ << header() << '\n';
}

std::string LossLog::header() { return "step\tl_adv\tl_vgg\tl_fm\tl_g_total\tl_d"; }

std::string LossLog::format(int step, const LossBundle& b) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g", step, b.l_adv, b.l_vgg, b.l_fm, b.l_g_total,
                b.l_d);
  return buf;
}

void LossLog::append(int step, const LossBundle& b) {
  if (!out_.is_open()) return;
  out_ << format(step, b) << '\n';
  out_.flush();
}

}  // namespace vqe
