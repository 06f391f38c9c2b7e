#pragma once

#include <torch/torch.h>

#include <fstream>
#include <span>
#include <string>

#include "vqe/discriminator.hpp"
#include "vqe/features.hpp"

namespace vqe {

/// Least-squares generator term: mean((D(G) - 1)^2).
torch::Tensor adversarial_g(const torch::Tensor& fake_scores);

/// Least-squares discriminator loss: 0.5 mean(fake^2) + 0.5 mean((real - 1)^2).
torch::Tensor discriminator_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores);

/// Per-layer feature distance: L1 norm over channels at every spatial
/// element, averaged over elements (and the batch). Inputs N x C x h x w.
torch::Tensor layer_distance(const torch::Tensor& a, const torch::Tensor& b);

/// Sum of layer distances over the six backbone taps between the raw frame
/// and the generated frame. The raw branch carries no gradient.
torch::Tensor perceptual(Backbone& backbone, const torch::Tensor& generated, const torch::Tensor& raw);

/// Sum of layer distances over the selected hidden discriminator layers.
/// `layers` empty selects every hidden layer. The raw branch is detached.
/// `condition` (N x 1 x H x W) is concatenated when the discriminator is conditional.
torch::Tensor feature_matching(PatchDiscriminator& disc, const torch::Tensor& generated, const torch::Tensor& raw,
                               std::span<const int> layers, const torch::Tensor& condition = {});

struct LossBundle {
  double l_adv = 0, l_vgg = 0, l_fm = 0, l_g_total = 0, l_d = 0;
  double alpha = 10, beta = 10;
};

/// l_g_total = l_adv + alpha * l_vgg + beta * l_fm. Throws ConfigError on negative weights.
LossBundle generator_total(double l_adv, double l_vgg, double l_fm, double alpha, double beta);
torch::Tensor generator_objective(const torch::Tensor& l_adv, const torch::Tensor& l_vgg, const torch::Tensor& l_fm,
                                  double alpha, double beta);

/// Tab-separated loss curve: step, l_adv, l_vgg, l_fm, l_g_total, l_d.
class LossLog {
 public:
  LossLog() = default;
  explicit LossLog(const std::string& path);
  void append(int step, const LossBundle& b);
  static std::string header();
  static std::string format(int step, const LossBundle& b);

 private:
  std::ofstream out_;
};

}  // namespace vqe
