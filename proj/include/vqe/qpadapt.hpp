#pragma once

#include <torch/torch.h>

#include <vector>

#include "vqe/core.hpp"

namespace vqe {

/// QP-conditional adaptation head.
///
/// Three modulated stages: features <- lrelu(conv3x3(features * gate_s)),
/// where gate_s = softplus(FC_s(one_hot)) is a strictly positive per-channel
/// weight. A final ungated 3x3 conv produces one channel. With QP adaptation
/// disabled the FC layers do not exist and the same conv stack runs with
/// unit gates.
class QPAdaptImpl : public torch::nn::Module {
 public:
  QPAdaptImpl(int in_channels, int vocab_size, const std::vector<int>& stage_widths, bool qp_enabled, bool residual);

  /// one_hot: N x |vocab|. Returns N x C_stage (input channels of that stage).
  torch::Tensor gate(const torch::Tensor& one_hot, int stage);

  /// Output of the final projection (the residual in residual mode).
  torch::Tensor head(const torch::Tensor& features, const torch::Tensor& one_hot);

  /// Enhanced target before clamping: compressed + head (residual mode) or head.
  torch::Tensor forward(const torch::Tensor& features, const torch::Tensor& one_hot, const torch::Tensor& compressed);

  bool qp_enabled() const { return enabled_; }
  bool residual() const { return residual_; }
  int vocab_size() const { return vocab_; }
  /// Input channel count of each gated stage.
  const std::vector<int>& stage_inputs() const { return stage_in_; }

  std::vector<torch::nn::Linear> fcs;
  std::vector<torch::nn::Conv2d> stages;
  torch::nn::Conv2d output{nullptr};

 private:
  bool enabled_;
  bool residual_;
  int vocab_;
  std::vector<int> stage_in_;
};
TORCH_MODULE(QPAdapt);

/// Throws InvalidInputError unless every row is a 0/1 vector with one hot entry.
void check_one_hot(const torch::Tensor& one_hot, int vocab_size);

torch::Tensor qp_gate(QPAdapt& params, const QPCode& qp, int stage);

/// Single-frame adaptation: features C x H x W, compressed H x W. Clamped to [0,1].
Frame adapt(QPAdapt& params, const torch::Tensor& features, const QPCode& qp, const Frame& compressed);

}  // namespace vqe
