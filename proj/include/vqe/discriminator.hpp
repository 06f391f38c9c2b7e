#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "vqe/config.hpp"
#include "vqe/core.hpp"

namespace vqe {

/// Input-space window [row0, row1] x [col0, col1] (inclusive, may extend past
/// the image border into padding) seen by one score element.
struct ReceptiveWindow {
  std::int64_t row0, row1, col0, col1;
  bool contains(std::int64_t r, std::int64_t c) const { return r >= row0 && r <= row1 && c >= col0 && c <= col1; }
};

/// Convolution-only patch discriminator: strided kxk convs with leaky
/// rectifiers, then a 1-channel kxk conv with no output activation. Every
/// conv pads by 1.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(const DiscriminatorConfig& cfg);

  /// N x C x H x W -> N x 1 x h_d x w_d raw scores.
  torch::Tensor forward(const torch::Tensor& x);
  /// Hidden activations of every layer followed by the score map (last entry).
  std::vector<torch::Tensor> activations(const torch::Tensor& x);

  std::int64_t receptive_field() const;
  std::int64_t total_stride() const;
  std::pair<std::int64_t, std::int64_t> output_size(std::int64_t height, std::int64_t width) const;
  ReceptiveWindow window(std::int64_t row, std::int64_t col) const;

  int in_channels() const { return cfg_.conditional ? 2 : 1; }
  const DiscriminatorConfig& config() const { return cfg_; }

  std::vector<torch::nn::Conv2d> convs;  // hidden layers then the output layer

 private:
  void check_input(const torch::Tensor& x) const;

  DiscriminatorConfig cfg_;
  std::vector<int> strides_;  // includes the output layer (stride 1)
};
TORCH_MODULE(PatchDiscriminator);

/// Score map of a single frame (1 x h_d x w_d). `condition` is required when
/// the discriminator is conditional.
torch::Tensor discriminate(PatchDiscriminator& d, const Frame& image, const Frame* condition = nullptr);
/// Mean patch score.
double realness(PatchDiscriminator& d, const Frame& image, const Frame* condition = nullptr);

}  // namespace vqe
