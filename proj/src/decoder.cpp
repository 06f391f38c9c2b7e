#include "vqe/decoder.hpp"

namespace vqe {

namespace F = torch::nn::functional;

torch::Tensor upsample2(const torch::Tensor& x) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .scale_factor(std::vector<double>{2.0, 2.0})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

DecoderBranchImpl::DecoderBranchImpl(const std::array<int, 6>& tap_channels, const std::vector<int>& widths)
    : widths_(widths) {
  if (widths.size() != 5) throw ConfigError("decoder branch needs 5 widths");
  // Level 5 consumes tap (5,4); level L < 5 consumes the previous output plus tap (L,1).
  int in = tap_channels[5];
  for (int level = 5; level >= 1; --level) {
    const auto i = static_cast<std::size_t>(5 - level);
    if (level < 5) in += tap_channels[static_cast<std::size_t>(level - 1)];
    convs.push_back(register_module("conv" + std::to_string(level),
                                    torch::nn::Conv2d(torch::nn::Conv2dOptions(in, widths[i], 3).padding(1))));
    in = widths[i];
  }
}

torch::Tensor DecoderBranchImpl::forward(const FeaturePyramid& target, const std::map<int, torch::Tensor>& attention) {
  auto fused = [&](torch::Tensor x, int level) {
    auto it = attention.find(level);
    if (it == attention.end()) return x;
    if (it->second.sizes() != x.sizes()) throw ShapeError("attention output does not match level " + std::to_string(level));
    return x + it->second;
  };
  auto x = fused(target.at({5, 4}), 5);
  x = F::leaky_relu(convs[0]->forward(x), F::LeakyReLUFuncOptions().negative_slope(0.2));
  for (int level = 4; level >= 1; --level) {
    x = fused(upsample2(x), level);
    x = torch::cat({x, target.at({level, 1})}, 1);
    x = F::leaky_relu(convs[static_cast<std::size_t>(5 - level)]->forward(x),
                      F::LeakyReLUFuncOptions().negative_slope(0.2));
  }
  return x;
}

torch::Tensor decode_branch(DecoderBranch& branch, int branch_id, const FeaturePyramid& target,
                            const std::map<int, torch::Tensor>& attention, const AblationMask& mask) {
  std::map<int, torch::Tensor> used;
  for (int level = 3; level <= 5; ++level) {
    const int block = block_for(branch_id, level);
    if (!mask.block(block)) continue;
    auto it = attention.find(level);
    if (it == attention.end() || !it->second.defined()) {
      throw ConfigError("attention block " + std::to_string(block) + " is enabled but produced no output");
    }
    used.emplace(level, it->second);
  }
  return branch->forward(target, used);
}

torch::Tensor merge_branches(const torch::Tensor& first, const torch::Tensor& second, const AblationMask& mask) {
  if (!mask.first_branch) return second;
  if (!first.defined()) throw ConfigError("first branch enabled but not evaluated");
  if (first.dim() != second.dim() || second.dim() < 3 || first.size(-1) != second.size(-1) ||
      first.size(-2) != second.size(-2) || (second.dim() == 4 && first.size(0) != second.size(0))) {
    throw ShapeError("branch outputs differ spatially");
  }
  // Channel axis is third from the end for both C x H x W and N x C x H x W.
  return torch::cat({first, second}, second.dim() - 3);
}

}  // namespace vqe
