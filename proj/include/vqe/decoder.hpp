#pragma once

#include <torch/torch.h>

#include <array>
#include <map>
#include <vector>

#include "vqe/core.hpp"
#include "vqe/features.hpp"

namespace vqe {

/// Bilinear x2 upsampling (align_corners = false).
torch::Tensor upsample2(const torch::Tensor& x);

/// One progressive decoder branch.
///
/// Level 5 starts from tap (5,4) plus the level-5 attention output. Each
/// transition to level L (4..1) upsamples bilinearly by 2, adds the level-L
/// attention output when present, concatenates tap (L,1) along channels and
/// applies a 3x3 convolution followed by a leaky rectifier (slope 0.2).
/// There is no transposed convolution anywhere in the branch.
class DecoderBranchImpl : public torch::nn::Module {
 public:
  /// tap_channels in kTargetTaps order; widths are the conv outputs of levels 5..1.
  DecoderBranchImpl(const std::array<int, 6>& tap_channels, const std::vector<int>& widths);

  /// attention maps backbone level (3..5) to an N x c_L x h_L x w_L tensor.
  torch::Tensor forward(const FeaturePyramid& target, const std::map<int, torch::Tensor>& attention);

  int out_channels() const { return widths_.back(); }

  /// Level-5 conv first, level-1 conv last.
  std::vector<torch::nn::Conv2d> convs;

 private:
  std::vector<int> widths_;
};
TORCH_MODULE(DecoderBranch);

/// Runs a branch honouring the ablation mask: only attention levels whose
/// block is enabled are fused. Throws ConfigError when an enabled level has no
/// attention output.
torch::Tensor decode_branch(DecoderBranch& branch, int branch_id, const FeaturePyramid& target,
                            const std::map<int, torch::Tensor>& attention, const AblationMask& mask);

/// Channel concatenation (first, second) when the first branch is enabled,
/// otherwise the second branch unchanged.
torch::Tensor merge_branches(const torch::Tensor& first, const torch::Tensor& second, const AblationMask& mask);

}  // namespace vqe
