#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "vqe/config.hpp"

namespace vqe {

/// Row-stochastic map between query (target) positions and reference
/// positions, N x (h*w) x (h'*w'). h', w' are the reference dims after the
/// optional downsampling; query dims are downsampled identically.
struct CorrelationMap {
  torch::Tensor weights;
  std::int64_t query_height = 0, query_width = 0;
  std::int64_t ref_height = 0, ref_width = 0;
};

/// Conditional non-local attention between a target tap and a reference tap.
///
/// Queries come from a 1x1 projection of the target, keys from a 1x1
/// projection of the reference, and the values are the raw reference
/// features: there is no value projection. Each output position is therefore
/// a convex combination of reference feature vectors.
///
/// With a downsample factor s > 1 the three inputs are padded to a multiple of
/// s, average-pooled by s, attended at the low resolution, and the result is
/// bilinearly upsampled and cropped back to the tap size.
class AttentionBlockImpl : public torch::nn::Module {
 public:
  AttentionBlockImpl(int channels, int projection_channels, int downsample_factor, bool scale_logits);

  /// target, reference: N x c x h x w with identical shapes.
  torch::Tensor forward(const torch::Tensor& target, const torch::Tensor& reference);
  CorrelationMap correlation(const torch::Tensor& target, const torch::Tensor& reference);

  torch::nn::Conv2d query{nullptr};
  torch::nn::Conv2d key{nullptr};

  int downsample_factor() const { return factor_; }
  void set_downsample_factor(int f);

 private:
  struct Prepared {
    torch::Tensor q, k, v;  // downsampled projections and values
    std::int64_t h, w, ph, pw;
  };
  Prepared prepare(const torch::Tensor& target, const torch::Tensor& reference);
  torch::Tensor weights_from(const Prepared& p);

  int factor_;
  bool scale_;
};
TORCH_MODULE(AttentionBlock);

inline torch::Tensor attend(AttentionBlock& block, const torch::Tensor& target, const torch::Tensor& reference) {
  return block->forward(target, reference);
}
inline CorrelationMap correlation_map(AttentionBlock& block, const torch::Tensor& target,
                                      const torch::Tensor& reference) {
  return block->correlation(target, reference);
}

struct RankedPosition {
  std::int64_t row = 0, col = 0;
  float weight = 0.0f;
};

/// The k reference positions with the largest weight for one query position
/// (in the map's query grid), descending; ties go to the earlier row-major
/// position. Uses batch element 0.
std::vector<RankedPosition> top_k_correlations(const CorrelationMap& map, std::int64_t query_row,
                                               std::int64_t query_col, std::int64_t k);

}  // namespace vqe
