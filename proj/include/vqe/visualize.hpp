#pragma once

#include <torch/torch.h>

#include <vector>

#include "vqe/attention.hpp"
#include "vqe/pipeline.hpp"

namespace vqe {

struct AttentionVisual {
  /// 3 x H x (2W + gap): target with the query cell boxed in red, then the
  /// reference frame with the top-k cells boxed in green.
  torch::Tensor image;
  CorrelationMap map;
  std::vector<RankedPosition> top;  // in map cells, strongest first
  std::int64_t query_row = 0, query_col = 0;  // in map cells
  std::int64_t cell_height = 1, cell_width = 1;  // frame pixels per map cell
  int reference = -1;  // -1 preceding, +1 succeeding
};

/// Correlation of one target pixel (frame coordinates) under attention block
/// `block` of the generator. Throws ConfigError when the block is masked off
/// and InvalidInputError when the pixel is outside the frame.
AttentionVisual visualize_attention(Generator& generator, const ClipTriplet& triplet, const QPCode& qp, int block,
                                    std::int64_t row, std::int64_t col, std::int64_t k);

}  // namespace vqe
