#include "vqe/visualize.hpp"

#include "vqe/image.hpp"

namespace vqe {

AttentionVisual visualize_attention(Generator& generator, const ClipTriplet& triplet, const QPCode& qp, int block,
                                    std::int64_t row, std::int64_t col, std::int64_t k) {
  auto it = generator->attention.find(block);
  if (it == generator->attention.end())
    throw ConfigError("attention block " + std::to_string(block) + " is disabled in this model");
  const auto h = triplet.target.height(), w = triplet.target.width();
  if (row < 0 || row >= h || col < 0 || col >= w) throw InvalidInputError("query pixel outside the frame");
  if (k < 1) throw InvalidInputError("k must be positive");
  if (qp.vocabulary != generator->config().qp_vocabulary)
    throw UnknownQpError("QP code vocabulary does not match the model's trained QPs");

  torch::NoGradGuard guard;
  const auto ph = round_up(h, 16), pw = round_up(w, 16);
  auto batch = [&](const Frame& f) { return reflect_pad_to(f.data(), ph, pw).unsqueeze(0).unsqueeze(0); };
  GeneratorTrace trace;
  generator->forward(batch(triplet.preceding), batch(triplet.target), batch(triplet.succeeding), qp.tensor(), &trace);

  AttentionVisual v;
  const auto& mask = generator->config().ablation;
  v.reference = mask.block_reference(block);
  const auto& ref = v.reference > 0 ? *trace.succeeding : *trace.preceding;
  const int level = block_level(block);
  v.map = it->second->correlation(trace.target.at({level, 1}), ref.at({level, 1}));
  // The downsampled grid may cover a reflect-padded margin; cells are sized on the padded frame.
  const auto scale = std::int64_t{1} << (level - 1);
  const auto factor = it->second->downsample_factor();
  v.cell_height = scale * factor;
  v.cell_width = scale * factor;
  v.query_row = row / v.cell_height;
  v.query_col = col / v.cell_width;
  v.top = top_k_correlations(v.map, v.query_row, v.query_col, k);

  const auto& ref_frame = v.reference > 0 ? triplet.succeeding : triplet.preceding;
  constexpr std::int64_t gap = 8;
  auto left = to_rgb(triplet.target.data());
  auto right = to_rgb(ref_frame.data());
  draw_box(left, v.query_row * v.cell_height, v.query_col * v.cell_width, v.cell_height, v.cell_width,
           {1.f, 0.f, 0.f}, 2);
  for (const auto& p : v.top)
    draw_box(right, p.row * v.cell_height, p.col * v.cell_width, v.cell_height, v.cell_width, {0.f, 1.f, 0.f}, 1);
  v.image = torch::cat({left, torch::ones({3, h, gap}), right}, 2);
  return v;
}

}  // namespace vqe
