#include "vqe/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vqe/core.hpp"

namespace vqe {

AttentionBlockImpl::AttentionBlockImpl(int channels, int projection_channels, int downsample_factor, bool scale_logits)
    : factor_(downsample_factor), scale_(scale_logits) {
  const int proj = projection_channels > 0 ? projection_channels : channels;
  query = register_module("query", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, proj, 1)));
  key = register_module("key", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, proj, 1)));
  set_downsample_factor(downsample_factor);
}

void AttentionBlockImpl::set_downsample_factor(int f) {
  if (f < 1) throw ConfigError("attention downsample factor must be >= 1");
  factor_ = f;
}

AttentionBlockImpl::Prepared AttentionBlockImpl::prepare(const torch::Tensor& target, const torch::Tensor& reference) {
  if (target.dim() != 4 || target.sizes() != reference.sizes()) {
    throw ShapeError("attention inputs must be N x c x h x w with identical shapes");
  }
  if (target.size(1) != query->options.in_channels()) {
    throw ShapeError("attention block expects " + std::to_string(query->options.in_channels()) + " channels, got " +
                     std::to_string(target.size(1)));
  }
  if (!torch::isfinite(target).all().item<bool>() || !torch::isfinite(reference).all().item<bool>()) {
    throw NumericError("non-finite attention input");
  }
  Prepared p;
  p.h = target.size(2);
  p.w = target.size(3);
  auto q = query->forward(target);
  auto k = key->forward(reference);
  auto v = reference;
  p.ph = p.h;
  p.pw = p.w;
  if (factor_ > 1) {
    p.ph = round_up(p.h, factor_);
    p.pw = round_up(p.w, factor_);
    auto down = [&](const torch::Tensor& x) { return torch::avg_pool2d(reflect_pad_to(x, p.ph, p.pw), factor_); };
    q = down(q);
    k = down(k);
    v = down(v);
  }
  p.q = q;
  p.k = k;
  p.v = v;
  return p;
}

torch::Tensor AttentionBlockImpl::weights_from(const Prepared& p) {
  const auto n = p.q.size(0);
  const auto cp = p.q.size(1);
  auto q = p.q.reshape({n, cp, -1}).transpose(1, 2);  // N x hw x c'
  auto k = p.k.reshape({n, cp, -1});                  // N x c' x h'w'
  auto logits = torch::bmm(q, k);
  if (scale_) logits = logits / std::sqrt(static_cast<double>(cp));
  return torch::softmax(logits, -1);
}

CorrelationMap AttentionBlockImpl::correlation(const torch::Tensor& target, const torch::Tensor& reference) {
  auto p = prepare(target, reference);
  CorrelationMap m;
  m.weights = weights_from(p);
  m.query_height = p.q.size(2);
  m.query_width = p.q.size(3);
  m.ref_height = p.k.size(2);
  m.ref_width = p.k.size(3);
  return m;
}

torch::Tensor AttentionBlockImpl::forward(const torch::Tensor& target, const torch::Tensor& reference) {
  auto p = prepare(target, reference);
  auto a = weights_from(p);
  const auto n = p.v.size(0);
  const auto c = p.v.size(1);
  auto v = p.v.reshape({n, c, -1});                                   // N x c x h'w'
  auto out = torch::bmm(v, a.transpose(1, 2)).reshape({n, c, p.q.size(2), p.q.size(3)});
  if (factor_ > 1) {
    namespace F = torch::nn::functional;
    out = F::interpolate(out, F::InterpolateFuncOptions()
                                  .size(std::vector<std::int64_t>{p.ph, p.pw})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
    using torch::indexing::Slice;
    out = out.index({Slice(), Slice(), Slice(0, p.h), Slice(0, p.w)});
  }
  return out;
}

std::vector<RankedPosition> top_k_correlations(const CorrelationMap& map, std::int64_t query_row,
                                               std::int64_t query_col, std::int64_t k) {
  if (query_row < 0 || query_col < 0 || query_row >= map.query_height || query_col >= map.query_width) {
    throw InvalidInputError("query position out of bounds");
  }
  const auto positions = map.ref_height * map.ref_width;
  if (k < 1 || k > positions) throw InvalidInputError("k must be in [1, h'w']");
  auto row = map.weights[0][query_row * map.query_width + query_col].to(torch::kFloat32).contiguous();
  const float* w = row.data_ptr<float>();
  std::vector<std::int64_t> order(static_cast<std::size_t>(positions));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) { return w[a] > w[b]; });
  std::vector<RankedPosition> out;
  for (std::int64_t i = 0; i < k; ++i) {
    const auto idx = order[static_cast<std::size_t>(i)];
    out.push_back({idx / map.ref_width, idx % map.ref_width, w[idx]});
  }
  return out;
}

}  // namespace vqe
