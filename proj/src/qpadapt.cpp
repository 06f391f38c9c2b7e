#include "vqe/qpadapt.hpp"

namespace vqe {

namespace F = torch::nn::functional;

QPAdaptImpl::QPAdaptImpl(int in_channels, int vocab_size, const std::vector<int>& stage_widths, bool qp_enabled,
                         bool residual)
    : enabled_(qp_enabled), residual_(residual), vocab_(vocab_size) {
  if (stage_widths.size() != 3) throw ConfigError("QP adaptation needs exactly three stages");
  int in = in_channels;
  for (std::size_t s = 0; s < stage_widths.size(); ++s) {
    stage_in_.push_back(in);
    if (enabled_) {
      fcs.push_back(register_module("fc" + std::to_string(s), torch::nn::Linear(vocab_size, in)));
    }
    stages.push_back(register_module("conv" + std::to_string(s),
                                     torch::nn::Conv2d(torch::nn::Conv2dOptions(in, stage_widths[s], 3).padding(1))));
    in = stage_widths[s];
  }
  output = register_module("out", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, 1, 3).padding(1)));
  if (residual_) {
    torch::NoGradGuard guard;
    output->weight.mul_(0.1);
    output->bias.zero_();
  }
}

void check_one_hot(const torch::Tensor& one_hot, int vocab_size) {
  if (one_hot.dim() != 2 || one_hot.size(1) != vocab_size) {
    throw InvalidInputError("one-hot must be N x " + std::to_string(vocab_size));
  }
  const auto binary = (one_hot == 0).logical_or(one_hot == 1).all().item<bool>();
  const auto single = (one_hot.sum(1) == 1).all().item<bool>();
  if (!binary || !single) throw InvalidInputError("malformed QP one-hot vector");
}

torch::Tensor QPAdaptImpl::gate(const torch::Tensor& one_hot, int stage) {
  if (stage < 0 || stage >= static_cast<int>(stages.size())) throw InvalidInputError("gate stage out of range");
  check_one_hot(one_hot, vocab_);
  const auto s = static_cast<std::size_t>(stage);
  if (!enabled_) return torch::ones({one_hot.size(0), stage_in_[s]}, one_hot.options());
  return F::softplus(fcs[s]->forward(one_hot));
}

torch::Tensor QPAdaptImpl::head(const torch::Tensor& features, const torch::Tensor& one_hot) {
  if (features.dim() != 4 || features.size(1) != stage_in_.front()) {
    throw ShapeError("QP adaptation expects N x " + std::to_string(stage_in_.front()) + " x H x W features");
  }
  auto x = features;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (enabled_) {
      auto g = gate(one_hot, static_cast<int>(s));
      x = x * g.unsqueeze(-1).unsqueeze(-1);
    }
    x = F::leaky_relu(stages[s]->forward(x), F::LeakyReLUFuncOptions().negative_slope(0.2));
  }
  return output->forward(x);
}

torch::Tensor QPAdaptImpl::forward(const torch::Tensor& features, const torch::Tensor& one_hot,
                                   const torch::Tensor& compressed) {
  auto y = head(features, one_hot);
  if (y.sizes() != compressed.sizes()) throw ShapeError("compressed target does not match feature resolution");
  return residual_ ? compressed + y : y;
}

torch::Tensor qp_gate(QPAdapt& params, const QPCode& qp, int stage) {
  return params->gate(qp.tensor(), stage).squeeze(0);
}

Frame adapt(QPAdapt& params, const torch::Tensor& features, const QPCode& qp, const Frame& compressed) {
  torch::NoGradGuard guard;
  auto out = params->forward(features.unsqueeze(0), qp.tensor(), compressed.data().unsqueeze(0).unsqueeze(0));
  return frame_from_unclamped(out.squeeze(0).squeeze(0), compressed.index());
}

}  // namespace vqe
