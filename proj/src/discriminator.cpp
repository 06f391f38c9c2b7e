#include "vqe/discriminator.hpp"

namespace vqe {

namespace F = torch::nn::functional;

namespace {
constexpr std::int64_t kPad = 1;
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(const DiscriminatorConfig& cfg) : cfg_(cfg) {
  if (cfg.widths.empty() || cfg.widths.size() != cfg.strides.size()) {
    throw ConfigError("discriminator widths/strides mismatch");
  }
  int in = in_channels();
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    convs.push_back(register_module(
        "conv" + std::to_string(i),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in, cfg.widths[i], cfg.kernel).stride(cfg.strides[i]).padding(kPad))));
    strides_.push_back(cfg.strides[i]);
    in = cfg.widths[i];
  }
  convs.push_back(register_module("out", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, 1, cfg.kernel).padding(kPad))));
  strides_.push_back(1);
}

std::int64_t PatchDiscriminatorImpl::receptive_field() const {
  std::int64_t rf = 1;
  for (auto it = strides_.rbegin(); it != strides_.rend(); ++it) rf = (rf - 1) * *it + cfg_.kernel;
  return rf;
}

std::int64_t PatchDiscriminatorImpl::total_stride() const {
  std::int64_t s = 1;
  for (int v : strides_) s *= v;
  return s;
}

std::pair<std::int64_t, std::int64_t> PatchDiscriminatorImpl::output_size(std::int64_t height,
                                                                          std::int64_t width) const {
  for (int s : strides_) {
    height = (height + 2 * kPad - cfg_.kernel) / s + 1;
    width = (width + 2 * kPad - cfg_.kernel) / s + 1;
  }
  return {height, width};
}

ReceptiveWindow PatchDiscriminatorImpl::window(std::int64_t row, std::int64_t col) const {
  // Offset of the first input sample under element 0, accumulated through the padding of every layer.
  std::int64_t jump = 1, offset = 0;
  for (int s : strides_) {
    offset += kPad * jump;
    jump *= s;
  }
  const auto rf = receptive_field();
  return {row * jump - offset, row * jump - offset + rf - 1, col * jump - offset, col * jump - offset + rf - 1};
}

void PatchDiscriminatorImpl::check_input(const torch::Tensor& x) const {
  if (x.dim() != 4 || x.size(1) != in_channels()) {
    throw ShapeError("discriminator expects N x " + std::to_string(in_channels()) + " x H x W");
  }
  const auto rf = receptive_field();
  if (x.size(2) < rf || x.size(3) < rf) {
    throw ShapeError("input " + std::to_string(x.size(2)) + "x" + std::to_string(x.size(3)) +
                     " smaller than the receptive field " + std::to_string(rf));
  }
}

std::vector<torch::Tensor> PatchDiscriminatorImpl::activations(const torch::Tensor& x_in) {
  check_input(x_in);
  std::vector<torch::Tensor> out;
  auto x = x_in;
  for (std::size_t i = 0; i + 1 < convs.size(); ++i) {
    x = convs[i]->forward(x);
    if (cfg_.instance_norm && i > 0) x = F::instance_norm(x, F::InstanceNormFuncOptions().eps(1e-5));
    x = F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2));
    out.push_back(x);
  }
  out.push_back(convs.back()->forward(x));
  return out;
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) { return activations(x).back(); }

torch::Tensor discriminate(PatchDiscriminator& d, const Frame& image, const Frame* condition) {
  auto x = image.data().unsqueeze(0).unsqueeze(0);
  if (d->config().conditional) {
    if (!condition) throw InvalidInputError("conditional discriminator needs the compressed frame");
    x = torch::cat({x, condition->data().unsqueeze(0).unsqueeze(0)}, 1);
  }
  torch::NoGradGuard guard;
  return d->forward(x).squeeze(0);
}

double realness(PatchDiscriminator& d, const Frame& image, const Frame* condition) {
  return discriminate(d, image, condition).mean().item<double>();
}

}  // namespace vqe
