#include "vqe/features.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <cmath>

#include "vqe/checkpoint.hpp"

namespace vqe {

namespace {

constexpr std::array<int, 5> kVggConvs{2, 2, 4, 4, 4};
constexpr std::array<int, 5> kVggWidths{64, 128, 256, 512, 512};

int last_conv_of(const std::vector<std::vector<torch::nn::Conv2d>>& blocks, int level) {
  return static_cast<int>(blocks[static_cast<std::size_t>(level - 1)].size());
}

}  // namespace

const torch::Tensor& FeaturePyramid::at(TapId id) const {
  auto it = taps.find(id);
  if (it == taps.end()) throw InvalidInputError("pyramid has no tap " + id.name());
  return it->second;
}

void require_multiple_of_16(const torch::Tensor& x, const char* what) {
  const auto h = x.size(-2);
  const auto w = x.size(-1);
  if (h < 16 || w < 16 || h % 16 != 0 || w % 16 != 0) {
    throw ShapeError(std::string(what) + ": dims " + std::to_string(h) + "x" + std::to_string(w) +
                     " are not multiples of 16 (pad first)");
  }
}

BackboneImpl::BackboneImpl(const BackboneConfig& cfg) : cfg_(cfg) {
  const bool pretrained = cfg.kind == BackboneKind::kPretrained;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(cfg.stub_seed);
  int in_ch = pretrained ? 3 : 1;
  for (int b = 0; b < 5; ++b) {
    const int convs = pretrained ? kVggConvs[static_cast<std::size_t>(b)] : cfg.stub_convs.at(static_cast<std::size_t>(b));
    const int width = pretrained ? kVggWidths[static_cast<std::size_t>(b)] : cfg.stub_widths.at(static_cast<std::size_t>(b));
    std::vector<torch::nn::Conv2d> block;
    for (int k = 0; k < convs; ++k) {
      auto opts = torch::nn::Conv2dOptions(in_ch, width, 3).padding(1);
      if (!pretrained) opts.padding_mode(torch::kReplicate);
      auto conv = register_module("conv" + std::to_string(b + 1) + "_" + std::to_string(k + 1), torch::nn::Conv2d(opts));
      if (!pretrained) {
        torch::NoGradGuard guard;
        const double std = std::sqrt(2.0 / (in_ch * 9.0));
        conv->weight.copy_(at::randn(conv->weight.sizes(), gen, torch::kFloat32) * std);
        conv->bias.copy_(at::randn(conv->bias.sizes(), gen, torch::kFloat32) * 0.01);
      }
      block.push_back(conv);
      in_ch = width;
    }
    blocks_.push_back(std::move(block));
  }
  mean_ = register_buffer("mean", torch::tensor({0.485f, 0.456f, 0.406f}).view({1, 3, 1, 1}));
  std_ = register_buffer("std", torch::tensor({0.229f, 0.224f, 0.225f}).view({1, 3, 1, 1}));
  for (auto& p : parameters()) p.set_requires_grad(false);
}

std::array<int, 6> BackboneImpl::tap_channels() const {
  std::array<int, 6> out{};
  for (std::size_t i = 0; i < 5; ++i) out[i] = static_cast<int>(blocks_[i].front()->options.out_channels());
  out[5] = static_cast<int>(blocks_[4].back()->options.out_channels());
  return out;
}

std::map<TapId, torch::Tensor> BackboneImpl::forward(const torch::Tensor& x_in, std::span<const TapId> taps) {
  if (x_in.dim() != 4 || x_in.size(1) != 1) throw ShapeError("backbone input must be N x 1 x H x W");
  require_multiple_of_16(x_in, "feature extraction");
  int deepest = 0;
  for (const auto& t : taps) deepest = std::max(deepest, t.level);

  torch::Tensor x = x_in;
  if (cfg_.kind == BackboneKind::kPretrained) x = (x.expand({-1, 3, -1, -1}) - mean_) / std_;

  std::map<TapId, torch::Tensor> out;
  const bool pre = cfg_.tap_activation == TapActivation::kPre;
  for (int level = 1; level <= deepest; ++level) {
    if (level > 1) x = torch::max_pool2d(x, 2, 2);
    auto& block = blocks_[static_cast<std::size_t>(level - 1)];
    const int last = last_conv_of(blocks_, level);
    for (int k = 1; k <= last; ++k) {
      auto z = block[static_cast<std::size_t>(k - 1)]->forward(x);
      x = torch::relu(z);
      // Conv index 4 at level 5 is "the last conv of the block".
      const int as_tap = (level == 5 && k == last) ? 4 : k;
      for (const auto& t : taps) {
        if (t.level == level && (t.conv == k || t.conv == as_tap)) out[t] = pre ? z : x;
      }
    }
  }
  for (const auto& t : taps) {
    if (!out.count(t)) throw InvalidInputError("backbone has no tap " + t.name());
  }
  return out;
}

FeaturePyramid BackboneImpl::extract_target(const torch::Tensor& x) {
  return FeaturePyramid{forward(x, kTargetTaps), 0};
}

FeaturePyramid BackboneImpl::extract_reference(const torch::Tensor& x) {
  return FeaturePyramid{forward(x, kReferenceTaps), 0};
}

void BackboneImpl::load_weights(const std::string& path, const std::string& expected_checksum) {
  const auto c = read_container(path);
  load_module_blocks(*this, c, "");
  if (!expected_checksum.empty()) {
    const auto got = hex64(parameter_checksum(*this));
    if (got != expected_checksum) {
      throw FormatError("backbone weights checksum " + got + " does not match expected " + expected_checksum);
    }
  }
  for (auto& p : parameters()) p.set_requires_grad(false);
}

namespace {

FeaturePyramid extract_single(Backbone& backbone, const Frame& frame, bool target) {
  torch::NoGradGuard guard;
  auto x = frame.data().unsqueeze(0).unsqueeze(0);
  auto pyr = target ? backbone->extract_target(x) : backbone->extract_reference(x);
  for (auto& [id, t] : pyr.taps) t = t.squeeze(0);
  pyr.source_frame_index = frame.index();
  return pyr;
}

}  // namespace

FeaturePyramid extract_target(Backbone& backbone, const Frame& frame) { return extract_single(backbone, frame, true); }

FeaturePyramid extract_reference(Backbone& backbone, const Frame& frame) {
  return extract_single(backbone, frame, false);
}

}  // namespace vqe
