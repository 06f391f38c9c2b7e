#pragma once

#include <torch/torch.h>

#include <array>
#include <compare>
#include <map>
#include <span>
#include <string>

#include "vqe/config.hpp"
#include "vqe/core.hpp"

namespace vqe {

/// Backbone tap: conv `conv` of block `level`. Conv index 4 denotes the last
/// convolution of block 5 (conv5_4 for VGG-19).
struct TapId {
  int level = 1;
  int conv = 1;
  auto operator<=>(const TapId&) const = default;
  std::string name() const { return "f" + std::to_string(level) + "_" + std::to_string(conv); }
};

inline constexpr std::array<TapId, 6> kTargetTaps{{{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}, {5, 4}}};
inline constexpr std::array<TapId, 3> kReferenceTaps{{{3, 1}, {4, 1}, {5, 1}}};

/// Tap activations of one frame (or a batch of frames), each N x C x h x w.
struct FeaturePyramid {
  std::map<TapId, torch::Tensor> taps;
  int source_frame_index = 0;

  const torch::Tensor& at(TapId id) const;
  bool has(TapId id) const { return taps.count(id) != 0; }
};

/// Frozen multi-tap feature extractor.
///
/// Two variants share the tap geometry: the 19-layer ImageNet network (luma
/// replicated to three channels, ImageNet mean/std, zero padding) and a
/// seeded random "test-stub" with replicate padding that needs no download.
/// Parameters never require gradients; gradients still flow to the input,
/// which the perceptual loss relies on.
class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(const BackboneConfig& cfg);

  /// x is N x 1 x H x W with H, W multiples of 16. Returns the requested taps.
  std::map<TapId, torch::Tensor> forward(const torch::Tensor& x, std::span<const TapId> taps);

  FeaturePyramid extract_target(const torch::Tensor& x);
  FeaturePyramid extract_reference(const torch::Tensor& x);

  /// Channel count of each target tap, in kTargetTaps order.
  std::array<int, 6> tap_channels() const;

  /// Loads pretrained weights from a container file (see checkpoint.hpp).
  void load_weights(const std::string& path, const std::string& expected_checksum);

  const BackboneConfig& config() const { return cfg_; }

 private:
  BackboneConfig cfg_;
  std::vector<std::vector<torch::nn::Conv2d>> blocks_;
  torch::Tensor mean_, std_;
};
TORCH_MODULE(Backbone);

/// Spec-level helpers on single frames. Dims must already be multiples of 16.
FeaturePyramid extract_target(Backbone& backbone, const Frame& frame);
FeaturePyramid extract_reference(Backbone& backbone, const Frame& frame);

/// Throws ShapeError unless both trailing dims are multiples of 16.
void require_multiple_of_16(const torch::Tensor& x, const char* what);

}  // namespace vqe
