#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vqe/core.hpp"

namespace vqe {

enum class BackboneKind { kPretrained, kTestStub };
enum class TapActivation { kPost, kPre };

struct BackboneConfig {
  BackboneKind kind = BackboneKind::kTestStub;
  /// Pretrained weights in the checkpoint container format (tools/export_vgg19.py).
  std::string weights_path;
  /// Optional hex FNV-1a 64 digest of the weight payload; checked on load when set.
  std::string weights_checksum;
  TapActivation tap_activation = TapActivation::kPost;
  /// Test-stub geometry: output width and conv count of each of the five blocks.
  std::vector<int> stub_widths{16, 32, 64, 64, 64};
  std::vector<int> stub_convs{1, 1, 1, 1, 2};
  std::uint64_t stub_seed = 7;
};

struct AttentionConfig {
  int downsample_factor = 1;
  /// Query/key projection width; 0 means "same as the tap".
  int projection_channels = 0;
  bool scale_logits = false;
};

struct DecoderConfig {
  /// Output widths of the level 5..1 convolutions; empty derives them from the taps.
  std::vector<int> widths;
};

struct AdaptConfig {
  std::vector<int> stage_widths{64, 64, 64};
  /// Predict x_hat - x_t (true) or x_hat directly (false).
  bool residual = true;
};

struct DiscriminatorConfig {
  std::vector<int> widths{64, 128, 256, 512};
  std::vector<int> strides{2, 2, 2, 1};
  int kernel = 4;
  bool instance_norm = false;
  /// Concatenate the compressed target to the judged image.
  bool conditional = false;
  /// Indices of hidden layers used by the feature-matching loss; empty = all.
  std::vector<int> fm_layers;
};

struct LossWeights {
  double alpha = 10.0;
  double beta = 10.0;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 32;
  int steps = 200;
  int checkpoint_interval = 100;
  double grad_clip = 0.0;  // 0 disables clipping
};

struct ModelConfig {
  std::vector<int> qp_vocabulary{22, 27, 32, 37};
  AblationMask ablation;
  BackboneConfig backbone;
  AttentionConfig attention;
  DecoderConfig decoder;
  AdaptConfig adapt;
  DiscriminatorConfig discriminator;
  LossWeights loss_weights;
  TrainConfig train;
  std::optional<int> tile_size;
  int tile_overlap = 0;
  std::uint64_t seed = 0;

  /// Throws ConfigError on the first invalid field.
  void validate() const;

  /// Channel widths of taps (1,1)..(5,1) and (5,4) for the configured backbone.
  std::vector<int> tap_channels() const;
  /// Decoder widths after derivation from the taps.
  std::vector<int> decoder_widths() const;

  /// Small widths suitable for unit tests and desk-scale runs.
  static ModelConfig tiny();
};

nlohmann::json to_json(const ModelConfig& cfg);
/// Unknown keys are rejected with ConfigError.
ModelConfig config_from_json(const nlohmann::json& j);
ModelConfig load_config(const std::filesystem::path& path);
void save_config(const ModelConfig& cfg, const std::filesystem::path& path);

}  // namespace vqe
