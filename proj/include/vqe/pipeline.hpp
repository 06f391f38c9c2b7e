#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vqe/attention.hpp"
#include "vqe/config.hpp"
#include "vqe/core.hpp"
#include "vqe/decoder.hpp"
#include "vqe/discriminator.hpp"
#include "vqe/features.hpp"
#include "vqe/qpadapt.hpp"

namespace vqe {

/// Intermediate results of one generator pass, for inspection tools.
struct GeneratorTrace {
  FeaturePyramid target;
  std::optional<FeaturePyramid> preceding;
  std::optional<FeaturePyramid> succeeding;
  std::map<int, torch::Tensor> attention;  // keyed by block id 1..6
  torch::Tensor merged;
};

/// The enhancement network f(x_{t-1}, x_t, x_{t+1}, q).
///
/// Only components enabled by the ablation mask are constructed, so parameter
/// counts reflect the configuration. The frozen backbone is held outside the
/// registered submodules: it is neither trained nor checkpointed.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const ModelConfig& cfg);

  /// Frames N x 1 x H x W with H, W multiples of 16; one_hot N x |vocab|.
  /// Returns the enhanced target before clamping.
  torch::Tensor forward(const torch::Tensor& prev, const torch::Tensor& cur, const torch::Tensor& next,
                        const torch::Tensor& one_hot, GeneratorTrace* trace = nullptr);

  Backbone& backbone() { return backbone_; }
  const ModelConfig& config() const { return cfg_; }
  void set_attention_downsample(int factor);
  /// Upper bound on how far (in pixels) an input change can move the output
  /// when attention is disabled, rounded up to a multiple of 16.
  std::int64_t receptive_radius() const;

  std::map<int, AttentionBlock> attention;  // block id -> block
  DecoderBranch first_branch{nullptr};
  DecoderBranch second_branch{nullptr};
  QPAdapt adapt{nullptr};

 private:
  ModelConfig cfg_;
  Backbone backbone_{nullptr};
};
TORCH_MODULE(Generator);

/// Generator plus discriminator built from one config with deterministic
/// initialisation (torch seeded with config.seed).
struct Model {
  ModelConfig config;
  Generator generator{nullptr};
  PatchDiscriminator discriminator{nullptr};
};

Model build_model(const ModelConfig& cfg);

/// Enhance one target frame. Frames are reflect-padded to multiples of 16 and
/// the result cropped back; the output is clamped to [0,1].
Frame enhance_frame(const ClipTriplet& triplet, const QPCode& qp, Generator& generator);

struct TileRect {
  std::int64_t row = 0, col = 0, height = 0, width = 0;
};

/// Non-overlapping grid over an H x W frame (H, W, tile multiples of 16).
/// Edge tiles are smaller when the tile does not divide the frame.
std::vector<TileRect> plan_tiles(std::int64_t height, std::int64_t width, std::int64_t tile);

inline constexpr int kAutoContext = -1;

struct TilingOptions {
  std::optional<int> tile_size;
  /// > 0: tiles are enlarged by this margin and blended with linear feathering.
  int overlap = 0;
  /// > 0: tiles are enlarged by this margin for context only; each output pixel
  /// still comes from exactly one tile core. kAutoContext uses the generator's
  /// receptive radius. Mutually exclusive with overlap.
  int context = 0;
};

/// Sliding-window enhancement of every frame, optionally tile by tile.
/// Throws ConfigError when the tile size is not a positive multiple of 16.
std::vector<Frame> enhance_sequence(std::span<const Frame> frames, const QPCode& qp, Generator& generator,
                                    const TilingOptions& tiling = {});

enum class CountGranularity { kComponent, kTensor };

/// Learnable parameter counts. Component keys: "attention", "decoder.first_branch",
/// "decoder.second_branch", "qp_adapt.gates", "qp_adapt.convs", "discriminator",
/// "generator" (all learnable generator parameters) and "backbone (frozen)".
std::map<std::string, std::int64_t> count_parameters(Model& model,
                                                     CountGranularity granularity = CountGranularity::kComponent);
std::int64_t count_module_parameters(const torch::nn::Module& module);

// --- checkpoints ------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, Model& model, int step = 0);
struct LoadedCheckpoint {
  Model model;
  int step = 0;
};
/// Rebuilds the model from the embedded config and loads every block.
/// Throws FormatError when blocks are missing or mis-shaped.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vqe
