#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vqe/errors.hpp"

namespace vqe {

/// A single luminance plane with samples normalized to [0,1].
///
/// The underlying tensor is H x W float32 and contiguous. A Frame is treated
/// as immutable: accessors hand out the shared tensor and callers must not
/// write through it.
class Frame {
 public:
  Frame() = default;
  /// Validates shape (2-D), finiteness and range. Throws InvalidInputError.
  explicit Frame(torch::Tensor data, int index = 0);

  /// 8-bit samples divided by 255.
  static Frame from_bytes(std::span<const std::uint8_t> bytes, std::int64_t height, std::int64_t width,
                          int index = 0);
  /// Clamps, scales by 255 and rounds half away from zero.
  std::vector<std::uint8_t> to_bytes() const;

  const torch::Tensor& data() const noexcept { return data_; }
  std::int64_t height() const { return data_.size(0); }
  std::int64_t width() const { return data_.size(1); }
  int index() const noexcept { return index_; }
  bool empty() const noexcept { return !data_.defined(); }

  Frame with_index(int index) const;

 private:
  torch::Tensor data_;
  int index_ = 0;
};

/// Clamp a tensor into [0,1] and wrap it as a Frame.
Frame frame_from_unclamped(const torch::Tensor& data, int index = 0);

/// (x_{t-1}, x_t, x_{t+1}) window for one target frame.
struct ClipTriplet {
  Frame preceding;
  Frame target;
  Frame succeeding;

  ClipTriplet() = default;
  ClipTriplet(Frame prev, Frame cur, Frame next);
};

/// Sliding-window neighbourhood of frame t. At either sequence end the
/// missing neighbour is a copy of the target.
ClipTriplet make_triplet(std::span<const Frame> frames, std::size_t t);

/// A quantization parameter encoded over an ordered vocabulary of trained QPs.
struct QPCode {
  int value = 0;
  std::vector<int> vocabulary;
  std::vector<float> one_hot;

  std::size_t position() const;
  torch::Tensor tensor() const;  // 1 x |vocab| float32
};

/// Throws InvalidInputError for an empty/unsorted/duplicated vocabulary and
/// UnknownQpError when value is not in it. There is no nearest-QP fallback.
QPCode encode_qp(int value, std::span<const int> vocabulary);
int decode_qp(const QPCode& code);
void validate_vocabulary(std::span<const int> vocabulary);

struct CropRecord {
  std::int64_t height = 0;
  std::int64_t width = 0;
  bool identity(std::int64_t h, std::int64_t w) const { return h == height && w == width; }
};

/// Smallest multiples of m covering each side, filled by mirror reflection
/// (edge sample not repeated) along the bottom and right borders.
std::pair<Frame, CropRecord> pad_to_multiple(const Frame& frame, std::int64_t m);
Frame crop(const Frame& frame, const CropRecord& record);

/// Tensor variant used internally: pads the last two dims of an N-D tensor.
torch::Tensor reflect_pad_to(const torch::Tensor& x, std::int64_t height, std::int64_t width);
std::int64_t round_up(std::int64_t value, std::int64_t m);

// --- ablation ------------------------------------------------------------

inline constexpr int kAttentionBlocks = 6;

/// Branch that consumes the output of an attention block (1-based block id).
/// Blocks 1/3/5 feed the second (preceding-frame) branch, 2/4/6 the first.
constexpr int block_branch(int block) { return block % 2 == 1 ? 2 : 1; }
/// Backbone level attended by a block: 1,2 -> 5; 3,4 -> 4; 5,6 -> 3.
constexpr int block_level(int block) { return 5 - (block - 1) / 2; }
constexpr int block_for(int branch, int level) { return (5 - level) * 2 + (branch == 2 ? 1 : 2); }

/// Component switches. Target frame, feature extraction and the second
/// branch are not switchable.
struct AblationMask {
  bool preceding_frame = true;
  bool succeeding_frame = true;
  std::array<bool, kAttentionBlocks> attention_block{true, true, true, true, true, true};
  bool first_branch = true;
  bool qp_adaptation = true;

  static AblationMask full() { return {}; }
  /// Ablation ladder rows 'A'..'I'. Throws ConfigError for other letters.
  static AblationMask row(char letter);

  bool block(int id) const { return attention_block.at(static_cast<std::size_t>(id - 1)); }
  bool any_block() const;
  bool any_block_in_branch(int branch) const;

  /// Reference frame used by a block: +1 succeeding, -1 preceding.
  /// First-branch blocks fall back to the preceding frame while the
  /// succeeding frame is disabled.
  int block_reference(int id) const;

  /// Throws ConfigError naming the first violated dependency.
  void validate() const;
  std::string describe() const;

  bool operator==(const AblationMask&) const = default;
};

inline constexpr std::string_view kAblationRows = "ABCDEFGHI";

}  // namespace vqe
