#include "vqe/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vqe {

Frame::Frame(torch::Tensor data, int index) : index_(index) {
  if (!data.defined() || data.dim() != 2) {
    throw InvalidInputError("frame data must be a 2-D tensor");
  }
  if (data.size(0) < 1 || data.size(1) < 1) {
    throw InvalidInputError("frame must be non-empty");
  }
  data = data.detach().to(torch::kFloat32).contiguous();
  if (!torch::isfinite(data).all().item<bool>()) {
    throw InvalidInputError("frame contains non-finite samples");
  }
  if (data.min().item<float>() < 0.0f || data.max().item<float>() > 1.0f) {
    throw InvalidInputError("frame samples outside [0,1]");
  }
  data_ = std::move(data);
}

Frame Frame::from_bytes(std::span<const std::uint8_t> bytes, std::int64_t height, std::int64_t width,
                        int index) {
  if (height < 1 || width < 1 || static_cast<std::int64_t>(bytes.size()) != height * width) {
    throw InvalidInputError("byte plane size does not match " + std::to_string(width) + "x" +
                            std::to_string(height));
  }
  auto t = torch::empty({height, width}, torch::kFloat32);
  auto* out = t.data_ptr<float>();
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = static_cast<float>(bytes[i]) / 255.0f;
  return Frame(std::move(t), index);
}

std::vector<std::uint8_t> Frame::to_bytes() const {
  const auto n = static_cast<std::size_t>(data_.numel());
  std::vector<std::uint8_t> out(n);
  const float* in = data_.data_ptr<float>();
  for (std::size_t i = 0; i < n; ++i) {
    const float v = std::clamp(in[i], 0.0f, 1.0f) * 255.0f;
    out[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

Frame Frame::with_index(int index) const {
  Frame f = *this;
  f.index_ = index;
  return f;
}

Frame frame_from_unclamped(const torch::Tensor& data, int index) {
  auto d = data.detach().to(torch::kFloat32);
  if (!torch::isfinite(d).all().item<bool>()) throw NumericError("non-finite samples in output frame");
  return Frame(d.clamp(0.0, 1.0), index);
}

ClipTriplet::ClipTriplet(Frame prev, Frame cur, Frame next)
    : preceding(std::move(prev)), target(std::move(cur)), succeeding(std::move(next)) {
  for (const Frame* f : {&preceding, &succeeding}) {
    if (f->height() != target.height() || f->width() != target.width()) {
      throw ShapeError("triplet frames differ in size");
    }
  }
}

ClipTriplet make_triplet(std::span<const Frame> frames, std::size_t t) {
  if (frames.empty()) throw InvalidInputError("make_triplet: empty frame sequence");
  if (t >= frames.size()) {
    throw InvalidInputError("make_triplet: index " + std::to_string(t) + " out of range");
  }
  const Frame& cur = frames[t];
  const Frame& prev = t == 0 ? cur : frames[t - 1];
  const Frame& next = t + 1 == frames.size() ? cur : frames[t + 1];
  return ClipTriplet(prev, cur, next);
}

// --- QP -------------------------------------------------------------------

void validate_vocabulary(std::span<const int> vocabulary) {
  if (vocabulary.empty()) throw InvalidInputError("QP vocabulary is empty");
  for (std::size_t i = 1; i < vocabulary.size(); ++i) {
    if (vocabulary[i] <= vocabulary[i - 1]) {
      throw InvalidInputError("QP vocabulary must be strictly ascending");
    }
  }
}

QPCode encode_qp(int value, std::span<const int> vocabulary) {
  validate_vocabulary(vocabulary);
  auto it = std::find(vocabulary.begin(), vocabulary.end(), value);
  if (it == vocabulary.end()) {
    std::ostringstream os;
    os << "unknown QP " << value << " (trained:";
    for (int q : vocabulary) os << ' ' << q;
    os << ')';
    throw UnknownQpError(os.str());
  }
  QPCode code;
  code.value = value;
  code.vocabulary.assign(vocabulary.begin(), vocabulary.end());
  code.one_hot.assign(vocabulary.size(), 0.0f);
  code.one_hot[static_cast<std::size_t>(it - vocabulary.begin())] = 1.0f;
  return code;
}

std::size_t QPCode::position() const {
  auto it = std::find(one_hot.begin(), one_hot.end(), 1.0f);
  if (it == one_hot.end()) throw InvalidInputError("QP one-hot has no hot entry");
  return static_cast<std::size_t>(it - one_hot.begin());
}

int decode_qp(const QPCode& code) { return code.vocabulary.at(code.position()); }

torch::Tensor QPCode::tensor() const {
  return torch::tensor(one_hot, torch::kFloat32).unsqueeze(0);
}

// --- padding ----------------------------------------------------------------

std::int64_t round_up(std::int64_t value, std::int64_t m) { return (value + m - 1) / m * m; }

namespace {

// Mirror index without repeating the edge sample; period 2(n-1).
std::int64_t mirror(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

torch::Tensor mirror_indices(std::int64_t n, std::int64_t target) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(target));
  for (std::int64_t i = 0; i < target; ++i) idx[static_cast<std::size_t>(i)] = mirror(i, n);
  return torch::tensor(idx, torch::kLong);
}

}  // namespace

torch::Tensor reflect_pad_to(const torch::Tensor& x, std::int64_t height, std::int64_t width) {
  const auto h = x.size(-2);
  const auto w = x.size(-1);
  if (height < h || width < w) throw ShapeError("reflect_pad_to cannot shrink");
  if (height == h && width == w) return x;
  auto rows = mirror_indices(h, height).to(x.device());
  auto cols = mirror_indices(w, width).to(x.device());
  return x.index_select(-2, rows).index_select(-1, cols);
}

std::pair<Frame, CropRecord> pad_to_multiple(const Frame& frame, std::int64_t m) {
  if (m < 1) throw InvalidInputError("pad multiple must be >= 1");
  CropRecord rec{frame.height(), frame.width()};
  const auto h = round_up(frame.height(), m);
  const auto w = round_up(frame.width(), m);
  if (h == frame.height() && w == frame.width()) return {frame, rec};
  return {Frame(reflect_pad_to(frame.data(), h, w), frame.index()), rec};
}

Frame crop(const Frame& frame, const CropRecord& record) {
  if (record.height > frame.height() || record.width > frame.width()) {
    throw ShapeError("crop record larger than frame");
  }
  if (record.identity(frame.height(), frame.width())) return frame;
  using torch::indexing::Slice;
  return Frame(frame.data().index({Slice(0, record.height), Slice(0, record.width)}).contiguous(),
               frame.index());
}

// --- ablation -----------------------------------------------------------------

AblationMask AblationMask::row(char letter) {
  AblationMask m;
  m.preceding_frame = false;
  m.succeeding_frame = false;
  m.attention_block.fill(false);
  m.first_branch = false;
  m.qp_adaptation = false;
  const auto pos = kAblationRows.find(letter);
  if (pos == std::string_view::npos) {
    throw ConfigError(std::string("unknown ablation row '") + letter + "' (expected A..I)");
  }
  // Each row adds one component to the previous one.
  const int r = static_cast<int>(pos);
  if (r >= 1) m.qp_adaptation = true;
  if (r >= 2) m.preceding_frame = true, m.attention_block[0] = true;
  if (r >= 3) m.attention_block[2] = true;
  if (r >= 4) m.attention_block[4] = true;
  if (r >= 5) m.first_branch = true;
  if (r >= 6) m.attention_block[1] = true;
  if (r >= 7) m.succeeding_frame = true, m.attention_block[3] = true;
  if (r >= 8) m.attention_block[5] = true;
  return m;
}

bool AblationMask::any_block() const {
  return std::any_of(attention_block.begin(), attention_block.end(), [](bool b) { return b; });
}

bool AblationMask::any_block_in_branch(int branch) const {
  for (int b = 1; b <= kAttentionBlocks; ++b) {
    if (block(b) && block_branch(b) == branch) return true;
  }
  return false;
}

int AblationMask::block_reference(int id) const {
  if (block_branch(id) == 2) return -1;
  return succeeding_frame ? +1 : -1;
}

void AblationMask::validate() const {
  for (int b = 1; b <= kAttentionBlocks; ++b) {
    if (!block(b)) continue;
    const std::string name = "attention block " + std::to_string(b);
    if (block_branch(b) == 2 && !preceding_frame) {
      throw ConfigError(name + " requires the preceding frame");
    }
    if (block_branch(b) == 1) {
      if (!first_branch) throw ConfigError(name + " requires the first branch");
      if (!preceding_frame && !succeeding_frame) {
        throw ConfigError(name + " requires a reference frame (succeeding or preceding)");
      }
    }
  }
  if (first_branch && !preceding_frame && !succeeding_frame) {
    throw ConfigError("first branch requires a reference frame (succeeding or preceding)");
  }
  if (succeeding_frame && !any_block_in_branch(1)) {
    throw ConfigError("succeeding frame requires an attention block of the first branch (2, 4 or 6)");
  }
}

std::string AblationMask::describe() const {
  std::ostringstream os;
  os << "prev=" << preceding_frame << " next=" << succeeding_frame << " blocks=";
  for (int b = 1; b <= kAttentionBlocks; ++b) os << (block(b) ? '1' : '0');
  os << " branch1=" << first_branch << " qp=" << qp_adaptation;
  return os.str();
}

}  // namespace vqe
