#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vqe/core.hpp"

namespace vqe {

enum class ContainerKind { kY4M, kRaw420, kRaw400 };

struct VideoFormat {
  ContainerKind kind = ContainerKind::kY4M;
  /// Required for raw files; optional for Y4M, where a non-zero value must match the header.
  std::int64_t width = 0;
  std::int64_t height = 0;
};

ContainerKind parse_container_kind(const std::string& s);
std::string container_kind_name(ContainerKind k);
/// Guesses the container from the file extension (.y4m, else raw 4:2:0).
VideoFormat format_for_path(const std::filesystem::path& path, std::int64_t width = 0, std::int64_t height = 0);

/// Luma frames plus opaque chroma planes carried through unchanged.
struct VideoSequence {
  std::int64_t width = 0;
  std::int64_t height = 0;
  bool has_chroma = true;  // false for 4:0:0 / Cmono
  std::vector<Frame> luma;
  std::vector<std::vector<std::uint8_t>> chroma;  // Cb then Cr, one entry per frame
  /// Y4M stream header tokens other than W/H/C (frame rate, aspect, ...).
  std::string y4m_params = "F25:1 Ip A1:1";

  std::size_t size() const { return luma.size(); }
  /// Same stream with different luma planes (chroma copied).
  VideoSequence with_luma(std::vector<Frame> frames) const;
};

/// Throws IoError (missing/truncated file, with frame index) or FormatError
/// (bad header, unsupported chroma layout, dims conflicting with the header).
VideoSequence read_sequence(const std::filesystem::path& path, const VideoFormat& format);
void write_sequence(const std::filesystem::path& path, const VideoSequence& seq, ContainerKind kind);

// --- dataset -------------------------------------------------------------

/// One raw sequence and its compressed versions at several QPs.
struct SequencePair {
  std::string name;
  ContainerKind kind = ContainerKind::kY4M;
  std::int64_t width = 0, height = 0;
  std::int64_t frame_count = 0;  // 0 = take from the files
  std::filesystem::path raw_path;
  std::map<int, std::filesystem::path> compressed_path_per_qp;
};

// Manifest: one sequence per line, '#' starts a comment.
//
//   sequence <name> <y4m|yuv420|yuv400> <width> <height> <frames> <raw> <qp>=<compressed> ...
//
// Width/height/frames may be 0 to take them from the files (Y4M only for dims).
// Relative paths are resolved against the manifest's directory.
std::vector<SequencePair> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<SequencePair>& pairs);

struct LoadedPair {
  SequencePair info;
  VideoSequence raw;
  std::map<int, VideoSequence> compressed;
};

/// Reads raw and compressed streams for the requested QPs and checks that
/// dims and frame counts agree. A missing QP stream is a ConfigError.
LoadedPair load_pair(const SequencePair& pair, const std::vector<int>& qps);

struct TrainingSample {
  ClipTriplet compressed;
  Frame raw_target;
  QPCode qp;
  std::string source;
  int frame = 0;
  std::int64_t crop_row = 0, crop_col = 0;
};

struct SampleKey {
  std::size_t pair = 0;
  int qp = 0;
  int frame = 0;
  std::int64_t row = 0, col = 0;
  auto operator<=>(const SampleKey&) const = default;
};

/// All (sequence, frame, crop, QP) combinations on a non-overlapping crop grid,
/// in a seeded shuffled order. Partial crops at the right/bottom are dropped.
class SampleSet {
 public:
  SampleSet(std::vector<LoadedPair> pairs, std::vector<int> qps, std::vector<int> vocabulary, std::int64_t crop,
            std::uint64_t seed);

  std::size_t size() const { return keys_.size(); }
  const std::vector<SampleKey>& keys() const { return keys_; }
  TrainingSample get(std::size_t i) const;
  TrainingSample materialize(const SampleKey& key) const;
  /// Reorders the keys with a new seed (a permutation of the same multiset).
  void reshuffle(std::uint64_t seed);
  std::int64_t crop() const { return crop_; }
  const std::vector<int>& vocabulary() const { return vocab_; }

 private:
  std::vector<LoadedPair> pairs_;
  std::vector<int> qps_, vocab_;
  std::int64_t crop_;
  std::vector<SampleKey> keys_;
};

/// Sample keys for the given pairs without loading any pixels.
std::vector<SampleKey> enumerate_samples(const std::vector<LoadedPair>& pairs, const std::vector<int>& qps,
                                         std::int64_t crop);

/// Endless sample stream over a SampleSet. Each epoch is reshuffled with
/// seed + epoch. Safe for concurrent consumers: every index is handed out once
/// per epoch.
class SampleStream {
 public:
  SampleStream(SampleSet& set, std::uint64_t seed);
  TrainingSample next();
  std::vector<TrainingSample> next_batch(std::size_t n);
  int epoch() const;

 private:
  SampleSet& set_;
  std::uint64_t seed_;
  mutable std::mutex mu_;
  std::size_t pos_ = 0;
  int epoch_ = 0;
};

// --- synthetic stand-in for codec output -------------------------------------

/// Smooth random texture with edges, translating by a fixed sub-frame motion.
/// Not real video; used for desk-scale tests.
VideoSequence synthetic_sequence(std::int64_t width, std::int64_t height, int frames, std::uint64_t seed);

/// Blur + blockwise quantization whose strength grows with the pseudo-QP.
/// A stand-in for codec degradation, not equivalent to it.
Frame synthetic_degrade(const Frame& frame, int pseudo_qp);
VideoSequence synthetic_degrade(const VideoSequence& seq, int pseudo_qp);

/// Writes raw + degraded Y4M files and a manifest into `dir`; returns the manifest path.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, int sequences, std::int64_t width,
                                             std::int64_t height, int frames, const std::vector<int>& qps,
                                             std::uint64_t seed);

}  // namespace vqe
