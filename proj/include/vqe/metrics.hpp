#pragma once

#include <torch/torch.h>

#include <limits>
#include <span>
#include <vector>

#include "vqe/core.hpp"

namespace vqe {

/// Returned by psnr() for identical frames.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) on [0,1] samples. Throws ShapeError on a size mismatch.
double psnr(const Frame& a, const Frame& b);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), k1 = 0.01, k2 = 0.03,
/// dynamic range 1, averaged over the valid (unpadded) window positions.
/// Throws InvalidInputError for frames smaller than the window.
double ssim(const Frame& a, const Frame& b);

struct SequenceScores {
  std::vector<double> psnr, ssim;
  /// Per-frame averages. The PSNR mean is infinite when any frame is identical;
  /// finite_psnr_frames counts the others.
  double mean_psnr = 0, mean_ssim = 0;
  std::size_t finite_psnr_frames = 0;
};

/// Frame-by-frame scores of two equally long sequences, averaged per frame.
SequenceScores score_sequences(std::span<const Frame> a, std::span<const Frame> b);

/// One fixed pixel row from every frame stacked into a T x W image.
/// Needs at least two frames; throws InvalidInputError otherwise or when the
/// row is out of range.
Frame temporal_profile(std::span<const Frame> frames, std::int64_t row);

}  // namespace vqe
