#include "vqe/metrics.hpp"

#include <cmath>

namespace vqe {

namespace {

void require_same_size(const Frame& a, const Frame& b, const char* what) {
  if (a.empty() || b.empty()) throw InvalidInputError(std::string(what) + ": empty frame");
  if (a.height() != b.height() || a.width() != b.width())
    throw ShapeError(std::string(what) + ": frames differ in size");
}

torch::Tensor gaussian_window() {
  auto x = torch::arange(-5, 6, torch::kFloat64);
  auto g = torch::exp(-x.pow(2) / (2 * 1.5 * 1.5));
  g = g / g.sum();
  return (g.unsqueeze(1) * g.unsqueeze(0)).view({1, 1, 11, 11});
}

}  // namespace

double psnr(const Frame& a, const Frame& b) {
  require_same_size(a, b, "psnr");
  torch::NoGradGuard guard;
  const double mse = (a.data().to(torch::kFloat64) - b.data().to(torch::kFloat64)).pow(2).mean().item<double>();
  if (mse == 0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Frame& a, const Frame& b) {
  require_same_size(a, b, "ssim");
  if (a.height() < 11 || a.width() < 11) throw InvalidInputError("ssim needs frames of at least 11x11");
  torch::NoGradGuard guard;
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  static const auto window = gaussian_window();
  auto x = a.data().to(torch::kFloat64).view({1, 1, a.height(), a.width()});
  auto y = b.data().to(torch::kFloat64).view({1, 1, b.height(), b.width()});
  auto blur = [&](const torch::Tensor& t) { return torch::conv2d(t, window); };
  auto mx = blur(x), my = blur(y);
  auto sxx = blur(x * x) - mx * mx;
  auto syy = blur(y * y) - my * my;
  auto sxy = blur(x * y) - mx * my;
  auto map = ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean().item<double>();
}

SequenceScores score_sequences(std::span<const Frame> a, std::span<const Frame> b) {
  if (a.size() != b.size()) throw ShapeError("sequences differ in frame count");
  if (a.empty()) throw InvalidInputError("no frames to score");
  SequenceScores s;
  s.psnr.resize(a.size());
  s.ssim.resize(a.size());
  at::parallel_for(0, static_cast<std::int64_t>(a.size()), 1, [&](std::int64_t lo, std::int64_t hi) {
    for (auto i = static_cast<std::size_t>(lo); i < static_cast<std::size_t>(hi); ++i) {
      s.psnr[i] = psnr(a[i], b[i]);
      s.ssim[i] = ssim(a[i], b[i]);
    }
  });
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.mean_psnr += s.psnr[i];
    s.mean_ssim += s.ssim[i];
    if (std::isfinite(s.psnr[i])) ++s.finite_psnr_frames;
  }
  s.mean_psnr /= static_cast<double>(a.size());
  s.mean_ssim /= static_cast<double>(a.size());
  return s;
}

Frame temporal_profile(std::span<const Frame> frames, std::int64_t row) {
  if (frames.size() < 2) throw InvalidInputError("temporal profile needs at least two frames");
  const auto h = frames[0].height(), w = frames[0].width();
  if (row < 0 || row >= h)
    throw InvalidInputError("profile row " + std::to_string(row) + " outside 0.." + std::to_string(h - 1));
  std::vector<torch::Tensor> rows;
  for (const auto& f : frames) {
    if (f.height() != h || f.width() != w) throw ShapeError("temporal profile: frames differ in size");
    rows.push_back(f.data()[row]);
  }
  return Frame(torch::stack(rows).contiguous());
}

}  // namespace vqe
