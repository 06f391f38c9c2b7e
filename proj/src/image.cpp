#include "vqe/image.hpp"

#include <png.h>

#include <cstring>
#include <vector>

namespace vqe {

void write_png(const std::filesystem::path& path, const torch::Tensor& image) {
  torch::Tensor hwc;
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (image.dim() == 2) {
    hwc = image;
    img.format = PNG_FORMAT_GRAY;
  } else if (image.dim() == 3 && image.size(0) == 3) {
    hwc = image.permute({1, 2, 0});
    img.format = PNG_FORMAT_RGB;
  } else {
    throw ShapeError("write_png expects H x W or 3 x H x W");
  }
  img.height = static_cast<png_uint_32>(hwc.size(0));
  img.width = static_cast<png_uint_32>(hwc.size(1));
  auto bytes = torch::round(hwc.detach().to(torch::kFloat32).clamp(0, 1) * 255).to(torch::kUInt8).contiguous();
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, bytes.data_ptr<std::uint8_t>(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + img.message);
}

void write_png(const std::filesystem::path& path, const Frame& frame) { write_png(path, frame.data()); }

Frame read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  return Frame::from_bytes(buf, img.height, img.width);
}

torch::Tensor to_rgb(const torch::Tensor& grey) { return grey.unsqueeze(0).expand({3, grey.size(0), grey.size(1)}).clone(); }

void draw_box(torch::Tensor& rgb, std::int64_t row, std::int64_t col, std::int64_t h, std::int64_t w,
              std::array<float, 3> color, std::int64_t thickness) {
  const auto H = rgb.size(1), W = rgb.size(2);
  auto fill = [&](std::int64_t r0, std::int64_t r1, std::int64_t c0, std::int64_t c1) {
    r0 = std::clamp<std::int64_t>(r0, 0, H);
    r1 = std::clamp<std::int64_t>(r1, 0, H);
    c0 = std::clamp<std::int64_t>(c0, 0, W);
    c1 = std::clamp<std::int64_t>(c1, 0, W);
    if (r0 >= r1 || c0 >= c1) return;
    for (int ch = 0; ch < 3; ++ch) rgb[ch].slice(0, r0, r1).slice(1, c0, c1).fill_(color[static_cast<std::size_t>(ch)]);
  };
  fill(row - thickness, row, col - thickness, col + w + thickness);
  fill(row + h, row + h + thickness, col - thickness, col + w + thickness);
  fill(row, row + h, col - thickness, col);
  fill(row, row + h, col + w, col + w + thickness);
}

}  // namespace vqe
