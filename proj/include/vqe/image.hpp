#pragma once

#include <torch/torch.h>

#include <filesystem>

#include "vqe/core.hpp"

namespace vqe {

/// Writes an H x W (grey) or 3 x H x W (RGB) tensor with values in [0,1] as 8-bit PNG.
void write_png(const std::filesystem::path& path, const torch::Tensor& image);
void write_png(const std::filesystem::path& path, const Frame& frame);

/// Reads any PNG and converts it to an 8-bit grey Frame.
Frame read_png(const std::filesystem::path& path);

/// Grey H x W in [0,1] to 3 x H x W.
torch::Tensor to_rgb(const torch::Tensor& grey);

/// Outlines the rectangle [row, row+h) x [col, col+w) on a 3 x H x W image in place.
void draw_box(torch::Tensor& rgb, std::int64_t row, std::int64_t col, std::int64_t h, std::int64_t w,
              std::array<float, 3> color, std::int64_t thickness = 1);

}  // namespace vqe
