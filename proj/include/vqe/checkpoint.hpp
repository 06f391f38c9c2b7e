#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vqe {

// Container layout (all integers little-endian):
//
//   magic        8 bytes  "VQECKPT\0"
//   version      u32      kContainerVersion
//   config_len   u64      followed by config_len bytes of UTF-8 JSON
//   block_count  u32
//   per block:   u32 name_len, name bytes, u32 ndim, u64 dims[ndim],
//                u64 offset (bytes, relative to the start of the data section)
//   data section float32 little-endian values of every block, in manifest order

inline constexpr char kContainerMagic[8] = {'V', 'Q', 'E', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kContainerVersion = 1;

struct TensorBlock {
  std::string name;
  torch::Tensor value;  // float32, contiguous
};

struct Container {
  std::string config_json;
  std::vector<TensorBlock> blocks;

  const TensorBlock* find(const std::string& name) const;
};

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

/// Parameters and buffers of a module as named blocks, in registration order.
std::vector<TensorBlock> module_blocks(const torch::nn::Module& module, const std::string& prefix);
/// Copies matching blocks into the module. Every parameter and buffer must be
/// present with the same shape; otherwise throws FormatError.
void load_module_blocks(torch::nn::Module& module, const Container& c, const std::string& prefix);

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
/// FNV-1a over the float32 bytes of every parameter, in registration order.
std::uint64_t parameter_checksum(const torch::nn::Module& module);
std::string hex64(std::uint64_t v);

}  // namespace vqe
