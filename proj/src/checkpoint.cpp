#include "vqe/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vqe/errors.hpp"

namespace vqe {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("truncated container reading " + what);
  return v;
}

std::string get_string(std::istream& in, std::uint64_t n, const std::string& what) {
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw FormatError("truncated container reading " + what);
  }
  return s;
}

}  // namespace

const TensorBlock* Container::find(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kContainerMagic, sizeof(kContainerMagic));
  put<std::uint32_t>(out, kContainerVersion);
  put<std::uint64_t>(out, c.config_json.size());
  out.write(c.config_json.data(), static_cast<std::streamsize>(c.config_json.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.blocks.size()));
  std::uint64_t offset = 0;
  for (const auto& b : c.blocks) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.value.dim()));
    for (auto d : b.value.sizes()) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    put<std::uint64_t>(out, offset);
    offset += static_cast<std::uint64_t>(b.value.numel()) * sizeof(float);
  }
  for (const auto& b : c.blocks) {
    auto v = b.value.detach().to(torch::kFloat32).contiguous();
    out.write(reinterpret_cast<const char*>(v.data_ptr<float>()),
              static_cast<std::streamsize>(v.numel() * sizeof(float)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kContainerMagic, 8) != 0) {
    throw FormatError(path.string() + " is not a checkpoint container");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kContainerVersion) {
    throw FormatError("unsupported container version " + std::to_string(version));
  }
  Container c;
  const auto cfg_len = get<std::uint64_t>(in, "config length");
  c.config_json = get_string(in, cfg_len, "config");
  const auto count = get<std::uint32_t>(in, "block count");
  struct Entry {
    std::string name;
    std::vector<std::int64_t> dims;
    std::uint64_t offset;
  };
  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name = get_string(in, get<std::uint32_t>(in, "name length"), "name");
    const auto ndim = get<std::uint32_t>(in, "ndim");
    for (std::uint32_t d = 0; d < ndim; ++d) e.dims.push_back(static_cast<std::int64_t>(get<std::uint64_t>(in, "dim")));
    e.offset = get<std::uint64_t>(in, "offset");
    entries.push_back(std::move(e));
  }
  const auto data_start = in.tellg();
  for (auto& e : entries) {
    auto t = torch::empty(e.dims, torch::kFloat32);
    in.seekg(data_start + static_cast<std::streamoff>(e.offset));
    if (t.numel() > 0 &&
        !in.read(reinterpret_cast<char*>(t.data_ptr<float>()), static_cast<std::streamsize>(t.numel() * sizeof(float)))) {
      throw FormatError("truncated data for block " + e.name);
    }
    c.blocks.push_back({std::move(e.name), std::move(t)});
  }
  return c;
}

std::vector<TensorBlock> module_blocks(const torch::nn::Module& module, const std::string& prefix) {
  std::vector<TensorBlock> out;
  for (const auto& p : module.named_parameters(true)) {
    out.push_back({prefix + p.key(), p.value().detach().to(torch::kFloat32).contiguous()});
  }
  for (const auto& b : module.named_buffers(true)) {
    out.push_back({prefix + b.key(), b.value().detach().to(torch::kFloat32).contiguous()});
  }
  return out;
}

void load_module_blocks(torch::nn::Module& module, const Container& c, const std::string& prefix) {
  torch::NoGradGuard guard;
  auto assign = [&](const std::string& key, torch::Tensor& dst) {
    const auto* b = c.find(prefix + key);
    if (!b) throw FormatError("checkpoint missing block " + prefix + key);
    if (b->value.sizes() != dst.sizes()) {
      std::ostringstream os;
      os << "block " << prefix << key << " has shape " << b->value.sizes() << ", expected " << dst.sizes();
      throw FormatError(os.str());
    }
    dst.copy_(b->value);
  };
  for (auto& p : module.named_parameters(true)) assign(p.key(), p.value());
  for (auto& b : module.named_buffers(true)) assign(b.key(), b.value());
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t parameter_checksum(const torch::nn::Module& module) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : module.parameters(true)) {
    auto v = p.detach().to(torch::kFloat32).contiguous();
    const auto* data = reinterpret_cast<const std::uint8_t*>(v.data_ptr<float>());
    h = fnv1a({data, static_cast<std::size_t>(v.numel()) * sizeof(float)}, h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace vqe
