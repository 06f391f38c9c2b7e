#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include <cstring>

#include "vqe/config.hpp"
#include "vqe/data.hpp"
#include "vqe/metrics.hpp"
#include "vqe/pipeline.hpp"

namespace py = pybind11;
using namespace vqe;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Frame to_frame(const FloatArray& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  auto t = torch::from_blob(const_cast<float*>(a.data()), {a.shape(0), a.shape(1)}, torch::kFloat32).clone();
  return Frame(t);
}

std::vector<Frame> to_frames(const FloatArray& a) {
  if (a.ndim() != 3) throw ShapeError("expected a T x H x W array, got " + std::to_string(a.ndim()) + "-D");
  std::vector<Frame> out;
  const auto plane = a.shape(1) * a.shape(2);
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    auto t = torch::from_blob(const_cast<float*>(a.data()) + i * plane, {a.shape(1), a.shape(2)}, torch::kFloat32);
    out.emplace_back(t.clone(), static_cast<int>(i));
  }
  return out;
}

py::array_t<float> to_array(std::span<const Frame> frames) {
  if (frames.empty()) return py::array_t<float>(std::vector<py::ssize_t>{0, 0, 0});
  const auto h = frames[0].height(), w = frames[0].width();
  py::array_t<float> out({static_cast<py::ssize_t>(frames.size()), static_cast<py::ssize_t>(h),
                          static_cast<py::ssize_t>(w)});
  auto* dst = out.mutable_data();
  for (const auto& f : frames) {
    auto src = f.data().contiguous();
    std::memcpy(dst, src.data_ptr<float>(), sizeof(float) * h * w);
    dst += h * w;
  }
  return out;
}

ModelConfig parse_config(const std::string& json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  auto cfg = config_from_json(j);
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_vqe, m) {
  m.doc() = "Video quality enhancement core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInputError>(m, "InvalidInputError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<UnknownQpError>(m, "UnknownQpError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<PluginError>(m, "PluginError", base.ptr());

  m.def("psnr", [](const FloatArray& a, const FloatArray& b) { return psnr(to_frame(a), to_frame(b)); },
        py::arg("reference"), py::arg("distorted"));
  m.def("ssim", [](const FloatArray& a, const FloatArray& b) { return ssim(to_frame(a), to_frame(b)); },
        py::arg("reference"), py::arg("distorted"));
  m.def(
      "score_sequences",
      [](const FloatArray& a, const FloatArray& b) {
        auto s = score_sequences(to_frames(a), to_frames(b));
        py::dict d;
        d["psnr"] = s.psnr;
        d["ssim"] = s.ssim;
        d["mean_psnr"] = s.mean_psnr;
        d["mean_ssim"] = s.mean_ssim;
        d["finite_psnr_frames"] = s.finite_psnr_frames;
        return d;
      },
      py::arg("reference"), py::arg("distorted"));

  m.def(
      "encode_qp", [](int value, const std::vector<int>& vocab) { return encode_qp(value, vocab).one_hot; },
      py::arg("qp"), py::arg("vocabulary"));

  m.def(
      "read_video",
      [](const std::filesystem::path& path, std::int64_t width, std::int64_t height) {
        return to_array(read_sequence(path, format_for_path(path, width, height)).luma);
      },
      py::arg("path"), py::arg("width") = 0, py::arg("height") = 0,
      "Luma planes of a Y4M or raw YUV file as a T x H x W float32 array in [0,1].");
  m.def(
      "write_video",
      [](const std::filesystem::path& path, const FloatArray& frames, const std::string& kind) {
        VideoSequence seq;
        seq.luma = to_frames(frames);
        if (seq.luma.empty()) throw InvalidInputError("no frames to write");
        seq.height = seq.luma[0].height();
        seq.width = seq.luma[0].width();
        const auto k = parse_container_kind(kind);
        seq.has_chroma = k != ContainerKind::kRaw400;
        if (seq.has_chroma) {
          const auto n = static_cast<std::size_t>(2 * ((seq.width + 1) / 2) * ((seq.height + 1) / 2));
          seq.chroma.assign(seq.luma.size(), std::vector<std::uint8_t>(n, 128));
        }
        write_sequence(path, seq, k);
      },
      py::arg("path"), py::arg("frames"), py::arg("kind") = "y4m",
      "Writes luma planes with neutral chroma.");

  m.def("tiny_config", [] { return to_json(ModelConfig::tiny()).dump(); });
  m.def(
      "init_checkpoint",
      [](const std::string& config_json, const std::filesystem::path& path) {
        auto model = build_model(parse_config(config_json));
        save_checkpoint(path, model);
      },
      py::arg("config"), py::arg("path"), "Writes a freshly initialised model.");
  m.def(
      "count_parameters",
      [](const std::filesystem::path& checkpoint) {
        auto loaded = load_checkpoint(checkpoint);
        return count_parameters(loaded.model);
      },
      py::arg("checkpoint"));
  m.def(
      "enhance",
      [](const FloatArray& frames, const std::filesystem::path& checkpoint, int qp, std::optional<int> tile,
         int context) {
        auto input = to_frames(frames);
        auto loaded = load_checkpoint(checkpoint);
        const auto code = encode_qp(qp, loaded.model.config.qp_vocabulary);
        TilingOptions tiling;
        tiling.tile_size = tile;
        tiling.context = context;
        std::vector<Frame> out;
        {
          py::gil_scoped_release release;
          out = enhance_sequence(input, code, loaded.model.generator, tiling);
        }
        return to_array(out);
      },
      py::arg("frames"), py::arg("checkpoint"), py::arg("qp"), py::arg("tile") = py::none(),
      py::arg("context") = 0, "context=-1 uses the generator's receptive radius.");
}
