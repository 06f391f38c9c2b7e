#include "vqe/pipeline.hpp"

#include <nlohmann/json.hpp>

#include "vqe/checkpoint.hpp"

namespace vqe {

GeneratorImpl::GeneratorImpl(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  backbone_ = Backbone(cfg_.backbone);
  if (cfg_.backbone.kind == BackboneKind::kPretrained) {
    backbone_->load_weights(cfg_.backbone.weights_path, cfg_.backbone.weights_checksum);
  }
  const auto taps = backbone_->tap_channels();
  const auto& mask = cfg_.ablation;
  for (int b = 1; b <= kAttentionBlocks; ++b) {
    if (!mask.block(b)) continue;
    const int channels = taps[static_cast<std::size_t>(block_level(b) - 1)];
    attention.emplace(b, register_module("attn" + std::to_string(b),
                                         AttentionBlock(channels, cfg_.attention.projection_channels,
                                                        cfg_.attention.downsample_factor,
                                                        cfg_.attention.scale_logits)));
  }
  const auto widths = cfg_.decoder_widths();
  if (mask.first_branch) first_branch = register_module("branch1", DecoderBranch(taps, widths));
  second_branch = register_module("branch2", DecoderBranch(taps, widths));
  const int merged = second_branch->out_channels() * (mask.first_branch ? 2 : 1);
  adapt = register_module("adapt", QPAdapt(merged, static_cast<int>(cfg_.qp_vocabulary.size()),
                                           cfg_.adapt.stage_widths, mask.qp_adaptation, cfg_.adapt.residual));
}

void GeneratorImpl::set_attention_downsample(int factor) {
  if (factor != 1 && factor != 2 && factor != 4 && factor != 6) {
    throw ConfigError("attention downsample factor must be 1, 2, 4 or 6");
  }
  cfg_.attention.downsample_factor = factor;
  for (auto& [id, block] : attention) block->set_downsample_factor(factor);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& prev, const torch::Tensor& cur, const torch::Tensor& next,
                                     const torch::Tensor& one_hot, GeneratorTrace* trace) {
  if (prev.sizes() != cur.sizes() || next.sizes() != cur.sizes()) throw ShapeError("triplet frames differ in size");
  const auto& mask = cfg_.ablation;
  auto target = backbone_->extract_target(cur);
  std::optional<FeaturePyramid> before, after;
  if (mask.preceding_frame) before = backbone_->extract_reference(prev);
  if (mask.succeeding_frame) after = backbone_->extract_reference(next);

  std::map<int, torch::Tensor> first, second, by_block;
  for (auto& [id, block] : attention) {
    const int level = block_level(id);
    const auto& ref = mask.block_reference(id) > 0 ? *after : *before;
    auto out = block->forward(target.at({level, 1}), ref.at({level, 1}));
    (block_branch(id) == 1 ? first : second)[level] = out;
    by_block[id] = out;
  }
  torch::Tensor b1;
  if (mask.first_branch) b1 = decode_branch(first_branch, 1, target, first, mask);
  auto b2 = decode_branch(second_branch, 2, target, second, mask);
  auto merged = merge_branches(b1, b2, mask);
  auto out = adapt->forward(merged, one_hot, cur);
  if (trace) {
    trace->target = target;
    trace->preceding = before;
    trace->succeeding = after;
    trace->attention = by_block;
    trace->merged = merged;
  }
  return out;
}

std::int64_t GeneratorImpl::receptive_radius() const {
  // Backbone: a 3x3 conv at level L reaches 2^(L-1) input pixels, each 2x2
  // pooling another 2^(L-1). Decoder: its conv at level L reaches 2^(L-1),
  // bilinear upsampling from level L+1 at most one coarse pixel (2^L).
  // The QP head adds four full-resolution 3x3 convs.
  std::int64_t r = 0;
  const bool pretrained = cfg_.backbone.kind == BackboneKind::kPretrained;
  for (int level = 1; level <= 5; ++level) {
    const std::int64_t scale = std::int64_t{1} << (level - 1);
    const int convs = pretrained ? (level <= 2 ? 2 : 4) : cfg_.backbone.stub_convs[static_cast<std::size_t>(level - 1)];
    r += convs * scale;
    if (level < 5) r += scale;
    r += scale;  // decoder conv at this level
    if (level < 5) r += 2 * scale;
  }
  r += 4;
  return round_up(r, 16);
}

Model build_model(const ModelConfig& cfg) {
  cfg.validate();
  torch::manual_seed(cfg.seed);
  Model m;
  m.config = cfg;
  m.generator = Generator(cfg);
  m.discriminator = PatchDiscriminator(cfg.discriminator);
  return m;
}

namespace {

torch::Tensor as_batch(const Frame& f, std::int64_t h, std::int64_t w) {
  return reflect_pad_to(f.data(), h, w).unsqueeze(0).unsqueeze(0);
}

torch::Tensor qp_tensor(const QPCode& qp, const ModelConfig& cfg) {
  if (qp.vocabulary != cfg.qp_vocabulary) {
    throw UnknownQpError("QP code vocabulary does not match the model's trained QPs");
  }
  return qp.tensor();
}

}  // namespace

Frame enhance_frame(const ClipTriplet& triplet, const QPCode& qp, Generator& generator) {
  torch::NoGradGuard guard;
  const auto h = triplet.target.height();
  const auto w = triplet.target.width();
  const auto ph = round_up(h, 16);
  const auto pw = round_up(w, 16);
  auto out = generator->forward(as_batch(triplet.preceding, ph, pw), as_batch(triplet.target, ph, pw),
                                as_batch(triplet.succeeding, ph, pw), qp_tensor(qp, generator->config()));
  using torch::indexing::Slice;
  out = out[0][0].index({Slice(0, h), Slice(0, w)});
  return frame_from_unclamped(out, triplet.target.index());
}

std::vector<TileRect> plan_tiles(std::int64_t height, std::int64_t width, std::int64_t tile) {
  if (tile < 16 || tile % 16 != 0) throw ConfigError("tile size must be a positive multiple of 16");
  std::vector<TileRect> out;
  for (std::int64_t r = 0; r < height; r += tile) {
    for (std::int64_t c = 0; c < width; c += tile) {
      out.push_back({r, c, std::min(tile, height - r), std::min(tile, width - c)});
    }
  }
  return out;
}

namespace {

// Weight that ramps linearly from the tile core out to the enlarged border.
torch::Tensor feather(std::int64_t len, std::int64_t lead, std::int64_t trail) {
  auto w = torch::ones({len});
  auto acc = w.accessor<float, 1>();
  for (std::int64_t i = 0; i < lead; ++i) acc[i] = static_cast<float>(i + 1) / static_cast<float>(lead + 1);
  for (std::int64_t i = 0; i < trail; ++i) acc[len - 1 - i] = static_cast<float>(i + 1) / static_cast<float>(trail + 1);
  return w;
}

}  // namespace

std::vector<Frame> enhance_sequence(std::span<const Frame> frames, const QPCode& qp, Generator& generator,
                                    const TilingOptions& tiling) {
  if (frames.empty()) throw InvalidInputError("enhance_sequence: empty sequence");
  if (tiling.tile_size && (*tiling.tile_size < 16 || *tiling.tile_size % 16 != 0)) {
    throw ConfigError("tile size must be a positive multiple of 16");
  }
  if (tiling.overlap < 0 || tiling.overlap % 16 != 0) throw ConfigError("tile overlap must be a multiple of 16");
  if (tiling.context != kAutoContext && (tiling.context < 0 || tiling.context % 16 != 0)) {
    throw ConfigError("tile context must be a multiple of 16");
  }
  if (tiling.overlap > 0 && tiling.context != 0) throw ConfigError("tile overlap and tile context are exclusive");
  const std::int64_t context = tiling.context == kAutoContext ? generator->receptive_radius() : tiling.context;
  torch::NoGradGuard guard;
  const auto onehot = qp_tensor(qp, generator->config());
  std::vector<Frame> out;
  out.reserve(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto triplet = make_triplet(frames, t);
    if (!tiling.tile_size) {
      out.push_back(enhance_frame(triplet, qp, generator));
      continue;
    }
    const auto h = triplet.target.height();
    const auto w = triplet.target.width();
    const auto ph = round_up(h, 16);
    const auto pw = round_up(w, 16);
    auto prev = as_batch(triplet.preceding, ph, pw);
    auto cur = as_batch(triplet.target, ph, pw);
    auto next = as_batch(triplet.succeeding, ph, pw);
    auto acc = torch::zeros({ph, pw});
    auto weight = torch::zeros({ph, pw});
    using torch::indexing::Slice;
    const bool blend = tiling.overlap > 0;
    const auto margin = blend ? static_cast<std::int64_t>(tiling.overlap) : context;
    for (const auto& r : plan_tiles(ph, pw, *tiling.tile_size)) {
      const auto r0 = std::max<std::int64_t>(0, r.row - margin), r1 = std::min(ph, r.row + r.height + margin);
      const auto c0 = std::max<std::int64_t>(0, r.col - margin), c1 = std::min(pw, r.col + r.width + margin);
      auto cut = [&](const torch::Tensor& x) { return x.index({Slice(), Slice(), Slice(r0, r1), Slice(c0, c1)}); };
      auto y = generator->forward(cut(prev), cut(cur), cut(next), onehot)[0][0];
      if (!blend) {
        const auto core = y.index({Slice(r.row - r0, r.row - r0 + r.height), Slice(r.col - c0, r.col - c0 + r.width)});
        acc.index_put_({Slice(r.row, r.row + r.height), Slice(r.col, r.col + r.width)}, core);
        weight.index({Slice(r.row, r.row + r.height), Slice(r.col, r.col + r.width)}).add_(1.0);
      } else {
        auto wr = feather(r1 - r0, r.row - r0, r1 - (r.row + r.height));
        auto wc = feather(c1 - c0, r.col - c0, c1 - (r.col + r.width));
        auto wmap = wr.unsqueeze(1) * wc.unsqueeze(0);
        acc.index({Slice(r0, r1), Slice(c0, c1)}).add_(y * wmap);
        weight.index({Slice(r0, r1), Slice(c0, c1)}).add_(wmap);
      }
    }
    if (!blend && !(weight == 1).all().item<bool>()) throw NumericError("tile plan did not cover every pixel once");
    auto merged = (acc / weight).index({Slice(0, h), Slice(0, w)});
    out.push_back(frame_from_unclamped(merged, triplet.target.index()));
  }
  return out;
}

std::int64_t count_module_parameters(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters(true)) n += p.numel();
  return n;
}

std::map<std::string, std::int64_t> count_parameters(Model& model, CountGranularity granularity) {
  std::map<std::string, std::int64_t> out;
  auto& g = model.generator;
  if (granularity == CountGranularity::kTensor) {
    for (const auto& p : g->named_parameters(true)) out["generator." + p.key()] = p.value().numel();
    for (const auto& p : model.discriminator->named_parameters(true)) out["discriminator." + p.key()] = p.value().numel();
    return out;
  }
  std::int64_t att = 0;
  for (auto& [id, block] : g->attention) att += count_module_parameters(*block);
  out["attention"] = att;
  out["decoder.first_branch"] = g->first_branch ? count_module_parameters(*g->first_branch) : 0;
  out["decoder.second_branch"] = count_module_parameters(*g->second_branch);
  std::int64_t gates = 0;
  for (auto& fc : g->adapt->fcs) gates += count_module_parameters(*fc);
  out["qp_adapt.gates"] = gates;
  out["qp_adapt.convs"] = count_module_parameters(*g->adapt) - gates;
  out["generator"] = count_module_parameters(*g);
  out["discriminator"] = count_module_parameters(*model.discriminator);
  out["backbone (frozen)"] = count_module_parameters(*g->backbone());
  return out;
}

void save_checkpoint(const std::filesystem::path& path, Model& model, int step) {
  Container c;
  nlohmann::json meta;
  meta["config"] = to_json(model.config);
  meta["step"] = step;
  c.config_json = meta.dump(2);
  c.blocks = module_blocks(*model.generator, "generator.");
  auto d = module_blocks(*model.discriminator, "discriminator.");
  c.blocks.insert(c.blocks.end(), d.begin(), d.end());
  write_container(path, c);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto c = read_container(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(c.config_json);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint config is not valid JSON: " + std::string(e.what()));
  }
  if (!meta.contains("config")) throw FormatError("checkpoint has no config snapshot");
  LoadedCheckpoint out;
  out.model = build_model(config_from_json(meta["config"]));
  out.step = meta.value("step", 0);
  load_module_blocks(*out.model.generator, c, "generator.");
  load_module_blocks(*out.model.discriminator, c, "discriminator.");
  return out;
}

}  // namespace vqe
