#include "vqe/config.hpp"

#include <fstream>
#include <set>

namespace vqe {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& section, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError("section '" + section + "' must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown key '" + it.key() + "' in section '" + section + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string backbone_name(BackboneKind k) { return k == BackboneKind::kPretrained ? "pretrained" : "test-stub"; }

BackboneKind parse_backbone(const std::string& s) {
  if (s == "pretrained") return BackboneKind::kPretrained;
  if (s == "test-stub") return BackboneKind::kTestStub;
  throw ConfigError("backbone must be 'pretrained' or 'test-stub', got '" + s + "'");
}

json mask_to_json(const AblationMask& m) {
  return json{{"preceding_frame", m.preceding_frame},
              {"succeeding_frame", m.succeeding_frame},
              {"attention_blocks", m.attention_block},
              {"first_branch", m.first_branch},
              {"qp_adaptation", m.qp_adaptation}};
}

AblationMask mask_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s.size() != 1) throw ConfigError("ablation row must be a single letter A..I");
    return AblationMask::row(s[0]);
  }
  reject_unknown(j, "ablation",
                 {"preceding_frame", "succeeding_frame", "attention_blocks", "first_branch", "qp_adaptation"});
  AblationMask m;
  read(j, "preceding_frame", m.preceding_frame);
  read(j, "succeeding_frame", m.succeeding_frame);
  read(j, "attention_blocks", m.attention_block);
  read(j, "first_branch", m.first_branch);
  read(j, "qp_adaptation", m.qp_adaptation);
  return m;
}

}  // namespace

std::vector<int> ModelConfig::tap_channels() const {
  if (backbone.kind == BackboneKind::kPretrained) return {64, 128, 256, 512, 512, 512};
  const auto& w = backbone.stub_widths;
  if (w.size() != 5) throw ConfigError("backbone.stub_widths needs 5 entries");
  return {w[0], w[1], w[2], w[3], w[4], w[4]};
}

std::vector<int> ModelConfig::decoder_widths() const {
  if (!decoder.widths.empty()) return decoder.widths;
  const auto c = tap_channels();
  return {c[3], c[2], c[1], c[0], c[0]};
}

void ModelConfig::validate() const {
  try {
    validate_vocabulary(qp_vocabulary);
  } catch (const InvalidInputError& e) {
    throw ConfigError(e.what());
  }
  ablation.validate();
  const auto f = attention.downsample_factor;
  if (f != 1 && f != 2 && f != 4 && f != 6) throw ConfigError("attention.downsample_factor must be 1, 2, 4 or 6");
  if (attention.projection_channels < 0) throw ConfigError("attention.projection_channels must be >= 0");
  if (backbone.kind == BackboneKind::kTestStub) {
    if (backbone.stub_widths.size() != 5 || backbone.stub_convs.size() != 5) {
      throw ConfigError("backbone.stub_widths and backbone.stub_convs need 5 entries");
    }
    for (std::size_t i = 0; i < 5; ++i) {
      if (backbone.stub_widths[i] < 1 || backbone.stub_convs[i] < 1) {
        throw ConfigError("backbone stub widths and conv counts must be positive");
      }
    }
  } else if (backbone.weights_path.empty()) {
    throw ConfigError("backbone.weights_path is required for the pretrained backbone");
  }
  const auto c = tap_channels();
  const auto w = decoder_widths();
  if (w.size() != 5) throw ConfigError("decoder.widths needs 5 entries (levels 5..1)");
  for (int v : w) {
    if (v < 1) throw ConfigError("decoder widths must be positive");
  }
  // Attention outputs at levels 4 and 3 are added to the upsampled output of
  // the level above, so those widths are pinned to the tap widths.
  if (w[0] != c[3]) throw ConfigError("decoder width at level 5 must equal tap (4,1) channels");
  if (w[1] != c[2]) throw ConfigError("decoder width at level 4 must equal tap (3,1) channels");
  if (adapt.stage_widths.size() != 3) throw ConfigError("adapt.stage_widths needs exactly 3 entries");
  for (int v : adapt.stage_widths) {
    if (v < 1) throw ConfigError("adapt stage widths must be positive");
  }
  const auto& d = discriminator;
  if (d.widths.empty() || d.widths.size() != d.strides.size()) {
    throw ConfigError("discriminator.widths and discriminator.strides must be non-empty and equal length");
  }
  if (d.kernel < 1) throw ConfigError("discriminator.kernel must be positive");
  for (int s : d.strides) {
    if (s < 1) throw ConfigError("discriminator strides must be positive");
  }
  for (int l : d.fm_layers) {
    if (l < 0 || l >= static_cast<int>(d.widths.size())) throw ConfigError("discriminator.fm_layers index out of range");
  }
  if (loss_weights.alpha < 0 || loss_weights.beta < 0) throw ConfigError("loss weights must be >= 0");
  const auto& t = train;
  if (t.learning_rate <= 0 || t.batch_size < 1 || t.steps < 0 || t.checkpoint_interval < 0 || t.grad_clip < 0) {
    throw ConfigError("invalid training hyperparameters");
  }
  if (tile_size && (*tile_size < 16 || *tile_size % 16 != 0)) {
    throw ConfigError("tile_size must be a positive multiple of 16");
  }
  if (tile_overlap < 0 || tile_overlap % 16 != 0) throw ConfigError("tile_overlap must be a non-negative multiple of 16");
}

ModelConfig ModelConfig::tiny() {
  ModelConfig cfg;
  cfg.qp_vocabulary = {22, 37};
  cfg.backbone.stub_widths = {8, 16, 16, 16, 16};
  cfg.backbone.stub_convs = {1, 1, 1, 1, 2};
  cfg.adapt.stage_widths = {16, 16, 16};
  cfg.discriminator.widths = {16, 32, 32};
  cfg.discriminator.strides = {2, 2, 1};
  cfg.train.batch_size = 4;
  return cfg;
}

json to_json(const ModelConfig& c) {
  json j;
  j["qp_vocabulary"] = c.qp_vocabulary;
  j["ablation"] = mask_to_json(c.ablation);
  j["backbone"] = {{"kind", backbone_name(c.backbone.kind)},
                   {"weights_path", c.backbone.weights_path},
                   {"weights_checksum", c.backbone.weights_checksum},
                   {"tap_activation", c.backbone.tap_activation == TapActivation::kPost ? "post" : "pre"},
                   {"stub_widths", c.backbone.stub_widths},
                   {"stub_convs", c.backbone.stub_convs},
                   {"stub_seed", c.backbone.stub_seed}};
  j["attention"] = {{"downsample_factor", c.attention.downsample_factor},
                    {"projection_channels", c.attention.projection_channels},
                    {"scale_logits", c.attention.scale_logits}};
  j["decoder"] = {{"widths", c.decoder.widths}};
  j["adapt"] = {{"stage_widths", c.adapt.stage_widths}, {"residual", c.adapt.residual}};
  j["discriminator"] = {{"widths", c.discriminator.widths},
                        {"strides", c.discriminator.strides},
                        {"kernel", c.discriminator.kernel},
                        {"instance_norm", c.discriminator.instance_norm},
                        {"conditional", c.discriminator.conditional},
                        {"fm_layers", c.discriminator.fm_layers}};
  j["loss_weights"] = {{"alpha", c.loss_weights.alpha}, {"beta", c.loss_weights.beta}};
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"epsilon", c.train.epsilon},
                {"batch_size", c.train.batch_size},
                {"steps", c.train.steps},
                {"checkpoint_interval", c.train.checkpoint_interval},
                {"grad_clip", c.train.grad_clip}};
  j["tile_size"] = c.tile_size ? json(*c.tile_size) : json(nullptr);
  j["tile_overlap"] = c.tile_overlap;
  j["seed"] = c.seed;
  return j;
}

ModelConfig config_from_json(const json& j) {
  reject_unknown(j, "root",
                 {"qp_vocabulary", "ablation", "backbone", "attention", "decoder", "adapt", "discriminator",
                  "loss_weights", "train", "tile_size", "tile_overlap", "seed"});
  ModelConfig c;
  read(j, "qp_vocabulary", c.qp_vocabulary);
  if (j.contains("ablation")) c.ablation = mask_from_json(j["ablation"]);
  if (j.contains("backbone")) {
    const auto& b = j["backbone"];
    reject_unknown(b, "backbone",
                   {"kind", "weights_path", "weights_checksum", "tap_activation", "stub_widths", "stub_convs",
                    "stub_seed"});
    std::string kind = backbone_name(c.backbone.kind);
    read(b, "kind", kind);
    c.backbone.kind = parse_backbone(kind);
    read(b, "weights_path", c.backbone.weights_path);
    read(b, "weights_checksum", c.backbone.weights_checksum);
    std::string act = "post";
    read(b, "tap_activation", act);
    if (act != "post" && act != "pre") throw ConfigError("backbone.tap_activation must be 'post' or 'pre'");
    c.backbone.tap_activation = act == "post" ? TapActivation::kPost : TapActivation::kPre;
    read(b, "stub_widths", c.backbone.stub_widths);
    read(b, "stub_convs", c.backbone.stub_convs);
    read(b, "stub_seed", c.backbone.stub_seed);
  }
  if (j.contains("attention")) {
    const auto& a = j["attention"];
    reject_unknown(a, "attention", {"downsample_factor", "projection_channels", "scale_logits"});
    read(a, "downsample_factor", c.attention.downsample_factor);
    read(a, "projection_channels", c.attention.projection_channels);
    read(a, "scale_logits", c.attention.scale_logits);
  }
  if (j.contains("decoder")) {
    reject_unknown(j["decoder"], "decoder", {"widths"});
    read(j["decoder"], "widths", c.decoder.widths);
  }
  if (j.contains("adapt")) {
    reject_unknown(j["adapt"], "adapt", {"stage_widths", "residual"});
    read(j["adapt"], "stage_widths", c.adapt.stage_widths);
    read(j["adapt"], "residual", c.adapt.residual);
  }
  if (j.contains("discriminator")) {
    const auto& d = j["discriminator"];
    reject_unknown(d, "discriminator", {"widths", "strides", "kernel", "instance_norm", "conditional", "fm_layers"});
    read(d, "widths", c.discriminator.widths);
    read(d, "strides", c.discriminator.strides);
    read(d, "kernel", c.discriminator.kernel);
    read(d, "instance_norm", c.discriminator.instance_norm);
    read(d, "conditional", c.discriminator.conditional);
    read(d, "fm_layers", c.discriminator.fm_layers);
  }
  if (j.contains("loss_weights")) {
    reject_unknown(j["loss_weights"], "loss_weights", {"alpha", "beta"});
    read(j["loss_weights"], "alpha", c.loss_weights.alpha);
    read(j["loss_weights"], "beta", c.loss_weights.beta);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    reject_unknown(t, "train",
                   {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "steps", "checkpoint_interval",
                    "grad_clip"});
    read(t, "learning_rate", c.train.learning_rate);
    read(t, "beta1", c.train.beta1);
    read(t, "beta2", c.train.beta2);
    read(t, "epsilon", c.train.epsilon);
    read(t, "batch_size", c.train.batch_size);
    read(t, "steps", c.train.steps);
    read(t, "checkpoint_interval", c.train.checkpoint_interval);
    read(t, "grad_clip", c.train.grad_clip);
  }
  if (j.contains("tile_size") && !j["tile_size"].is_null()) {
    int tile = 0;
    read(j, "tile_size", tile);
    c.tile_size = tile;
  }
  read(j, "tile_overlap", c.tile_overlap);
  read(j, "seed", c.seed);
  c.validate();
  return c;
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const ModelConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace vqe
