// Command-line front end.
//
// Exit codes: 0 ok, 1 internal error, 2 usage, 3 I/O or file format,
// 4 config (including unknown QP), 5 numeric, 6 invalid input, 7 plugin.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "vqe/checkpoint.hpp"
#include "vqe/data.hpp"
#include "vqe/image.hpp"
#include "vqe/metrics.hpp"
#include "vqe/pipeline.hpp"
#include "vqe/plugin.hpp"
#include "vqe/train.hpp"
#include "vqe/visualize.hpp"

namespace fs = std::filesystem;
using namespace vqe;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> qp;
  std::optional<int> qp_as;
  std::optional<int> tile;
  std::optional<int> attn_downsample;
  std::optional<std::string> ablation;
  std::optional<std::string> backbone;
  std::string weights;
  bool tiny = false;
  int threads = 0;
};

ModelConfig resolve_config(const Globals& g) {
  auto cfg = g.config_path.empty() ? (g.tiny ? ModelConfig::tiny() : ModelConfig{}) : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.ablation) cfg.ablation = AblationMask::row((*g.ablation)[0]);
  if (g.backbone) cfg.backbone.kind = *g.backbone == "pretrained" ? BackboneKind::kPretrained : BackboneKind::kTestStub;
  if (!g.weights.empty()) cfg.backbone.weights_path = g.weights;
  if (g.attn_downsample) cfg.attention.downsample_factor = *g.attn_downsample;
  if (g.tile) cfg.tile_size = *g.tile;
  cfg.validate();
  return cfg;
}

/// Model from a checkpoint when given, otherwise freshly initialised from the config.
Model resolve_model(const Globals& g, const std::string& checkpoint) {
  if (checkpoint.empty()) {
    std::cerr << "note: no --checkpoint given, using untrained weights\n";
    return build_model(resolve_config(g));
  }
  if (g.ablation || g.backbone) std::cerr << "note: --ablation/--backbone are taken from the checkpoint\n";
  auto model = load_checkpoint(checkpoint).model;
  if (g.attn_downsample) {
    model.generator->set_attention_downsample(*g.attn_downsample);
    model.config.attention.downsample_factor = *g.attn_downsample;
  }
  return model;
}

QPCode resolve_qp(const Globals& g, const ModelConfig& cfg) {
  if (!g.qp) throw ConfigError("--qp is required");
  const int fed = g.qp_as.value_or(*g.qp);
  return encode_qp(fed, cfg.qp_vocabulary);
}

struct SequenceArgs {
  std::string path;
  std::string format;  // empty: by extension
  std::int64_t width = 0, height = 0;

  VideoFormat video_format() const {
    auto f = format_for_path(path, width, height);
    if (!format.empty()) f.kind = parse_container_kind(format);
    return f;
  }
};

void add_sequence_options(CLI::App* app, SequenceArgs& a, const std::string& flag, const std::string& what) {
  app->add_option(flag, a.path, what)->required();
  app->add_option("--format", a.format, "Container: y4m, yuv420, yuv400 (default: by extension)");
  app->add_option("--width", a.width, "Frame width for raw input");
  app->add_option("--height", a.height, "Frame height for raw input");
}

std::vector<int> parse_qps(const std::vector<int>& given, const ModelConfig& cfg) {
  return given.empty() ? cfg.qp_vocabulary : given;
}

std::vector<LoadedPair> load_manifest(const std::string& manifest, const std::vector<int>& qps) {
  std::vector<LoadedPair> pairs;
  for (const auto& p : read_manifest(manifest)) pairs.push_back(load_pair(p, qps));
  return pairs;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video quality enhancement: training, inference and analysis tools"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON model/training config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--qp", g.qp, "Quantization parameter of the input");
  app.add_option("--qp-as", g.qp_as, "Feed this vocabulary QP instead of --qp");
  app.add_option("--tile", g.tile, "Tile size in pixels (multiple of 16)");
  app.add_option("--attn-downsample", g.attn_downsample, "Attention downsampling factor")
      ->check(CLI::IsMember({1, 2, 4, 6}));
  app.add_option("--ablation", g.ablation, "Ablation row")
      ->check(CLI::IsMember({"A", "B", "C", "D", "E", "F", "G", "H", "I"}));
  app.add_option("--backbone", g.backbone, "Feature backbone")->check(CLI::IsMember({"pretrained", "test-stub"}));
  app.add_option("--weights", g.weights, "Pretrained backbone weights (container file)");
  app.add_flag("--tiny", g.tiny, "Start from the small desk-scale config instead of the default");
  app.add_option("--threads", g.threads, "Intra-op threads (0 = library default)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Adversarial training on a manifest of sequence pairs");
  std::string manifest, run_dir;
  std::vector<int> qps;
  std::optional<int> steps, batch, interval;
  std::optional<double> lr, grad_clip;
  std::int64_t crop = 128;
  train_cmd->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--run-dir", run_dir, "Output directory")->required();
  train_cmd->add_option("--qps", qps, "Training QPs (default: the vocabulary)");
  train_cmd->add_option("--steps", steps, "Training steps");
  train_cmd->add_option("--batch", batch, "Batch size");
  train_cmd->add_option("--lr", lr, "Learning rate");
  train_cmd->add_option("--checkpoint-interval", interval, "Steps between checkpoints");
  train_cmd->add_option("--grad-clip", grad_clip, "Gradient norm clip (0 = off)");
  train_cmd->add_option("--crop", crop, "Crop size");

  // enhance
  auto* enhance_cmd = app.add_subcommand("enhance", "Enhance a compressed sequence");
  SequenceArgs input;
  std::string output, checkpoint;
  int tile_overlap = 0;
  std::string tile_context = "0";
  add_sequence_options(enhance_cmd, input, "--input", "Compressed sequence");
  enhance_cmd->add_option("--output", output, "Output sequence (.y4m or raw)")->required();
  enhance_cmd->add_option("--checkpoint", checkpoint, "Trained checkpoint")->check(CLI::ExistingFile);
  enhance_cmd->add_option("--tile-overlap", tile_overlap, "Feathered tile overlap in pixels");
  enhance_cmd->add_option("--tile-context", tile_context, "Tile context halo in pixels, or 'auto'");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate ablation rows");
  std::string rows;
  std::string eval_manifest;
  std::size_t max_samples = 0;
  ablate_cmd->add_option("--manifest", manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--eval-manifest", eval_manifest, "Evaluation manifest (default: training)");
  ablate_cmd->add_option("--rows", rows, "Rows to run, e.g. ACI (default: --ablation or all)")
      ->check(CLI::Validator(
          [](std::string& s) {
            return s.find_first_not_of(kAblationRows) == std::string::npos ? std::string{}
                                                                           : "rows must be letters A..I";
          },
          "ROWS"));
  ablate_cmd->add_option("--run-dir", run_dir, "Output directory")->required();
  ablate_cmd->add_option("--qps", qps, "QPs (default: the vocabulary)");
  ablate_cmd->add_option("--steps", steps, "Training steps per row");
  ablate_cmd->add_option("--crop", crop, "Crop size");
  ablate_cmd->add_option("--max-samples", max_samples, "Evaluation samples per row (0 = all)");

  // cross-qp
  auto* cross_cmd = app.add_subcommand("cross-qp", "Evaluate models against test sets at several QPs");
  std::vector<std::string> models;
  std::string out_dir;
  cross_cmd->add_option("--model", models, "tag=checkpoint, repeatable")->required();
  cross_cmd->add_option("--manifest", manifest, "Test manifest")->required()->check(CLI::ExistingFile);
  cross_cmd->add_option("--qps", qps, "Test QPs")->required();
  cross_cmd->add_option("--out-dir", out_dir, "Report directory")->required();
  cross_cmd->add_option("--crop", crop, "Crop size");
  cross_cmd->add_option("--max-samples", max_samples, "Samples per cell (0 = all)");

  // visualize-attention
  auto* vis_cmd = app.add_subcommand("visualize-attention", "Render the correlation of one query pixel");
  int frame_index = 0, block = 1;
  std::int64_t row = 0, col = 0, k = 10;
  std::string top_tsv;
  add_sequence_options(vis_cmd, input, "--input", "Compressed sequence");
  vis_cmd->add_option("--checkpoint", checkpoint, "Trained checkpoint")->check(CLI::ExistingFile);
  vis_cmd->add_option("--frame", frame_index, "Target frame index");
  vis_cmd->add_option("--block", block, "Attention block 1..6")->check(CLI::Range(1, 6));
  vis_cmd->add_option("--row", row, "Query pixel row")->required();
  vis_cmd->add_option("--col", col, "Query pixel column")->required();
  vis_cmd->add_option("-k,--top-k", k, "Number of reference positions to mark");
  vis_cmd->add_option("--output", output, "PNG file")->required();
  vis_cmd->add_option("--top-tsv", top_tsv, "Also write the top-k positions as TSV");

  // profile
  auto* profile_cmd = app.add_subcommand("profile", "Temporal profile (time x width) of one pixel row");
  add_sequence_options(profile_cmd, input, "--input", "Sequence");
  profile_cmd->add_option("--row", row, "Pixel row")->required();
  profile_cmd->add_option("--output", output, "PNG file")->required();

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "PSNR/SSIM (and plugin scores) of two sequences or images");
  SequenceArgs reference;
  std::vector<std::string> plugins;
  std::vector<std::string> scorers;
  add_sequence_options(metrics_cmd, reference, "--reference", "Reference (raw) sequence or PNG");
  metrics_cmd->add_option("--distorted", input.path, "Distorted or enhanced sequence or PNG")->required();
  metrics_cmd->add_option("--plugin", plugins, "Register an external scorer name=executable");
  metrics_cmd->add_option("--score", scorers, "Scorer names to report");
  metrics_cmd->add_option("--output", output, "Per-frame TSV file");

  // count-params
  auto* count_cmd = app.add_subcommand("count-params", "Learnable parameter counts");
  std::string granularity = "component";
  count_cmd->add_option("--checkpoint", checkpoint, "Checkpoint (default: build from config)")
      ->check(CLI::ExistingFile);
  count_cmd->add_option("--granularity", granularity, "component or tensor")
      ->check(CLI::IsMember({"component", "tensor"}));

  // make-synthetic
  auto* synth_cmd = app.add_subcommand("make-synthetic", "Write a synthetic raw/degraded corpus and manifest");
  int sequences = 4, frames = 5;
  std::int64_t width = 128, height = 128;
  synth_cmd->add_option("--out-dir", out_dir, "Directory")->required();
  synth_cmd->add_option("--sequences", sequences, "Number of sequences");
  synth_cmd->add_option("--width", width, "Frame width");
  synth_cmd->add_option("--height", height, "Frame height");
  synth_cmd->add_option("--frames", frames, "Frames per sequence");
  synth_cmd->add_option("--qps", qps, "Pseudo-QPs (default: the vocabulary)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (g.threads > 0) torch::set_num_threads(g.threads);

    if (*train_cmd) {
      auto cfg = resolve_config(g);
      if (steps) cfg.train.steps = *steps;
      if (batch) cfg.train.batch_size = *batch;
      if (lr) cfg.train.learning_rate = *lr;
      if (interval) cfg.train.checkpoint_interval = *interval;
      if (grad_clip) cfg.train.grad_clip = *grad_clip;
      cfg.validate();
      const auto use_qps = parse_qps(qps, cfg);
      SampleSet set(load_manifest(manifest, use_qps), use_qps, cfg.qp_vocabulary, crop, cfg.seed);
      SampleStream stream(set, cfg.seed);
      auto model = build_model(cfg);
      fs::create_directories(run_dir);
      save_config(cfg, fs::path(run_dir) / "config.json");
      TrainOptions opts;
      opts.run_dir = run_dir;
      opts.on_step = [&](int step, const LossBundle& b) {
        if (step == 1 || step % 10 == 0 || step == cfg.train.steps)
          std::cerr << LossLog::format(step, b) << '\n';
      };
      std::cerr << LossLog::header() << '\n';
      auto result = train(model, stream, opts);
      std::cout << "trained " << result.steps << " steps on " << set.size() << " samples; checkpoints in " << run_dir
                << '\n';
      return 0;
    }

    if (*enhance_cmd) {
      auto model = resolve_model(g, checkpoint);
      const auto code = resolve_qp(g, model.config);
      auto seq = read_sequence(input.path, input.video_format());
      TilingOptions tiling;
      tiling.tile_size = g.tile ? g.tile : model.config.tile_size;
      tiling.overlap = tile_overlap;
      tiling.context = tile_context == "auto" ? kAutoContext : std::stoi(tile_context);
      auto out = enhance_sequence(seq.luma, code, model.generator, tiling);
      const auto out_kind = fs::path(output).extension() == ".y4m" ? ContainerKind::kY4M
                            : input.format.empty()                 ? input.video_format().kind
                                                                   : parse_container_kind(input.format);
      write_sequence(output, seq.with_luma(std::move(out)), out_kind);
      std::cout << "enhanced " << seq.size() << " frames -> " << output << '\n';
      return 0;
    }

    if (*ablate_cmd) {
      auto cfg = resolve_config(g);
      if (steps) cfg.train.steps = *steps;
      std::string letters = rows;
      if (letters.empty()) letters = g.ablation ? *g.ablation : std::string(kAblationRows);
      std::vector<AblationEntry> entries;
      for (char c : letters) entries.push_back({std::string(1, c), AblationMask::row(c)});
      if (entries.empty()) {
        std::cout << "no rows requested\n";
        return 0;
      }
      const auto use_qps = parse_qps(qps, cfg);
      SampleSet train_set(load_manifest(manifest, use_qps), use_qps, cfg.qp_vocabulary, crop, cfg.seed);
      SampleSet eval_set(load_manifest(eval_manifest.empty() ? manifest : eval_manifest, use_qps), use_qps,
                         cfg.qp_vocabulary, crop, cfg.seed);
      auto report = run_ablation_grid(cfg, entries, train_set, eval_set, run_dir, cfg.train.steps, max_samples);
      std::ifstream md(fs::path(run_dir) / "ablation.md");
      std::cout << md.rdbuf();
      return 0;
    }

    if (*cross_cmd) {
      std::map<std::string, fs::path> ckpts;
      for (const auto& m : models) {
        const auto eq = m.find('=');
        if (eq == std::string::npos) throw ConfigError("--model expects tag=checkpoint, got " + m);
        ckpts[m.substr(0, eq)] = m.substr(eq + 1);
      }
      std::map<int, std::vector<LoadedPair>> tests;
      for (int qp : qps) tests[qp] = load_manifest(manifest, {qp});
      auto matrix = cross_qp_eval(ckpts, tests, crop, max_samples);
      write_cross_qp(out_dir, matrix);
      std::ifstream md(fs::path(out_dir) / "cross_qp.md");
      std::cout << md.rdbuf();
      return 0;
    }

    if (*vis_cmd) {
      auto model = resolve_model(g, checkpoint);
      const auto code = resolve_qp(g, model.config);
      auto seq = read_sequence(input.path, input.video_format());
      if (frame_index < 0 || static_cast<std::size_t>(frame_index) >= seq.size())
        throw InvalidInputError("--frame out of range");
      const auto trip = make_triplet(seq.luma, static_cast<std::size_t>(frame_index));
      auto v = visualize_attention(model.generator, trip, code, block, row, col, k);
      write_png(output, v.image);
      if (!top_tsv.empty()) {
        std::ofstream tsv(top_tsv);
        if (!tsv) throw IoError("cannot write " + top_tsv);
        tsv << "rank\tmap_row\tmap_col\tpixel_row\tpixel_col\tweight\n";
        for (std::size_t i = 0; i < v.top.size(); ++i)
          tsv << i + 1 << '\t' << v.top[i].row << '\t' << v.top[i].col << '\t' << v.top[i].row * v.cell_height << '\t'
              << v.top[i].col * v.cell_width << '\t' << v.top[i].weight << '\n';
      }
      std::cout << "wrote " << output << " (" << v.top.size() << " positions, " << (v.reference > 0 ? "succeeding" : "preceding")
                << " reference)\n";
      return 0;
    }

    if (*profile_cmd) {
      auto seq = read_sequence(input.path, input.video_format());
      write_png(output, temporal_profile(seq.luma, row));
      std::cout << "wrote " << output << " (" << seq.size() << " x " << seq.width << ")\n";
      return 0;
    }

    if (*metrics_cmd) {
      auto load = [&](const SequenceArgs& a) {
        if (fs::path(a.path).extension() == ".png") return std::vector<Frame>{read_png(a.path)};
        return read_sequence(a.path, a.video_format()).luma;
      };
      SequenceArgs distorted = reference;
      distorted.path = input.path;
      const auto ref = load(reference);
      const auto dist = load(distorted);
      PluginRegistry registry;
      for (const auto& p : plugins) registry.add_spec(p);
      auto scores = score_sequences(ref, dist);
      std::map<std::string, std::vector<std::string>> plugin_cells;
      std::map<std::string, std::string> plugin_means;
      for (const auto& name : scorers) {
        double sum = 0;
        bool all_ok = true;
        for (std::size_t i = 0; i < ref.size(); ++i) {
          auto r = registry.score(name, ref[i], dist[i]);
          if (!r.ok() && i == 0) std::cerr << name << ": unavailable (" << r.message << ")\n";
          plugin_cells[name].push_back(r.ok() ? fmt(r.value) : "unavailable");
          all_ok = all_ok && r.ok();
          sum += r.ok() ? r.value : 0.0;
        }
        plugin_means[name] = all_ok ? fmt(sum / static_cast<double>(ref.size())) : "unavailable";
      }
      std::ostringstream table;
      table << "frame\tpsnr\tssim";
      for (const auto& name : scorers) table << '\t' << name;
      table << '\n';
      for (std::size_t i = 0; i < ref.size(); ++i) {
        table << i << '\t' << fmt(scores.psnr[i]) << '\t' << fmt(scores.ssim[i]);
        for (const auto& name : scorers) table << '\t' << plugin_cells[name][i];
        table << '\n';
      }
      table << "mean\t" << fmt(scores.mean_psnr) << '\t' << fmt(scores.mean_ssim);
      for (const auto& name : scorers) table << '\t' << plugin_means[name];
      table << '\n';
      if (!output.empty()) {
        std::ofstream out(output);
        if (!out) throw IoError("cannot write " + output);
        out << table.str();
      }
      std::cout << table.str();
      return 0;
    }

    if (*count_cmd) {
      auto model = checkpoint.empty() ? build_model(resolve_config(g)) : load_checkpoint(checkpoint).model;
      auto counts = count_parameters(model, granularity == "tensor" ? CountGranularity::kTensor
                                                                    : CountGranularity::kComponent);
      std::cout << "component\tparameters\n";
      for (const auto& [name, n] : counts) std::cout << name << '\t' << n << '\n';
      return 0;
    }

    if (*synth_cmd) {
      auto cfg = resolve_config(g);
      const auto use_qps = parse_qps(qps, cfg);
      const auto path = write_synthetic_corpus(out_dir, sequences, width, height, frames, use_qps, cfg.seed);
      std::cout << "wrote " << path.string() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kUsage);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
