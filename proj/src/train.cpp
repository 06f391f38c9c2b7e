#include "vqe/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "vqe/checkpoint.hpp"
#include "vqe/metrics.hpp"

namespace vqe {

namespace fs = std::filesystem;

Batch collate(const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw InvalidInputError("empty batch");
  std::vector<torch::Tensor> p, c, n, r, q;
  for (const auto& s : samples) {
    p.push_back(s.compressed.preceding.data());
    c.push_back(s.compressed.target.data());
    n.push_back(s.compressed.succeeding.data());
    r.push_back(s.raw_target.data());
    q.push_back(s.qp.tensor());
  }
  auto stack = [](std::vector<torch::Tensor>& v) { return torch::stack(v).unsqueeze(1); };
  return {stack(p), stack(c), stack(n), stack(r), torch::cat(q, 0)};
}

namespace {

torch::Tensor judged(const PatchDiscriminator& d, const torch::Tensor& image, const torch::Tensor& condition) {
  return d->config().conditional ? torch::cat({image, condition}, 1) : image;
}

void set_requires_grad(torch::nn::Module& m, bool on) {
  for (auto& p : m.parameters()) p.set_requires_grad(on);
}

bool finite(const LossBundle& b) {
  return std::isfinite(b.l_adv) && std::isfinite(b.l_vgg) && std::isfinite(b.l_fm) && std::isfinite(b.l_g_total) &&
         std::isfinite(b.l_d);
}

}  // namespace

TrainResult train(Model& model, SampleStream& stream, const TrainOptions& options) {
  const auto& cfg = model.config;
  const auto& tc = cfg.train;
  const int steps = options.steps.value_or(tc.steps);
  if (steps < 0) throw ConfigError("step count must be non-negative");
  if (tc.batch_size < 1) throw ConfigError("batch size must be positive");
  torch::manual_seed(cfg.seed);

  auto& g = model.generator;
  auto& d = model.discriminator;
  auto adam = [&](std::vector<torch::Tensor> params) {
    return torch::optim::Adam(std::move(params), torch::optim::AdamOptions(tc.learning_rate)
                                                     .betas({tc.beta1, tc.beta2})
                                                     .eps(tc.epsilon));
  };
  auto g_opt = adam(g->parameters());
  auto d_opt = adam(d->parameters());

  LossLog log;
  if (!options.run_dir.empty()) {
    fs::create_directories(options.run_dir);
    log = LossLog((options.run_dir / "losses.tsv").string());
  }
  const auto batch_n = static_cast<std::size_t>(tc.batch_size);
  const auto& fm_layers = cfg.discriminator.fm_layers;
  TrainResult result;
  g->train();
  d->train();

  for (int step = 1; step <= steps; ++step) {
    LossBundle b;
    b.alpha = cfg.loss_weights.alpha;
    b.beta = cfg.loss_weights.beta;

    // Discriminator phase.
    {
      auto batch = collate(stream.next_batch(batch_n));
      torch::Tensor fake;
      {
        torch::NoGradGuard guard;
        fake = g->forward(batch.prev, batch.cur, batch.next, batch.one_hot);
      }
      set_requires_grad(*d, true);
      auto l_d = discriminator_loss(d->forward(judged(d, batch.raw, batch.cur)), d->forward(judged(d, fake, batch.cur)));
      b.l_d = l_d.item<double>();
      if (options.update_discriminator && std::isfinite(b.l_d)) {
        d_opt.zero_grad();
        l_d.backward();
        if (tc.grad_clip > 0) torch::nn::utils::clip_grad_norm_(d->parameters(), tc.grad_clip);
        d_opt.step();
      }
    }

    // Generator phase; the discriminator only passes gradients through.
    {
      auto batch = collate(stream.next_batch(batch_n));
      set_requires_grad(*d, false);
      auto fake = g->forward(batch.prev, batch.cur, batch.next, batch.one_hot);
      auto l_adv = adversarial_g(d->forward(judged(d, fake, batch.cur)));
      auto l_vgg = perceptual(g->backbone(), fake, batch.raw);
      auto l_fm = feature_matching(d, fake, batch.raw, fm_layers, batch.cur);
      auto l_g = generator_objective(l_adv, l_vgg, l_fm, b.alpha, b.beta);
      b.l_adv = l_adv.item<double>();
      b.l_vgg = l_vgg.item<double>();
      b.l_fm = l_fm.item<double>();
      b.l_g_total = l_g.item<double>();
      if (finite(b)) {
        g_opt.zero_grad();
        l_g.backward();
        if (tc.grad_clip > 0) torch::nn::utils::clip_grad_norm_(g->parameters(), tc.grad_clip);
        g_opt.step();
      }
      set_requires_grad(*d, true);
    }

    if (!finite(b)) {
      const auto last = result.checkpoints.empty() ? std::string("none") : result.checkpoints.back().string();
      throw NumericError("non-finite loss at step " + std::to_string(step) + "; last good checkpoint: " + last);
    }
    log.append(step, b);
    result.history.push_back(b);
    result.steps = step;
    if (!options.run_dir.empty() && tc.checkpoint_interval > 0 &&
        (step % tc.checkpoint_interval == 0 || step == steps)) {
      auto path = options.run_dir / ("ckpt_" + std::to_string(step) + ".vqe");
      save_checkpoint(path, model, step);
      result.checkpoints.push_back(path);
    }
    if (options.on_step) options.on_step(step, b);
    if (options.stop && options.stop(step)) break;
  }
  g->eval();
  d->eval();
  return result;
}

EvalResult evaluate(Model& model, const SampleSet& set, std::size_t max_samples, std::optional<int> qp_as) {
  EvalResult r;
  const auto n = max_samples ? std::min(max_samples, set.size()) : set.size();
  if (n == 0) throw InvalidInputError("evaluation set is empty");
  torch::NoGradGuard guard;
  model.generator->eval();
  double seconds = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = set.get(i);
    const auto code = encode_qp(qp_as.value_or(s.qp.value), model.config.qp_vocabulary);
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = enhance_frame(s.compressed, code, model.generator);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.psnr_compressed += psnr(s.compressed.target, s.raw_target);
    r.psnr_enhanced += psnr(out, s.raw_target);
    r.ssim_compressed += ssim(s.compressed.target, s.raw_target);
    r.ssim_enhanced += ssim(out, s.raw_target);
    auto as4 = [](const Frame& f) { return f.data().unsqueeze(0).unsqueeze(0); };
    r.l_vgg += perceptual(model.generator->backbone(), as4(out), as4(s.raw_target)).item<double>();
  }
  const auto dn = static_cast<double>(n);
  r.psnr_compressed /= dn;
  r.psnr_enhanced /= dn;
  r.ssim_compressed /= dn;
  r.ssim_enhanced /= dn;
  r.l_vgg /= dn;
  r.frames_per_second = seconds > 0 ? dn / seconds : 0;
  r.samples = n;
  return r;
}

std::vector<AblationRow> run_ablation_grid(const ModelConfig& base, const std::vector<AblationEntry>& rows,
                                           SampleSet& train_set, const SampleSet& eval_set, const fs::path& run_dir,
                                           std::optional<int> steps, std::size_t max_eval_samples) {
  for (const auto& e : rows) {
    try {
      e.mask.validate();
    } catch (const ConfigError& err) {
      throw ConfigError("ablation row " + e.name + ": " + err.what());
    }
  }
  std::vector<AblationRow> out;
  for (const auto& e : rows) {
    auto cfg = base;
    cfg.ablation = e.mask;
    auto model = build_model(cfg);
    SampleStream stream(train_set, cfg.seed);
    TrainOptions opts;
    opts.steps = steps;
    if (!run_dir.empty()) opts.run_dir = run_dir / ("row_" + e.name);
    auto trained = train(model, stream, opts);
    AblationRow row;
    row.name = e.name;
    row.components = e.mask.describe();
    row.generator_parameters = count_parameters(model).at("generator");
    row.eval = evaluate(model, eval_set, max_eval_samples);
    if (!trained.checkpoints.empty()) row.checkpoint = trained.checkpoints.back();
    out.push_back(std::move(row));
  }
  if (!run_dir.empty()) {
    fs::create_directories(run_dir);
    std::ofstream tsv(run_dir / "ablation.tsv");
    std::ofstream md(run_dir / "ablation.md");
    if (!tsv || !md) throw IoError("cannot write ablation report in " + run_dir.string());
    tsv << "row\tparameters\tpsnr_compressed\tpsnr_enhanced\tssim_enhanced\tl_vgg\tframes_per_second\tcomponents\n";
    md << "| row | parameters | PSNR in | PSNR out | SSIM out | l_vgg | frames/s |\n"
          "|---|---:|---:|---:|---:|---:|---:|\n";
    char buf[512];
    for (const auto& r : out) {
      std::snprintf(buf, sizeof(buf), "%s\t%lld\t%.4f\t%.4f\t%.5f\t%.6g\t%.3f\t%s\n", r.name.c_str(),
                    static_cast<long long>(r.generator_parameters), r.eval.psnr_compressed, r.eval.psnr_enhanced,
                    r.eval.ssim_enhanced, r.eval.l_vgg, r.eval.frames_per_second, r.components.c_str());
      tsv << buf;
      std::snprintf(buf, sizeof(buf), "| %s | %lld | %.2f | %.2f | %.4f | %.4g | %.2f |\n", r.name.c_str(),
                    static_cast<long long>(r.generator_parameters), r.eval.psnr_compressed, r.eval.psnr_enhanced,
                    r.eval.ssim_enhanced, r.eval.l_vgg, r.eval.frames_per_second);
      md << buf;
    }
  }
  return out;
}

CrossQpMatrix cross_qp_eval(const std::map<std::string, fs::path>& checkpoints,
                            const std::map<int, std::vector<LoadedPair>>& test_sets, std::int64_t crop,
                            std::size_t max_samples) {
  CrossQpMatrix m;
  std::map<int, SampleSet> sets;
  for (const auto& [qp, pairs] : test_sets) {
    m.qps.push_back(qp);
    sets.emplace(qp, SampleSet(pairs, {qp}, {qp}, crop, 0));
  }
  for (const auto& [qp, set] : sets) {
    double total = 0;
    const auto n = max_samples ? std::min(max_samples, set.size()) : set.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = set.get(i);
      total += psnr(s.compressed.target, s.raw_target);
    }
    m.psnr_compressed.push_back(n ? total / static_cast<double>(n) : std::nan(""));
  }
  for (const auto& [tag, path] : checkpoints) {
    auto loaded = load_checkpoint(path);
    const auto& vocab = loaded.model.config.qp_vocabulary;
    std::vector<double> row;
    for (const auto& [qp, set] : sets) {
      std::optional<int> as;
      if (vocab.size() == 1) as = vocab.front();
      else if (std::find(vocab.begin(), vocab.end(), qp) == vocab.end()) {
        row.push_back(std::nan(""));
        continue;
      }
      row.push_back(evaluate(loaded.model, set, max_samples, as).psnr_enhanced);
    }
    m.models.push_back(tag);
    m.psnr_enhanced.push_back(std::move(row));
  }
  return m;
}

void write_cross_qp(const fs::path& dir, const CrossQpMatrix& m) {
  fs::create_directories(dir);
  std::ofstream tsv(dir / "cross_qp.tsv");
  std::ofstream md(dir / "cross_qp.md");
  if (!tsv || !md) throw IoError("cannot write cross-QP report in " + dir.string());
  auto cell = [](double v) {
    if (std::isnan(v)) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  tsv << "model";
  md << "| model (PSNR dB) |";
  for (int qp : m.qps) {
    tsv << "\tqp" << qp;
    md << " QP " << qp << " |";
  }
  tsv << '\n';
  md << "\n|---|";
  for (std::size_t i = 0; i < m.qps.size(); ++i) md << "---:|";
  md << '\n';
  auto emit = [&](const std::string& name, const std::vector<double>& row) {
    tsv << name;
    md << "| " << name << " |";
    for (double v : row) {
      tsv << '\t' << cell(v);
      md << ' ' << cell(v) << " |";
    }
    tsv << '\n';
    md << '\n';
  };
  emit("compressed", m.psnr_compressed);
  for (std::size_t i = 0; i < m.models.size(); ++i) emit(m.models[i], m.psnr_enhanced[i]);
}

}  // namespace vqe
