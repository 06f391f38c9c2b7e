// Acceptance checks. `vqe_acceptance` runs every criterion; `vqe_acceptance N...`
// runs the listed ones. One PASS/FAIL line per criterion; exit status 1 when
// any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "vqe/checkpoint.hpp"
#include "vqe/data.hpp"
#include "vqe/losses.hpp"
#include "vqe/metrics.hpp"
#include "vqe/pipeline.hpp"
#include "vqe/train.hpp"

using namespace vqe;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_abs(const torch::Tensor& a, const torch::Tensor& b) {
  return (a.to(torch::kFloat64) - b.to(torch::kFloat64)).abs().max().item<double>();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("vqe_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<Frame> random_frames(int n, std::int64_t h, std::int64_t w) {
  std::vector<Frame> out;
  for (int i = 0; i < n; ++i) out.emplace_back(torch::rand({h, w}), i);
  return out;
}

// 1 -------------------------------------------------------------------------
void attention_oracle(Outcome& o) {
  const auto t0 = Clock::now();
  torch::manual_seed(101);
  std::mt19937 rng(101);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const int c = pick(1, 4), h = pick(1, 6), w = pick(1, 6), proj = pick(0, 1) ? 0 : pick(1, 4);
    AttentionBlock block(c, proj, 1, false);
    {
      torch::NoGradGuard guard;
      for (auto& p : block->parameters()) p.normal_(0, 1);
    }
    auto t = torch::randn({1, c, h, w}), r = torch::randn({1, c, h, w});
    const int cp = proj ? proj : c;
    auto want = oracle::attention(t[0], r[0], block->query->weight.view({cp, c}), block->query->bias,
                                  block->key->weight.view({cp, c}), block->key->bias);
    torch::NoGradGuard guard;
    worst = std::max(worst, max_abs(attend(block, t, r)[0], want));
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-5, "max-abs <= 1e-5");
  o.require(secs < 30, "runtime < 30 s");
  o.detail << "200 cases, max-abs " << worst << ", " << secs << " s";
}

// 2 -------------------------------------------------------------------------
void correlation_stochastic(Outcome& o) {
  torch::manual_seed(202);
  std::mt19937 rng(202);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double row_err = 0, lo_entry = 1, hi_entry = 0, convex_excess = 0;
  torch::NoGradGuard guard;
  for (int i = 0; i < 100; ++i) {
    const int c = pick(1, 6), h = pick(1, 8), w = pick(1, 8);
    AttentionBlock block(c, 0, 1, false);
    auto t = 3 * torch::randn({1, c, h, w}), r = 3 * torch::randn({1, c, h, w});
    auto m = correlation_map(block, t, r);
    auto sums = m.weights.to(torch::kFloat64).sum(-1);
    row_err = std::max(row_err, (sums - 1).abs().max().item<double>());
    lo_entry = std::min(lo_entry, m.weights.min().item<double>());
    hi_entry = std::max(hi_entry, m.weights.max().item<double>());
    auto out = attend(block, t, r);
    auto rmin = std::get<0>(r.flatten(2).min(2)).unsqueeze(-1).unsqueeze(-1);
    auto rmax = std::get<0>(r.flatten(2).max(2)).unsqueeze(-1).unsqueeze(-1);
    convex_excess = std::max({convex_excess, (rmin - out).max().item<double>(), (out - rmax).max().item<double>()});
  }
  o.require(row_err <= 1e-6, "rows sum to 1 +- 1e-6");
  o.require(lo_entry >= 0 && hi_entry <= 1, "entries in [0,1]");
  o.require(convex_excess <= 1e-6, "convex bound within 1e-6");
  o.detail << "100 inputs, row error " << row_err << ", entries [" << lo_entry << ", " << hi_entry
           << "], convex excess " << std::max(0.0, convex_excess);
}

// 3 -------------------------------------------------------------------------
void permutation_invariance(Outcome& o) {
  torch::manual_seed(303);
  double worst = 0;
  torch::NoGradGuard guard;
  for (int i = 0; i < 50; ++i) {
    const std::int64_t c = 1 + i % 4, h = 2 + i % 5, w = 2 + (i * 3) % 5;
    AttentionBlock block(static_cast<int>(c), 0, 1, false);
    auto t = torch::randn({1, c, h, w}), r = torch::randn({1, c, h, w});
    auto perm = torch::randperm(h * w);
    auto rp = r.flatten(2).index_select(2, perm).view_as(r);
    worst = std::max(worst, max_abs(attend(block, t, r), attend(block, t, rp)));
  }
  o.require(worst <= 1e-6, "output unchanged within 1e-6");
  o.detail << "50 permutations, max change " << worst;
}

// 4 -------------------------------------------------------------------------
void gradient_checks(Outcome& o) {
  const auto t0 = Clock::now();
  torch::manual_seed(404);
  const auto f64 = torch::kFloat64;

  AttentionBlock block(3, 2, 1, false);
  block->to(f64);
  auto t = torch::randn({1, 3, 3, 3}, f64), r = torch::randn({1, 3, 3, 3}, f64);
  auto probe = torch::randn({1, 3, 3, 3}, f64);
  std::vector<torch::Tensor> leaves{t, r};
  for (auto& p : block->parameters()) leaves.push_back(p);
  const double e_att = oracle::gradcheck([&] { return (attend(block, t, r) * probe).sum(); }, leaves);

  QPAdapt adapt(3, 2, std::vector<int>{3, 3, 3}, true, true);
  adapt->to(f64);
  auto feats = torch::randn({1, 3, 4, 4}, f64);
  auto one_hot = torch::tensor({{0.0, 1.0}}, f64);
  auto probe_q = torch::randn({1, 3, 4, 4}, f64);
  namespace F = torch::nn::functional;
  auto stage = [&] {
    auto gate = adapt->gate(one_hot, 0).unsqueeze(-1).unsqueeze(-1);
    auto y = F::leaky_relu(adapt->stages[0]->forward(feats * gate), F::LeakyReLUFuncOptions().negative_slope(0.2));
    return (y * probe_q).sum();
  };
  const double e_qp = oracle::gradcheck(stage, {feats, adapt->fcs[0]->weight, adapt->fcs[0]->bias,
                                                adapt->stages[0]->weight, adapt->stages[0]->bias});

  const std::array<int, 6> taps{2, 2, 2, 3, 2, 2};
  DecoderBranch dec(taps, std::vector<int>{2, 3, 2, 2, 2});
  dec->to(f64);
  FeaturePyramid pyr;
  int i = 0;
  for (const auto& tap : kTargetTaps) {
    const std::int64_t s = std::int64_t{16} >> (tap.level - 1);
    pyr.taps[tap] = torch::randn({1, taps[static_cast<std::size_t>(i++)], s, s}, f64);
  }
  std::map<int, torch::Tensor> att{{5, torch::randn({1, 2, 1, 1}, f64)}, {4, torch::randn({1, 2, 2, 2}, f64)}};
  auto probe_d = torch::randn({1, 2, 16, 16}, f64);
  std::vector<torch::Tensor> dl{att.at(5), att.at(4), pyr.taps.at({5, 4}), pyr.taps.at({4, 1})};
  for (auto& p : dec->convs[0]->parameters()) dl.push_back(p);
  for (auto& p : dec->convs[1]->parameters()) dl.push_back(p);
  const double e_dec = oracle::gradcheck([&] { return (dec->forward(pyr, att) * probe_d).sum(); }, dl);

  const double secs = seconds_since(t0);
  o.require(e_att <= 1e-3, "attention block");
  o.require(e_qp <= 1e-3, "QP-gated stage");
  o.require(e_dec <= 1e-3, "decoder levels 5 and 4");
  o.require(secs < 120, "runtime < 2 min");
  o.detail << "relative errors: attention " << e_att << ", gated stage " << e_qp << ", decoder " << e_dec << "; " << secs
           << " s";
}

// 5 -------------------------------------------------------------------------
void qp_conditioning(Outcome& o) {
  torch::manual_seed(505);
  const std::vector<int> vocab{22, 37};
  QPAdapt wide(1000, 2, std::vector<int>{4, 4, 4}, true, true);
  double min_gate = 1;
  {
    torch::NoGradGuard guard;
    wide->fcs[0]->weight.normal_(0, 3);
    wide->fcs[0]->bias.normal_(0, 3);
    for (int q : vocab) min_gate = std::min(min_gate, qp_gate(wide, encode_qp(q, vocab), 0).min().item<double>());
  }
  o.require(min_gate > 0, "gates strictly positive");

  auto cfg = ModelConfig::tiny();
  cfg.qp_vocabulary = vocab;
  auto model = build_model(cfg);
  auto frames = random_frames(3, 32, 32);
  const auto trip = make_triplet(frames, 1);
  const double diff =
      max_abs(enhance_frame(trip, encode_qp(22, vocab), model.generator).data(),
              enhance_frame(trip, encode_qp(37, vocab), model.generator).data());
  o.require(diff > 1e-9, "distinct codes give distinct outputs");

  auto off = cfg;
  off.ablation.qp_adaptation = false;
  auto plain = build_model(off);
  const auto delta = count_parameters(model).at("generator") - count_parameters(plain).at("generator");
  std::int64_t fc = 0;
  for (int cin : model.generator->adapt->stage_inputs()) fc += (static_cast<std::int64_t>(vocab.size()) + 1) * cin;
  o.require(delta == fc, "parameter delta equals FC block sizes");
  o.detail << "min gate over 2000 logits " << min_gate << ", code L-inf difference " << diff << ", parameter delta "
           << delta << " (FC blocks " << fc << ")";
}

// 6 -------------------------------------------------------------------------
void shape_identity(Outcome& o) {
  auto cfg = ModelConfig::tiny();
  auto model = build_model(cfg);
  auto frames = random_frames(4, 128, 128);
  const auto qp = encode_qp(22, cfg.qp_vocabulary);
  auto y = enhance_frame(make_triplet(frames, 1), qp, model.generator);
  o.require(y.height() == 128 && y.width() == 128, "128x128 output");

  {
    torch::NoGradGuard guard;
    model.generator->adapt->output->weight.zero_();
    model.generator->adapt->output->bias.zero_();
  }
  auto same = enhance_frame(make_triplet(frames, 2), qp, model.generator);
  o.require(torch::equal(same.data(), frames[2].data()), "zeroed projection returns the compressed frame");

  auto fresh = build_model(cfg);
  auto seq = enhance_sequence(frames, qp, fresh.generator);
  o.require(seq.size() == frames.size(), "one output per input frame");
  auto first = enhance_frame(ClipTriplet(frames[0], frames[0], frames[1]), qp, fresh.generator);
  auto last = enhance_frame(ClipTriplet(frames[2], frames[3], frames[3]), qp, fresh.generator);
  o.require(torch::equal(seq.front().data(), first.data()), "first frame duplicates itself as predecessor");
  o.require(torch::equal(seq.back().data(), last.data()), "last frame duplicates itself as successor");
  auto trip0 = make_triplet(frames, 0), trip3 = make_triplet(frames, 3);
  o.require(torch::equal(trip0.preceding.data(), frames[0].data()) &&
                torch::equal(trip3.succeeding.data(), frames[3].data()),
            "boundary triplets");
  o.detail << "output " << y.height() << "x" << y.width() << ", " << seq.size() << " frames out for " << frames.size()
           << " in";
}

// 7 -------------------------------------------------------------------------
void discriminator_locality(Outcome& o) {
  torch::manual_seed(707);
  PatchDiscriminator d(DiscriminatorConfig{});
  torch::NoGradGuard guard;
  auto x = torch::rand({1, 1, 128, 128});
  auto base = d->forward(x);
  std::mt19937 rng(707);
  int changed = 0;
  for (int k = 0; k < 16; ++k) {
    const auto r = std::uniform_int_distribution<std::int64_t>(0, base.size(2) - 1)(rng);
    const auto c = std::uniform_int_distribution<std::int64_t>(0, base.size(3) - 1)(rng);
    const auto win = d->window(r, c);
    auto rows = torch::arange(128).unsqueeze(1), cols = torch::arange(128).unsqueeze(0);
    auto inside = (rows >= win.row0) & (rows <= win.row1) & (cols >= win.col0) & (cols <= win.col1);
    auto y = torch::where(inside, x[0][0], torch::rand({128, 128})).unsqueeze(0).unsqueeze(0);
    if (d->forward(y)[0][0][r][c].item<float>() != base[0][0][r][c].item<float>()) ++changed;
  }
  o.require(changed == 0, "outside-window perturbations leave elements unchanged");
  Frame f(x[0][0].contiguous());
  const double real = realness(d, f);
  o.require(real == discriminate(d, f).mean().item<double>(), "realness is the exact map mean");
  o.detail << "receptive field " << d->receptive_field() << ", 16 elements, " << changed << " changed";
}

// 8 -------------------------------------------------------------------------
void loss_identities(Outcome& o) {
  torch::manual_seed(808);
  auto cfg = ModelConfig::tiny();
  Backbone backbone(cfg.backbone);
  PatchDiscriminator d(cfg.discriminator);
  auto x = torch::rand({2, 1, 64, 64});
  const double vgg = perceptual(backbone, x, x).item<double>();
  const double fm = feature_matching(d, x, x, {}).item<double>();
  const double adv = adversarial_g(torch::ones({2, 1, 6, 6})).item<double>();
  const double ld = discriminator_loss(torch::ones({2, 1, 6, 6}), torch::zeros({2, 1, 6, 6})).item<double>();
  const auto total = generator_total(1.0, 0.1, 0.2, 10, 10).l_g_total;
  o.require(vgg == 0, "l_vgg(x,x) = 0");
  o.require(fm == 0, "l_fm(x,x) = 0");
  o.require(adv == 0, "adversarial_g = 0 at scores 1");
  o.require(ld == 0, "discriminator_loss = 0 at (1, 0)");
  o.require(std::abs(total - 4.0) < 1e-12, "1 + 10*0.1 + 10*0.2 = 4");
  o.detail << "l_vgg " << vgg << ", l_fm " << fm << ", adv " << adv << ", l_d " << ld << ", total " << total;
}

// 9 -------------------------------------------------------------------------
void toy_overfit(Outcome& o) {
  const auto t0 = Clock::now();
  auto dir = scratch("overfit");
  const std::vector<int> qps{22, 37};
  auto manifest = write_synthetic_corpus(dir, 8, 64, 64, 3, qps, 909);
  std::vector<LoadedPair> pairs;
  for (const auto& p : read_manifest(manifest)) pairs.push_back(load_pair(p, qps));
  SampleSet train_set(pairs, qps, qps, 64, 909);
  SampleSet probe_set(pairs, qps, qps, 64, 0);

  // tiny backbone and discriminator, full-width QP head
  auto cfg = ModelConfig::tiny();
  cfg.adapt.stage_widths = {64, 64, 64};
  cfg.qp_vocabulary = qps;
  cfg.seed = 9;
  cfg.train.batch_size = 16;
  cfg.train.learning_rate = 1e-3;
  auto model = build_model(cfg);
  SampleStream stream(train_set, 909);

  const int kMaxSteps = 500, kEvery = 50;
  double vgg10 = 0, psnr_in = 0, vgg_end = 0, psnr_out = 0;
  int stopped = 0;
  TrainOptions opts;
  opts.steps = kMaxSteps;
  opts.stop = [&](int step) {
    if (step != 10 && step % kEvery != 0) return false;
    auto e = evaluate(model, probe_set);
    model.generator->train();
    if (step == 10) {
      vgg10 = e.l_vgg;
      psnr_in = e.psnr_compressed;
      return false;
    }
    vgg_end = e.l_vgg;
    psnr_out = e.psnr_enhanced;
    stopped = step;
    return vgg_end <= 0.5 * vgg10 && psnr_out - psnr_in >= 0.5;
  };
  train(model, stream, opts);
  const double secs = seconds_since(t0);
  const double drop = 1 - vgg_end / vgg10, gain = psnr_out - psnr_in;
  o.require(drop >= 0.5, "l_vgg drop >= 50% from step 10");
  o.require(gain >= 0.5, "PSNR gain >= 0.5 dB");
  o.require(secs <= 600, "runtime <= 10 min");
  o.detail << "steps " << stopped << ", l_vgg " << vgg10 << " -> " << vgg_end << " (" << 100 * drop << "% drop), PSNR "
           << psnr_in << " -> " << psnr_out << " dB (" << gain << "), " << secs << " s";
}

// 10 ------------------------------------------------------------------------
void ablation_grid(Outcome& o) {
  std::int64_t previous = -1;
  std::ostringstream counts;
  bool increasing = true;
  for (char row : kAblationRows) {
    auto cfg = ModelConfig::tiny();
    cfg.ablation = AblationMask::row(row);
    try {
      auto m = build_model(cfg);
      const auto n = count_parameters(m).at("generator");
      increasing = increasing && n > previous;
      previous = n;
      counts << row << "=" << n << " ";
    } catch (const Error& e) {
      o.require(false, std::string("row ") + row + " constructs: " + e.what());
    }
  }
  o.require(increasing, "counts strictly increase A to I");

  auto expect_rejected = [&](AblationMask m, const std::string& dependency) {
    auto cfg = ModelConfig::tiny();
    cfg.ablation = m;
    try {
      build_model(cfg);
      o.require(false, "mask accepted without " + dependency);
    } catch (const ConfigError& e) {
      o.require(std::string(e.what()).find(dependency) != std::string::npos, "message names " + dependency);
    }
  };
  auto m1 = AblationMask::row('C');
  m1.preceding_frame = false;
  expect_rejected(m1, "preceding frame");
  auto m2 = AblationMask::row('I');
  m2.first_branch = false;
  expect_rejected(m2, "first branch");
  auto m3 = AblationMask::row('F');
  m3.succeeding_frame = true;
  expect_rejected(m3, "attention block of the first branch");
  o.detail << "generator parameters " << counts.str() << "; three invalid masks rejected";
}

// 11 ------------------------------------------------------------------------
void attention_downsampling(Outcome& o) {
  auto cfg = ModelConfig{};
  cfg.seed = 11;
  auto model = build_model(cfg);
  auto frames = random_frames(3, 128, 128);
  const auto trip = make_triplet(frames, 1);
  const auto qp = encode_qp(27, cfg.qp_vocabulary);
  std::map<int, double> ms;
  for (int k : {1, 2, 4, 6}) {
    model.generator->set_attention_downsample(k);
    auto y = enhance_frame(trip, qp, model.generator);
    o.require(y.height() == 128 && y.width() == 128 && torch::isfinite(y.data()).all().item<bool>(),
              "factor " + std::to_string(k) + " finite 128x128");
    std::vector<double> runs;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = Clock::now();
      enhance_frame(trip, qp, model.generator);
      runs.push_back(1e3 * seconds_since(t0));
    }
    std::sort(runs.begin(), runs.end());
    ms[k] = runs[1];
  }
  // a model built at factor 4 and switched to 1 against one built at 1
  auto direct = build_model(cfg);
  auto switched_cfg = cfg;
  switched_cfg.attention.downsample_factor = 4;
  auto switched = build_model(switched_cfg);
  load_module_blocks(*switched.generator, Container{"{}", module_blocks(*direct.generator, "")}, "");
  switched.generator->set_attention_downsample(1);
  o.require(torch::equal(enhance_frame(trip, qp, direct.generator).data(),
                         enhance_frame(trip, qp, switched.generator).data()),
            "factor 1 bit-matches the undownsampled path");
  o.require(ms[6] < ms[1], "factor 6 faster than factor 1");
  o.detail << "median ms per 128x128 frame: s1 " << ms[1] << ", s2 " << ms[2] << ", s4 " << ms[4] << ", s6 " << ms[6];
}

// 12 ------------------------------------------------------------------------
void tiling(Outcome& o) {
  auto tiles = plan_tiles(256, 256, 128);
  auto cover = torch::zeros({256, 256}, torch::kInt32);
  for (const auto& t : tiles) cover.narrow(0, t.row, t.height).narrow(1, t.col, t.width).add_(1);
  o.require(tiles.size() == 4, "four tiles");
  o.require((cover == 1).all().item<bool>(), "every pixel written once");

  auto frames = random_frames(2, 256, 256);
  const auto qp_full = encode_qp(22, ModelConfig{}.qp_vocabulary);
  auto full = build_model(ModelConfig{});
  TilingOptions opt;
  opt.tile_size = 128;
  opt.context = kAutoContext;
  auto tiled_full = enhance_sequence(frames, qp_full, full.generator, opt);
  bool finite = true;
  for (const auto& f : tiled_full) finite = finite && torch::isfinite(f.data()).all().item<bool>();
  o.require(finite, "no NaN with attention enabled");

  auto cfg = ModelConfig{};
  cfg.ablation = AblationMask::row('B');
  auto masked = build_model(cfg);
  auto whole = enhance_sequence(frames, qp_full, masked.generator);
  auto tiled = enhance_sequence(frames, qp_full, masked.generator, opt);
  bool exact = true;
  for (std::size_t i = 0; i < frames.size(); ++i) exact = exact && torch::equal(whole[i].data(), tiled[i].data());
  o.require(exact, "tiled equals untiled without attention");

  TilingOptions bare;
  bare.tile_size = 128;
  auto seams = enhance_sequence(frames, qp_full, masked.generator, bare);
  o.detail << "4 tiles, context " << masked.generator->receptive_radius() << " px; tiles without context differ by "
           << max_abs(whole[0].data(), seams[0].data());
}

// 13 ------------------------------------------------------------------------
void io_round_trips(Outcome& o) {
  auto dir = scratch("io");
  write_sequence(dir / "a.y4m", synthetic_sequence(48, 32, 3, 13), ContainerKind::kY4M);
  auto seq = read_sequence(dir / "a.y4m", {});
  write_sequence(dir / "b.y4m", seq, ContainerKind::kY4M);
  o.require(slurp(dir / "a.y4m") == slurp(dir / "b.y4m"), "Y4M read-write identical");

  auto model = build_model(ModelConfig::tiny());
  save_checkpoint(dir / "a.vqe", model, 3);
  auto loaded = load_checkpoint(dir / "a.vqe");
  save_checkpoint(dir / "b.vqe", loaded.model, loaded.step);
  o.require(slurp(dir / "a.vqe") == slurp(dir / "b.vqe"), "checkpoint save-load-save identical");

  auto manifest = write_synthetic_corpus(dir / "corpus", 2, 48, 48, 3, {22, 37}, 13);
  std::vector<LoadedPair> pairs;
  for (const auto& p : read_manifest(manifest)) pairs.push_back(load_pair(p, {22, 37}));
  auto run = [&](const std::string& name) {
    auto cfg = ModelConfig::tiny();
    cfg.train.batch_size = 2;
    auto m = build_model(cfg);
    SampleSet set(pairs, {22, 37}, {22, 37}, 48, 5);
    SampleStream stream(set, 5);
    TrainOptions opts;
    opts.run_dir = dir / name;
    opts.steps = 4;
    train(m, stream, opts);
    return slurp(dir / name / "losses.tsv");
  };
  const auto a = run("run_a"), b = run("run_b");
  o.require(!a.empty() && a == b, "fixed-seed loss logs identical");
  o.detail << "Y4M " << fs::file_size(dir / "a.y4m") << " B, checkpoint " << fs::file_size(dir / "a.vqe")
           << " B, loss log " << a.size() << " B";
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> run;
};

const std::vector<Criterion> kCriteria{
    {1, "attention oracle equivalence", attention_oracle},
    {2, "correlation-map stochasticity", correlation_stochastic},
    {3, "permutation invariance", permutation_invariance},
    {4, "gradient checks", gradient_checks},
    {5, "QP conditioning", qp_conditioning},
    {6, "shape and identity contracts", shape_identity},
    {7, "patch-discriminator locality", discriminator_locality},
    {8, "loss identities", loss_identities},
    {9, "toy overfit", toy_overfit},
    {10, "ablation grid", ablation_grid},
    {11, "attention downsampling", attention_downsampling},
    {12, "tiling", tiling},
    {13, "I/O round-trips", io_round_trips},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  bool all_pass = true;
  for (const auto& c : kCriteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Outcome o;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    all_pass = all_pass && o.pass;
    std::printf("%-4s %2d %-32s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
