#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vqe/data.hpp"
#include "vqe/losses.hpp"
#include "vqe/pipeline.hpp"

namespace vqe {

struct TrainOptions {
  /// Receives losses.tsv and ckpt_<step>.vqe files; empty writes nothing.
  std::filesystem::path run_dir;
  /// Overrides config.train.steps when set.
  std::optional<int> steps;
  bool update_discriminator = true;
  std::function<void(int step, const LossBundle&)> on_step;
  /// Checked after every step; returning true ends training there.
  std::function<bool(int step)> stop;
};

struct TrainResult {
  int steps = 0;
  std::vector<LossBundle> history;  // one entry per step, 1-based step = index + 1
  std::vector<std::filesystem::path> checkpoints;
};

/// Batched tensors of a list of samples.
struct Batch {
  torch::Tensor prev, cur, next, raw, one_hot;  // N x 1 x H x W, N x |vocab|
};
Batch collate(const std::vector<TrainingSample>& samples);

/// Alternating least-squares GAN training: per step one discriminator update
/// on a batch, then one generator update on the next batch, both with Adam.
/// Throws NumericError on a non-finite loss, naming the last checkpoint written.
TrainResult train(Model& model, SampleStream& stream, const TrainOptions& options = {});

struct EvalResult {
  double psnr_compressed = 0;  // compressed vs raw, per-sample average
  double psnr_enhanced = 0;    // enhanced vs raw
  double ssim_compressed = 0, ssim_enhanced = 0;
  double l_vgg = 0;             // perceptual distance of enhanced vs raw
  double frames_per_second = 0;
  std::size_t samples = 0;
};

/// Enhances every sample of the set (one at a time) and averages the scores.
/// `qp_as` feeds that QP code to the model instead of each sample's own QP.
EvalResult evaluate(Model& model, const SampleSet& set, std::size_t max_samples = 0, std::optional<int> qp_as = {});

struct AblationEntry {
  std::string name;
  AblationMask mask;
};

struct AblationRow {
  std::string name;
  std::string components;
  std::int64_t generator_parameters = 0;
  EvalResult eval;
  std::filesystem::path checkpoint;
};

/// Trains and evaluates one model per entry. Every mask is validated before
/// any training starts. Writes ablation.tsv and ablation.md (and row
/// checkpoints) to run_dir when it is set.
std::vector<AblationRow> run_ablation_grid(const ModelConfig& base, const std::vector<AblationEntry>& rows,
                                           SampleSet& train_set, const SampleSet& eval_set,
                                           const std::filesystem::path& run_dir, std::optional<int> steps = {},
                                           std::size_t max_eval_samples = 0);

struct CrossQpMatrix {
  std::vector<std::string> models;  // row tags
  std::vector<int> qps;             // column QPs
  std::vector<std::vector<double>> psnr_enhanced;  // NaN when the model cannot take that QP
  std::vector<double> psnr_compressed;              // per column
};

/// Evaluates every (model, test QP) cell. A model trained on a single QP is
/// fed its own QP code for every test set; a multi-QP model must know the QP.
CrossQpMatrix cross_qp_eval(const std::map<std::string, std::filesystem::path>& checkpoints,
                            const std::map<int, std::vector<LoadedPair>>& test_sets, std::int64_t crop,
                            std::size_t max_samples = 0);

void write_cross_qp(const std::filesystem::path& dir, const CrossQpMatrix& m);

}  // namespace vqe
