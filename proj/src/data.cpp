#include "vqe/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace vqe {

namespace fs = std::filesystem;

ContainerKind parse_container_kind(const std::string& s) {
  if (s == "y4m") return ContainerKind::kY4M;
  if (s == "yuv420" || s == "yuv") return ContainerKind::kRaw420;
  if (s == "yuv400" || s == "y") return ContainerKind::kRaw400;
  throw ConfigError("unknown container '" + s + "' (expected y4m, yuv420 or yuv400)");
}

std::string container_kind_name(ContainerKind k) {
  switch (k) {
    case ContainerKind::kY4M: return "y4m";
    case ContainerKind::kRaw420: return "yuv420";
    case ContainerKind::kRaw400: return "yuv400";
  }
  return "?";
}

VideoFormat format_for_path(const fs::path& path, std::int64_t width, std::int64_t height) {
  VideoFormat f;
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  f.kind = ext == ".y4m" ? ContainerKind::kY4M : ext == ".y" ? ContainerKind::kRaw400 : ContainerKind::kRaw420;
  f.width = width;
  f.height = height;
  return f;
}

VideoSequence VideoSequence::with_luma(std::vector<Frame> frames) const {
  if (frames.size() != luma.size()) throw InvalidInputError("frame count changed");
  VideoSequence out = *this;
  for (const auto& f : frames)
    if (f.height() != height || f.width() != width) throw ShapeError("frame size changed");
  out.luma = std::move(frames);
  return out;
}

namespace {

std::int64_t chroma_bytes(std::int64_t w, std::int64_t h) { return 2 * ((w + 1) / 2) * ((h + 1) / 2); }

std::vector<std::uint8_t> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

VideoSequence read_y4m(const fs::path& path, const VideoFormat& fmt) {
  const auto bytes = read_all(path);
  auto line_end = std::find(bytes.begin(), bytes.end(), std::uint8_t('\n'));
  if (line_end == bytes.end()) throw FormatError(path.string() + ": missing Y4M stream header");
  std::istringstream header(std::string(bytes.begin(), line_end));
  std::string tok;
  header >> tok;
  if (tok != "YUV4MPEG2") throw FormatError(path.string() + ": not a YUV4MPEG2 stream");

  VideoSequence seq;
  std::string params;
  std::string chroma = "420";
  while (header >> tok) {
    const char key = tok[0];
    const auto val = tok.substr(1);
    try {
      if (key == 'W') seq.width = std::stoll(val);
      else if (key == 'H') seq.height = std::stoll(val);
      else if (key == 'C') chroma = val;
      else params += (params.empty() ? "" : " ") + tok;
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ": bad header token " + tok);
    }
  }
  if (seq.width <= 0 || seq.height <= 0) throw FormatError(path.string() + ": header lacks W/H");
  if ((fmt.width && fmt.width != seq.width) || (fmt.height && fmt.height != seq.height))
    throw FormatError(path.string() + ": header says " + std::to_string(seq.width) + "x" +
                      std::to_string(seq.height) + " but " + std::to_string(fmt.width) + "x" +
                      std::to_string(fmt.height) + " was given");
  if (chroma == "mono") seq.has_chroma = false;
  else if (!(chroma == "420" || chroma == "420jpeg" || chroma == "420paldv" || chroma == "420mpeg2"))
    throw FormatError(path.string() + ": unsupported chroma layout C" + chroma + " (8-bit 4:2:0 or mono only)");
  seq.y4m_params = params;

  const auto luma_n = seq.width * seq.height;
  const auto chroma_n = seq.has_chroma ? chroma_bytes(seq.width, seq.height) : 0;
  auto pos = static_cast<std::size_t>(line_end - bytes.begin()) + 1;
  for (int index = 0; pos < bytes.size(); ++index) {
    const auto nl = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), std::uint8_t('\n'));
    const std::string marker(bytes.begin() + static_cast<std::ptrdiff_t>(pos), nl);
    if (nl == bytes.end() || marker.rfind("FRAME", 0) != 0)
      throw IoError(path.string() + ": frame " + std::to_string(index) + " has no FRAME marker");
    pos = static_cast<std::size_t>(nl - bytes.begin()) + 1;
    if (bytes.size() - pos < static_cast<std::size_t>(luma_n + chroma_n))
      throw IoError(path.string() + ": frame " + std::to_string(index) + " is truncated");
    seq.luma.push_back(Frame::from_bytes({bytes.data() + pos, static_cast<std::size_t>(luma_n)}, seq.height,
                                         seq.width, index));
    pos += static_cast<std::size_t>(luma_n);
    seq.chroma.emplace_back(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                            bytes.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(chroma_n)));
    pos += static_cast<std::size_t>(chroma_n);
  }
  return seq;
}

VideoSequence read_raw(const fs::path& path, const VideoFormat& fmt) {
  if (fmt.width <= 0 || fmt.height <= 0) throw ConfigError("raw YUV input needs --width and --height");
  const auto bytes = read_all(path);
  VideoSequence seq;
  seq.width = fmt.width;
  seq.height = fmt.height;
  seq.has_chroma = fmt.kind == ContainerKind::kRaw420;
  const auto luma_n = static_cast<std::size_t>(seq.width * seq.height);
  const auto chroma_n = static_cast<std::size_t>(seq.has_chroma ? chroma_bytes(seq.width, seq.height) : 0);
  const auto frame_n = luma_n + chroma_n;
  if (bytes.size() % frame_n != 0)
    throw IoError(path.string() + ": frame " + std::to_string(bytes.size() / frame_n) + " is truncated (" +
                  std::to_string(bytes.size()) + " bytes is not a multiple of " + std::to_string(frame_n) + ")");
  for (std::size_t i = 0; i < bytes.size() / frame_n; ++i) {
    const auto* p = bytes.data() + i * frame_n;
    seq.luma.push_back(Frame::from_bytes({p, luma_n}, seq.height, seq.width, static_cast<int>(i)));
    seq.chroma.emplace_back(p + luma_n, p + frame_n);
  }
  return seq;
}

}  // namespace

VideoSequence read_sequence(const fs::path& path, const VideoFormat& format) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  auto seq = format.kind == ContainerKind::kY4M ? read_y4m(path, format) : read_raw(path, format);
  if (seq.luma.empty()) throw IoError(path.string() + ": no frames");
  return seq;
}

void write_sequence(const fs::path& path, const VideoSequence& seq, ContainerKind kind) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const bool write_chroma = kind != ContainerKind::kRaw400 && (kind == ContainerKind::kRaw420 || seq.has_chroma);
  const auto chroma_n = static_cast<std::size_t>(chroma_bytes(seq.width, seq.height));
  if (kind == ContainerKind::kY4M) {
    out << "YUV4MPEG2 W" << seq.width << " H" << seq.height;
    if (!seq.y4m_params.empty()) out << ' ' << seq.y4m_params;
    out << (write_chroma ? " C420jpeg" : " Cmono") << '\n';
  }
  for (std::size_t i = 0; i < seq.luma.size(); ++i) {
    if (kind == ContainerKind::kY4M) out << "FRAME\n";
    const auto y = seq.luma[i].to_bytes();
    out.write(reinterpret_cast<const char*>(y.data()), static_cast<std::streamsize>(y.size()));
    if (!write_chroma) continue;
    if (seq.has_chroma && i < seq.chroma.size() && seq.chroma[i].size() == chroma_n) {
      out.write(reinterpret_cast<const char*>(seq.chroma[i].data()), static_cast<std::streamsize>(chroma_n));
    } else {
      const std::vector<char> grey(chroma_n, static_cast<char>(128));
      out.write(grey.data(), static_cast<std::streamsize>(chroma_n));
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

// --- manifest ---------------------------------------------------------------

std::vector<SequencePair> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  std::vector<SequencePair> pairs;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (word != "sequence") throw ConfigError(where + ": expected 'sequence'");
    SequencePair p;
    std::string kind, raw;
    if (!(ss >> p.name >> kind >> p.width >> p.height >> p.frame_count >> raw))
      throw ConfigError(where + ": expected <name> <container> <width> <height> <frames> <raw> <qp>=<path>...");
    p.kind = parse_container_kind(kind);
    p.raw_path = resolve(raw);
    while (ss >> word) {
      const auto eq = word.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected <qp>=<path>, got " + word);
      int qp = 0;
      try {
        qp = std::stoi(word.substr(0, eq));
      } catch (const std::logic_error&) {
        throw ConfigError(where + ": bad QP in " + word);
      }
      if (!p.compressed_path_per_qp.emplace(qp, resolve(word.substr(eq + 1))).second)
        throw ConfigError(where + ": QP " + std::to_string(qp) + " listed twice");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_manifest(const fs::path& path, const std::vector<SequencePair>& pairs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  const auto base = fs::absolute(path).parent_path();
  auto rel = [&](const fs::path& p) { return fs::absolute(p).lexically_relative(base).string(); };
  out << "# name container width height frames raw qp=compressed...\n";
  for (const auto& p : pairs) {
    out << "sequence " << p.name << ' ' << container_kind_name(p.kind) << ' ' << p.width << ' ' << p.height << ' '
        << p.frame_count << ' ' << rel(p.raw_path);
    for (const auto& [qp, cp] : p.compressed_path_per_qp) out << ' ' << qp << '=' << rel(cp);
    out << '\n';
  }
}

LoadedPair load_pair(const SequencePair& pair, const std::vector<int>& qps) {
  LoadedPair lp;
  lp.info = pair;
  const VideoFormat fmt{pair.kind, pair.width, pair.height};
  lp.raw = read_sequence(pair.raw_path, fmt);
  auto frames = pair.frame_count > 0 ? static_cast<std::size_t>(pair.frame_count) : lp.raw.size();
  if (lp.raw.size() < frames)
    throw IoError(pair.name + ": raw stream has " + std::to_string(lp.raw.size()) + " frames, manifest says " +
                  std::to_string(frames));
  lp.raw.luma.resize(frames);
  lp.raw.chroma.resize(frames);
  for (int qp : qps) {
    auto it = pair.compressed_path_per_qp.find(qp);
    if (it == pair.compressed_path_per_qp.end())
      throw ConfigError(pair.name + ": no compressed stream for QP " + std::to_string(qp));
    auto seq = read_sequence(it->second, VideoFormat{pair.kind, lp.raw.width, lp.raw.height});
    if (seq.size() < frames)
      throw IoError(pair.name + " QP " + std::to_string(qp) + ": compressed stream has " + std::to_string(seq.size()) +
                    " frames, expected " + std::to_string(frames));
    seq.luma.resize(frames);
    seq.chroma.resize(frames);
    lp.compressed.emplace(qp, std::move(seq));
  }
  return lp;
}

// --- samples ------------------------------------------------------------------

std::vector<SampleKey> enumerate_samples(const std::vector<LoadedPair>& pairs, const std::vector<int>& qps,
                                         std::int64_t crop) {
  if (crop <= 0) throw ConfigError("crop size must be positive");
  std::vector<SampleKey> keys;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& raw = pairs[i].raw;
    for (int qp : qps) {
      if (!pairs[i].compressed.contains(qp))
        throw ConfigError(pairs[i].info.name + ": no compressed stream for QP " + std::to_string(qp));
      for (int t = 0; t < static_cast<int>(raw.size()); ++t)
        for (std::int64_t r = 0; r + crop <= raw.height; r += crop)
          for (std::int64_t c = 0; c + crop <= raw.width; c += crop) keys.push_back({i, qp, t, r, c});
    }
  }
  return keys;
}

SampleSet::SampleSet(std::vector<LoadedPair> pairs, std::vector<int> qps, std::vector<int> vocabulary,
                     std::int64_t crop, std::uint64_t seed)
    : pairs_(std::move(pairs)), qps_(std::move(qps)), vocab_(std::move(vocabulary)), crop_(crop) {
  validate_vocabulary(vocab_);
  for (int qp : qps_) encode_qp(qp, vocab_);
  keys_ = enumerate_samples(pairs_, qps_, crop_);
  reshuffle(seed);
}

void SampleSet::reshuffle(std::uint64_t seed) {
  std::sort(keys_.begin(), keys_.end());
  std::mt19937_64 rng(seed);
  std::shuffle(keys_.begin(), keys_.end(), rng);
}

TrainingSample SampleSet::get(std::size_t i) const { return materialize(keys_.at(i)); }

TrainingSample SampleSet::materialize(const SampleKey& key) const {
  const auto& pair = pairs_.at(key.pair);
  const auto& comp = pair.compressed.at(key.qp).luma;
  auto cut = [&](const Frame& f) {
    return Frame(f.data().narrow(0, key.row, crop_).narrow(1, key.col, crop_).contiguous(), f.index());
  };
  const auto trip = make_triplet(comp, static_cast<std::size_t>(key.frame));
  TrainingSample s;
  s.compressed = ClipTriplet(cut(trip.preceding), cut(trip.target), cut(trip.succeeding));
  s.raw_target = cut(pair.raw.luma.at(static_cast<std::size_t>(key.frame)));
  s.qp = encode_qp(key.qp, vocab_);
  s.source = pair.info.name;
  s.frame = key.frame;
  s.crop_row = key.row;
  s.crop_col = key.col;
  return s;
}

SampleStream::SampleStream(SampleSet& set, std::uint64_t seed) : set_(set), seed_(seed) {
  if (set_.size() == 0) throw InvalidInputError("sample set is empty (frames smaller than the crop?)");
}

TrainingSample SampleStream::next() {
  SampleKey key;
  {
    std::lock_guard lock(mu_);
    if (pos_ == set_.size()) {
      ++epoch_;
      set_.reshuffle(seed_ + static_cast<std::uint64_t>(epoch_));
      pos_ = 0;
    }
    key = set_.keys()[pos_++];
  }
  return set_.materialize(key);
}

std::vector<TrainingSample> SampleStream::next_batch(std::size_t n) {
  std::vector<TrainingSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

int SampleStream::epoch() const {
  std::lock_guard lock(mu_);
  return epoch_;
}

// --- synthetic data -------------------------------------------------------------

VideoSequence synthetic_sequence(std::int64_t width, std::int64_t height, int frames, std::uint64_t seed) {
  if (width <= 0 || height <= 0 || frames <= 0) throw InvalidInputError("synthetic sequence needs positive sizes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr int kDy = 1, kDx = 2;  // motion per frame
  const auto H = height + kDy * frames, W = width + kDx * frames;
  auto ys = torch::arange(H, torch::kFloat64).unsqueeze(1).expand({H, W});
  auto xs = torch::arange(W, torch::kFloat64).unsqueeze(0).expand({H, W});
  auto canvas = torch::zeros({H, W}, torch::kFloat64);
  for (int k = 0; k < 6; ++k) {
    const double fy = 0.02 + 0.25 * u(rng), fx = 0.02 + 0.25 * u(rng), ph = 6.283 * u(rng), amp = 0.05 + 0.1 * u(rng);
    canvas += amp * torch::sin(fy * ys + fx * xs + ph);
  }
  for (int k = 0; k < 12; ++k) {
    const auto r0 = static_cast<std::int64_t>(u(rng) * static_cast<double>(H));
    const auto c0 = static_cast<std::int64_t>(u(rng) * static_cast<double>(W));
    const auto rh = 4 + static_cast<std::int64_t>(u(rng) * static_cast<double>(H) / 3);
    const auto cw = 4 + static_cast<std::int64_t>(u(rng) * static_cast<double>(W) / 3);
    canvas.slice(0, r0, std::min(H, r0 + rh)).slice(1, c0, std::min(W, c0 + cw)) += 0.4 * (u(rng) - 0.5);
  }
  canvas = (canvas - canvas.min()) / (canvas.max() - canvas.min() + 1e-12) * 0.85 + 0.075;

  VideoSequence seq;
  seq.width = width;
  seq.height = height;
  const auto chroma_n = static_cast<std::size_t>(chroma_bytes(width, height));
  for (int t = 0; t < frames; ++t) {
    auto f = canvas.narrow(0, kDy * t, height).narrow(1, kDx * t, width).to(torch::kFloat32).contiguous();
    // round through 8 bits so files round-trip exactly
    seq.luma.emplace_back(torch::round(f * 255) / 255, t);
    seq.chroma.emplace_back(chroma_n, std::uint8_t(128));
  }
  return seq;
}

namespace {

torch::Tensor gaussian_blur(const torch::Tensor& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
  auto x = torch::arange(-radius, radius + 1, torch::kFloat32);
  auto k = torch::exp(-x.pow(2) / (2 * sigma * sigma));
  k = k / k.sum();
  auto t = img.unsqueeze(0).unsqueeze(0);
  namespace F = torch::nn::functional;
  t = F::pad(t, F::PadFuncOptions({radius, radius, radius, radius}).mode(torch::kReplicate));
  t = F::conv2d(t, k.view({1, 1, 1, -1}));
  t = F::conv2d(t, k.view({1, 1, -1, 1}));
  return t.squeeze(0).squeeze(0);
}

}  // namespace

Frame synthetic_degrade(const Frame& frame, int pseudo_qp) {
  torch::NoGradGuard guard;
  const double sigma = std::max(0.2, 0.4 + 0.06 * (pseudo_qp - 22));
  const double step = std::pow(2.0, (pseudo_qp - 4) / 6.0) * 0.5 / 255.0;
  const auto h = frame.height(), w = frame.width();
  auto blurred = gaussian_blur(frame.data(), sigma);
  namespace F = torch::nn::functional;
  const auto ph = round_up(h, 8), pw = round_up(w, 8);
  auto padded = F::pad(blurred.unsqueeze(0).unsqueeze(0),
                       F::PadFuncOptions({0, pw - w, 0, ph - h}).mode(torch::kReplicate));
  auto mean = F::avg_pool2d(padded, F::AvgPool2dFuncOptions(8));
  auto mean_up = F::interpolate(mean, F::InterpolateFuncOptions().size(std::vector<std::int64_t>{ph, pw})
                                          .mode(torch::kNearest));
  auto quant = mean_up + torch::round((padded - mean_up) / step) * step;
  quant = quant.squeeze(0).squeeze(0).narrow(0, 0, h).narrow(1, 0, w);
  return Frame(torch::round(quant.clamp(0, 1) * 255).div(255).contiguous(), frame.index());
}

VideoSequence synthetic_degrade(const VideoSequence& seq, int pseudo_qp) {
  std::vector<Frame> frames;
  for (const auto& f : seq.luma) frames.push_back(synthetic_degrade(f, pseudo_qp));
  return seq.with_luma(std::move(frames));
}

fs::path write_synthetic_corpus(const fs::path& dir, int sequences, std::int64_t width, std::int64_t height, int frames,
                                const std::vector<int>& qps, std::uint64_t seed) {
  fs::create_directories(dir);
  std::vector<SequencePair> pairs;
  for (int i = 0; i < sequences; ++i) {
    SequencePair p;
    p.name = "synth" + std::to_string(i);
    p.width = width;
    p.height = height;
    p.frame_count = frames;
    p.raw_path = dir / (p.name + "_raw.y4m");
    const auto raw = synthetic_sequence(width, height, frames, seed + static_cast<std::uint64_t>(i));
    write_sequence(p.raw_path, raw, ContainerKind::kY4M);
    for (int qp : qps) {
      auto path = dir / (p.name + "_qp" + std::to_string(qp) + ".y4m");
      write_sequence(path, synthetic_degrade(raw, qp), ContainerKind::kY4M);
      p.compressed_path_per_qp[qp] = path;
    }
    pairs.push_back(std::move(p));
  }
  const auto manifest = dir / "manifest.txt";
  write_manifest(manifest, pairs);
  return manifest;
}

}  // namespace vqe
