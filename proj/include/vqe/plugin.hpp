#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "vqe/core.hpp"

namespace vqe {

// External perceptual scorers (LPIPS, DISTS, ...). A plugin is an executable
// called as `<exe> <image_a.png> <image_b.png>` that prints one decimal number
// on stdout and exits 0.

enum class PluginStatus { kOk, kUnavailable };

struct PluginResult {
  PluginStatus status = PluginStatus::kUnavailable;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string message;  // why the scorer is unavailable
  bool ok() const { return status == PluginStatus::kOk; }
};

class PluginRegistry {
 public:
  /// `reentrant` plugins may be called concurrently; others are serialized.
  void add(const std::string& name, const std::filesystem::path& executable, bool reentrant = false);
  bool has(const std::string& name) const { return plugins_.contains(name); }

  /// Unregistered names and missing executables give kUnavailable. A crash,
  /// a nonzero exit or output that is not a single number throws PluginError
  /// carrying the captured output.
  PluginResult score(const std::string& name, const std::filesystem::path& a, const std::filesystem::path& b) const;
  /// Writes both frames to temporary PNGs first.
  PluginResult score(const std::string& name, const Frame& a, const Frame& b) const;

  /// Entries of the form name=path, as given on the command line.
  void add_spec(const std::string& spec);

 private:
  struct Entry {
    std::filesystem::path executable;
    bool reentrant = false;
    std::unique_ptr<std::mutex> mu = std::make_unique<std::mutex>();
  };
  std::map<std::string, Entry> plugins_;
};

}  // namespace vqe
