#include "vqe/plugin.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vqe/image.hpp"

namespace vqe {

namespace fs = std::filesystem;

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

fs::path temp_path(const std::string& stem, const std::string& ext) {
  static std::atomic<int> counter{0};
  return fs::temp_directory_path() /
         (stem + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ext);
}

bool executable_exists(const fs::path& exe) {
  if (exe.has_parent_path()) return ::access(exe.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':'))
    if (!dir.empty() && ::access((fs::path(dir) / exe).c_str(), X_OK) == 0) return true;
  return false;
}

}  // namespace

void PluginRegistry::add(const std::string& name, const fs::path& executable, bool reentrant) {
  if (name.empty()) throw ConfigError("plugin name must not be empty");
  Entry e;
  e.executable = executable;
  e.reentrant = reentrant;
  plugins_[name] = std::move(e);
}

void PluginRegistry::add_spec(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("plugin spec must be name=path, got " + spec);
  add(spec.substr(0, eq), spec.substr(eq + 1));
}

PluginResult PluginRegistry::score(const std::string& name, const fs::path& a, const fs::path& b) const {
  PluginResult r;
  auto it = plugins_.find(name);
  if (it == plugins_.end()) {
    r.message = "no scorer registered under '" + name + "'";
    return r;
  }
  const auto& e = it->second;
  if (!executable_exists(e.executable)) {
    r.message = "scorer executable not found: " + e.executable.string();
    return r;
  }
  std::unique_lock<std::mutex> lock(*e.mu, std::defer_lock);
  if (!e.reentrant) lock.lock();

  const auto err_path = temp_path("vqe_plugin_err", ".txt");
  const auto cmd = shell_quote(e.executable.string()) + " " + shell_quote(a.string()) + " " +
                   shell_quote(b.string()) + " 2>" + shell_quote(err_path.string());
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw PluginError(name + ": cannot start " + e.executable.string());
  std::string out;
  std::array<char, 256> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  std::string err;
  {
    std::ifstream in(err_path);
    err.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::error_code ec;
  fs::remove(err_path, ec);

  const auto captured = "\n--- stdout ---\n" + out + "\n--- stderr ---\n" + err;
  if (status == -1 || !WIFEXITED(status)) throw PluginError(name + " crashed" + captured);
  if (WEXITSTATUS(status) != 0)
    throw PluginError(name + " exited with status " + std::to_string(WEXITSTATUS(status)) + captured);
  const auto text = trim(out);
  double value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [p, rc] = std::from_chars(first, last, value);
  if (text.empty() || rc != std::errc() || p != last) throw PluginError(name + " printed no single number" + captured);
  r.status = PluginStatus::kOk;
  r.value = value;
  return r;
}

PluginResult PluginRegistry::score(const std::string& name, const Frame& a, const Frame& b) const {
  if (!has(name)) return score(name, fs::path{}, fs::path{});
  const auto pa = temp_path("vqe_plugin_a", ".png"), pb = temp_path("vqe_plugin_b", ".png");
  write_png(pa, a);
  write_png(pb, b);
  struct Cleanup {
    fs::path a, b;
    ~Cleanup() {
      std::error_code ec;
      fs::remove(a, ec);
      fs::remove(b, ec);
    }
  } cleanup{pa, pb};
  return score(name, pa, pb);
}

}  // namespace vqe
