#pragma once

#include <stdexcept>
#include <string>

namespace vqe {

/// Process exit codes used by the CLI. Every error type maps to one.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kConfig = 4,
  kNumeric = 5,
  kInvalidInput = 6,
  kPlugin = 7,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code = ExitCode::kInvalidInput)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

struct InvalidInputError : Error {
  explicit InvalidInputError(const std::string& w) : Error(w, ExitCode::kInvalidInput) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error("shape error: " + w, ExitCode::kInvalidInput) {}
};

struct UnknownQpError : Error {
  explicit UnknownQpError(const std::string& w) : Error(w, ExitCode::kConfig) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config error: " + w, ExitCode::kConfig) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error("I/O error: " + w, ExitCode::kIo) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error("format error: " + w, ExitCode::kIo) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error("numeric error: " + w, ExitCode::kNumeric) {}
};

struct PluginError : Error {
  explicit PluginError(const std::string& w) : Error("plugin error: " + w, ExitCode::kPlugin) {}
};

}  // namespace vqe
