// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_ERROR_HPP
#define WAVEMOMENTS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace wavemoments {

/// Broad failure category. Maps one-to-one onto the CLI exit codes.
enum class ErrorKind { config, data, numerical };

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numerical: return 4;
  }
  return 1;
}

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

/// Base exception. `code` is a stable machine-readable identifier
/// (e.g. "degenerate_level") that the CLI echoes in its error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& what)
      : std::runtime_error(what), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string code = "config")
      : Error(ErrorKind::config, std::move(code), what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::string code = "data")
      : Error(ErrorKind::data, std::move(code), what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what,
                          std::string code = "numerical")
      : Error(ErrorKind::numerical, std::move(code), what) {}
};

/// A wavelet level whose estimating equation has no usable root, typically
/// because every coefficient is zero (constant input).
class DegenerateLevelError : public Error {
 public:
  DegenerateLevelError(int level, const std::string& what)
      : Error(ErrorKind::data, "degenerate_level", what), level_(level) {}

  int level() const noexcept { return level_; }

 private:
  int level_;
};

}  // namespace wavemoments

#endif  // WAVEMOMENTS_ERROR_HPP
