#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gridfuse {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dempster combination of two fully contradicting categorical BBAs.
class TotalConflictError : public Error {
 public:
  using Error::Error;
};

// A BBA whose pignistic probability is 0 or 1 has no finite log-odds.
class DegenerateBbaError : public Error {
 public:
  using Error::Error;
};

// Zero-variance paired sample passed to a t-based procedure.
class DegenerateVarianceError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class EmptyEvalSetError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Every problem found while validating an experiment config, one per line.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics)
      : Error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  [[nodiscard]] const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
    return out;
  }
  std::vector<std::string> diagnostics_;
};

}  // namespace gridfuse
