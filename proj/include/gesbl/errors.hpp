#pragma once

#include <stdexcept>
#include <string>

namespace gesbl {

enum class ErrorCode {
  InvalidArgument = 1,
  DimensionMismatch,
  GenerationBudgetExceeded,
  InsufficientData,
  EmptyDictionary,
  SingularSystem,
  DegenerateTruth,
  Io,
  Parse,
  MismatchedManifest,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace gesbl
