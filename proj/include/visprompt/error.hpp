#pragma once

#include <stdexcept>
#include <string>

namespace visprompt {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  EmptyInput,
  Parse,
  VersionMismatch,
  Validation,
  Infeasible,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace visprompt
