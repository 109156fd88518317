#include "visprompt/error.hpp"

namespace visprompt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::VersionMismatch: return "version-mismatch";
    case ErrorCode::Validation: return "validation-error";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::Io: return "io-error";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace visprompt
