#include "ugs/core/error.hpp"

namespace ugs {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
      return "E_PARSE";
    case ErrorCode::kIo:
      return "E_IO";
    case ErrorCode::kDimension:
      return "E_DIMENSION";
    case ErrorCode::kDomain:
      return "E_DOMAIN";
    case ErrorCode::kDegenerate:
      return "E_DEGENERATE";
    case ErrorCode::kEmptyScene:
      return "E_EMPTY_SCENE";
    case ErrorCode::kFormat:
      return "E_FORMAT";
    case ErrorCode::kContract:
      return "E_CONTRACT";
    case ErrorCode::kConfig:
      return "E_CONFIG";
    case ErrorCode::kNumeric:
      return "E_NUMERIC";
  }
  return "E_UNKNOWN";
}

}  // namespace ugs
