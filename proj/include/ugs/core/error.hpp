#pragma once

#include <stdexcept>
#include <string>

namespace ugs {

enum class ErrorCode {
  kParse,       // malformed input file
  kIo,          // missing/unreadable/unwritable file
  kDimension,   // size/shape mismatch
  kDomain,      // value outside its mathematical domain
  kDegenerate,  // geometrically degenerate input
  kEmptyScene,  // an operation left no Gaussians
  kFormat,      // bad checkpoint/container format
  kContract,    // API used out of order (missing forward state etc.)
  kConfig,      // invalid configuration value
  kNumeric,     // non-finite values encountered
};

const char* error_code_name(ErrorCode code);

/// All recoverable failures are reported as ugs::Error. The code gives the CLI
/// its machine-parseable prefix; what() carries the human-readable details.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ugs
