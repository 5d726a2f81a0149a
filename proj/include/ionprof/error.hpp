#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ionprof {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfRange,
  kParse,
  kIo,
  kUnknownIon,
  kMissingInput,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this exception; the CLI maps
// code() onto its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace ionprof
