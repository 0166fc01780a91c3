#pragma once

#include <stdexcept>
#include <string>

namespace rlab {

enum class ErrorCode {
  kOk = 0,
  kInvalidArgument = 1,
  kPositivity = 2,
  kSolvability = 3,
  kSingular = 4,
  kBand = 5,
  kBracket = 6,
  kNoDecay = 7,
  kNonFinite = 8,
  kMismatch = 9,
  kConfig = 10,
  kIo = 11,
  kUnsupported = 12,
};

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

}  // namespace rlab
