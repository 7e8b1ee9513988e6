#pragma once

#include <stdexcept>
#include <string>

namespace dpsbp {

enum class ErrorCode {
  UnsupportedOrder,
  GridTooSmall,
  DimensionMismatch,
  DimensionOverflow,
  SingularMatrix,
  NoConvergence,
  InadmissiblePenalty,
  UnsupportedPenalty,
  ZeroAlpha,
  DegenerateInput,
  LineSearchFailure,
  ParseError,
  InvalidConfig,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace dpsbp
