#pragma once

#include <stdexcept>
#include <string>

namespace flatscan {

enum class ErrorCode {
  InvalidArgument,
  EmptyBall,
  MassMismatch,
  LpFailure,
  NodeCapExceeded,
  AxiomViolation,
  ParameterInfeasible,
  RootReached,
  DegenerateBase,
  Parse,
  Io,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace flatscan
