#pragma once

#include <stdexcept>
#include <string>

namespace dil {

enum class ErrorCode {
  invalid_argument = 1,
  malformed_model,
  state_overflow,
  zero_probability,
  divergence,
  parse_error,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dil
