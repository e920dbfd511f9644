#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gcond {

enum class ErrorCode {
  dimension,      // operand shapes disagree
  validation,     // input violates a documented precondition
  numeric,        // non-finite value where a finite one is required
  capability,     // unsupported architecture / depth combination
  infeasible,     // requested condensed size cannot be honoured
  diverged,       // training or condensation produced a non-finite loss
  config,         // bad command-line or run configuration
  missing_file,   // dataset / artifact file absent
  count_mismatch, // manifest counts disagree with file contents
  out_of_range,   // label or node index outside its domain
  parse,          // malformed text in an input file
};

std::string_view to_string(ErrorCode code) noexcept;

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

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace gcond
