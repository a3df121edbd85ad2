#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rrforge {

enum class Errc {
  invalid_argument,
  invalid_shape,
  invalid_config,
  invalid_training_set,
  invalid_split,
  numeric_failure,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the categories above so
/// the CLI can map it onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::invalid_shape: return "invalid-shape";
    case Errc::invalid_config: return "invalid-config";
    case Errc::invalid_training_set: return "invalid-training-set";
    case Errc::invalid_split: return "invalid-split";
    case Errc::numeric_failure: return "numeric-failure";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace rrforge
