#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cesim {

// Machine-dispatchable failure classes. The MCP gateway forwards these codes
// verbatim in tool error payloads.
enum class ErrorCode { not_found, invalid_state, invalid_argument, capacity, internal };

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace cesim
