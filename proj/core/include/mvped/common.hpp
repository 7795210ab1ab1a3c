#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mvped {

/// Failure category, mapped to distinct process exit codes by the CLI.
enum class errc {
  io,          ///< missing/corrupt files, unreadable inputs
  validation,  ///< schema/invariant violations in otherwise readable data
  divergence,  ///< numerical blow-up during optimization
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

inline Error io_error(const std::string& msg) { return Error(errc::io, msg); }
inline Error validation_error(const std::string& msg) { return Error(errc::validation, msg); }
inline Error divergence_error(const std::string& msg) { return Error(errc::divergence, msg); }

}  // namespace mvped
