#pragma once

#include <stdexcept>
#include <string>

namespace actnorm {

/// Error categories double as CLI exit codes.
enum class errc : int {
  validation = 2,  // bad arguments, unknown names, malformed configs
  numeric = 3,     // divergence, degenerate inputs, convergence failures
  filesystem = 4,  // missing files, unwritable outputs
  format = 5,      // malformed file contents
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

 private:
  errc code_;
};

struct validation_error : error {
  explicit validation_error(const std::string& what) : error(errc::validation, what) {}
};

struct numeric_error : error {
  explicit numeric_error(const std::string& what) : error(errc::numeric, what) {}
};

struct filesystem_error : error {
  explicit filesystem_error(const std::string& what) : error(errc::filesystem, what) {}
};

struct format_error : error {
  explicit format_error(const std::string& what) : error(errc::format, what) {}
};

}  // namespace actnorm
