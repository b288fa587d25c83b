#pragma once

#include <stdexcept>
#include <string>

namespace scband {

// Error categories; the C API and the CLI map these to status/exit codes.
enum class errc {
  invalid_argument = 1,
  schema = 2,
  fit = 3,
  band = 4,
  degenerate = 5,
  io = 6,
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace scband
