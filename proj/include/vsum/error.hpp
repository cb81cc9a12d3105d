#pragma once

#include <stdexcept>
#include <string>

namespace vsum {

// Single exception type for the whole library. Messages carry a category
// prefix ("parse error: ...", "validation error: ...") so the CLI can report
// them as one machine-parsable line.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

}  // namespace vsum
