#pragma once

#include <stdexcept>
#include <string>

namespace bcart {

// Bad user input: unknown columns, malformed files, out-of-range options.
// The CLI maps this to exit code 2; everything else that escapes maps to 3.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bcart
