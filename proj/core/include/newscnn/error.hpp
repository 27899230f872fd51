#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace newscnn {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line()` is 1-based; 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Shape or configuration disagreement between tensors, configs and inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace newscnn
