#pragma once

#include <stdexcept>
#include <string>

namespace eqnn {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed config/model text. `where` is a "line N, field F" style locator.
class ParseError : public Error {
 public:
  ParseError(std::string where, const std::string& what)
      : Error(where + ": " + what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace eqnn
