#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparsembed {

/// Malformed or unusable input data. Carries the 1-based line number when
/// the fault was found while parsing a text stream (0 otherwise).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A trainer produced non-finite values or its objective kept growing.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sparsembed
