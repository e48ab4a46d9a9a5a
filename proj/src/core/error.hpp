#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slc {

// Every failure raised by the core derives from Error so the C boundary can map
// it onto a status code with a single catch.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  DimensionMismatch(const std::string& what, std::size_t expected, std::size_t got)
      : InvalidArgument(what + ": expected dimension " + std::to_string(expected) + ", got " +
                        std::to_string(got)) {}
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// A realization left the finite region (non-finite state or norm above the blow-up cap).
class BlowUp : public NumericalError {
 public:
  BlowUp(std::size_t step, const std::string& detail)
      : NumericalError("blow-up at step " + std::to_string(step) + ": " + detail), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

}  // namespace slc
