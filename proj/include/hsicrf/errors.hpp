#pragma once

#include <stdexcept>
#include <string>

namespace hsicrf {

// Base class for everything this library throws on bad input or bad state.
// The CLI maps these to process exit codes (see tools/hsicrf.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File cannot be opened / read / written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Wrong magic, malformed header, unsupported variant.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Payload shorter or longer than the header promises.
class LengthError : public Error {
 public:
  using Error::Error;
};

// Values violate an invariant (non-finite, bad distribution, bad label id).
class DataError : public Error {
 public:
  using Error::Error;
};

// Dimension mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Not enough labeled samples to honor the request.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// An operation was called with missing or inconsistent internal state.
class StateError : public Error {
 public:
  using Error::Error;
};

// A size guard on a test-oracle path was exceeded.
class GuardError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long epoch)
      : Error(what), epoch_(epoch) {}
  long epoch() const { return epoch_; }

 private:
  long epoch_;
};

}  // namespace hsicrf
