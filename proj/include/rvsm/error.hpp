#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rvsm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class InvalidLabel : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidArchitecture : public Error {
 public:
  using Error::Error;
};

/// arccos argument of the TL1 closed form left [-1, 1] by more than roundoff.
class NumericalDomainError : public Error {
 public:
  using Error::Error;
};

/// Normalizing a zero vector (w-step normalization, bucket/histogram scaling).
class DegenerateNormalization : public Error {
 public:
  using Error::Error;
};

class UnsupportedPenalty : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(std::int64_t iteration, const std::string& what)
      : Error(what), iteration_(iteration) {}

  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::int64_t iteration_;
};

}  // namespace rvsm
