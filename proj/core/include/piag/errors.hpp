#pragma once

#include <stdexcept>
#include <string>

namespace piag {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, empty data, bad shapes.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numeric parameter outside its admissible range (step size <= 0, eta < 1, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A delay exceeds the bound tau or reaches before the stored history.
class ScheduleViolation : public Error {
 public:
  using Error::Error;
};

/// The operation needs data the problem does not carry (usually ground truth).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Rate certificate with a outside (0,1).
class InvalidCertificate : public Error {
 public:
  using Error::Error;
};

/// A synthetic problem could not be generated or failed its validators.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// An argument outside the range where a claim applies.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

}  // namespace piag
