#pragma once

#include <stdexcept>
#include <string>

namespace qbridge {

// Base for every error raised by the library. The CLI maps subclasses onto
// process exit codes (configuration problems -> 2, numerical accuracy -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class InvalidDimension : public InvalidParameter {
 public:
  using InvalidParameter::InvalidParameter;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Bisection / minimization could not locate a ZZ-free bus frequency.
class NoZeroCrossing : public Error {
 public:
  using Error::Error;
};

// The requested conditional phase is out of reach inside the search bracket.
class CalibrationInfeasible : public Error {
 public:
  CalibrationInfeasible(const std::string& what, double max_phase)
      : Error(what), max_phase_(max_phase) {}
  double max_phase() const noexcept { return max_phase_; }

 private:
  double max_phase_;
};

// Computational block is too far from diagonal to read a phase off it.
class NotPhaseLike : public Error {
 public:
  using Error::Error;
};

class AccuracyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qbridge
