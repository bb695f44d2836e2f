#pragma once

#include <stdexcept>
#include <string>

namespace artlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or value violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operands disagree in shape.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Division by a vanishing signal scale (alpha_bar == 0).
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// The injected-noise amplitude exceeds what the schedule admits at a timestep.
class ScheduleError : public Error {
 public:
  ScheduleError(const std::string& what, int timestep) : Error(what), timestep_(timestep) {}
  int timestep() const noexcept { return timestep_; }

 private:
  int timestep_;
};

/// A metric is not defined for the given input (e.g. a mask without boundary).
class UndefinedScoreError : public Error {
 public:
  using Error::Error;
};

/// A value left the finite range during sampling.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Output files no longer match the hashes recorded in their manifest.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace artlab
