#pragma once

#include <stdexcept>
#include <string>

namespace shapereg {

// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or out-of-domain argument.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition (length mismatch, missing cache, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Parameter or configuration rejected by a validation rule.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DegenerateCurve : public Error {
 public:
  using Error::Error;
};

// Numerical failures of the forward model. The sampler maps all of these to
// an infinite potential.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class IntegrationAccuracyError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class BlowUpError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class NonDiffeomorphismError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class ObservationFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace shapereg
