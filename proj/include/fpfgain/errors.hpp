#pragma once

#include <stdexcept>
#include <string>

namespace fpfgain {

/// Base class for all library errors.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A scalar parameter is outside its admissible range (epsilon <= 0, L == 0, ...).
class InvalidParameter : public Error
{
public:
  using Error::Error;
};

/// Input data is malformed: non-finite values or mismatched lengths.
class InvalidInput : public Error
{
public:
  using Error::Error;
};

/// The ensemble cannot support the requested construction (identical particles,
/// zero kernel row sums).
class DegenerateEnsemble : public Error
{
public:
  using Error::Error;
};

/// Quadrature non-convergence, weight underflow and similar numerical failures.
class NumericalError : public Error
{
public:
  using Error::Error;
};

} // namespace fpfgain
