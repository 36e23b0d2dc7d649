#pragma once

#include <stdexcept>
#include <string>

namespace popt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The simplex or hull projection failed to converge within its iteration cap.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Iterative rounding could not make progress (no droppable supply row).
class RoundingStall : public Error {
 public:
  using Error::Error;
};

/// The lottery residual stopped decreasing.
class LotteryDivergence : public Error {
 public:
  using Error::Error;
};

/// A runtime certificate (optimality, feasibility, set membership) failed.
class VerificationFailure : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// The enumerated k-bundle space exceeds the configured cap.
class BundleSpaceOverflow : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `field()` names the offending field or line.
class InputError : public Error {
 public:
  InputError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// The exhaustive oracle refused an instance beyond its state guard.
class OracleTooLarge : public Error {
 public:
  using Error::Error;
};

}  // namespace popt
