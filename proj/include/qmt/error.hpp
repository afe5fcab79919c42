#pragma once

#include <stdexcept>
#include <string>

namespace qmt {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Events or functionals defined over different sample spaces were combined.
class SpaceMismatch : public Error {
 public:
  using Error::Error;
};

// An operation that enumerates subsets was asked to handle too many atoms.
class SpaceTooLarge : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A decoherence functional or measure failed one of its defining axioms.
class AxiomViolation : public Error {
 public:
  using Error::Error;
};

class NotDisjoint : public Error {
 public:
  using Error::Error;
};

class NotHermitian : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

// mu(x|y) with mu(y) = 0 is undefined rather than zero.
class ConditionUndefined : public Error {
 public:
  using Error::Error;
};

class NotStronglyPositive : public Error {
 public:
  using Error::Error;
};

class MarginalsNotDiagonal : public Error {
 public:
  MarginalsNotDiagonal(std::string pair, double magnitude)
      : Error("marginal block " + pair + " is not diagonal (max off-diagonal |D| = " +
              std::to_string(magnitude) + ")"),
        pair_(std::move(pair)),
        magnitude_(magnitude) {}

  const std::string& pair() const noexcept { return pair_; }
  double magnitude() const noexcept { return magnitude_; }

 private:
  std::string pair_;
  double magnitude_;
};

// Screening-off or setting-independence preconditions are not met.
class ScreeningViolation : public Error {
 public:
  using Error::Error;
};

class LpError : public Error {
 public:
  using Error::Error;
};

namespace tol {
inline constexpr double kHermitian = 1e-10;
inline constexpr double kNormalization = 1e-10;
inline constexpr double kWeakViolation = 1e-10;
inline constexpr double kMarginal = 1e-9;
inline constexpr double kEigenRelative = 1e-10;
inline constexpr double kScreening = 1e-10;
}  // namespace tol

}  // namespace qmt
