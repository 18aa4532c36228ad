#pragma once

#include <stdexcept>
#include <string>

namespace hyperbasis {

/// Base class for all domain errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivisionByZero : Error {
  DivisionByZero() : Error("division by exact zero") {}
};

/// A decision or arithmetic result fell below the certified-digit margin.
/// Callers are expected to retry the whole computation at doubled precision.
struct PrecisionExhausted : Error {
  explicit PrecisionExhausted(const std::string& what = "certified precision exhausted")
      : Error(what) {}
};

struct NotASquare : Error {
  explicit NotASquare(const std::string& what = "element is not a square") : Error(what) {}
};

struct SingularMatrix : Error {
  explicit SingularMatrix(const std::string& what = "matrix is singular at precision")
      : Error(what) {}
};

struct NotAPTE : Error {
  enum class Reason { NotPElementary, NotTotallyEven, AnisotropicPartNotMaximal };
  Reason reason;
  explicit NotAPTE(Reason r) : Error(describe(r)), reason(r) {}
  static const char* describe(Reason r) {
    switch (r) {
      case Reason::NotPElementary: return "lattice is not almost p-elementary totally even: not-p-elementary";
      case Reason::NotTotallyEven: return "lattice is not almost p-elementary totally even: not-totally-even";
      default: return "lattice is not almost p-elementary totally even: anisotropic-part-not-maximal";
    }
  }
};

struct DoesNotSplit : Error {
  explicit DoesNotSplit(const std::string& what = "hyperbolic plane does not split the lattice")
      : Error(what) {}
};

struct NoIsotropicVectors : Error {
  NoIsotropicVectors() : Error("lattice contains no isotropic vectors") {}
};

struct NotMaximalIsotropic : Error {
  explicit NotMaximalIsotropic(const std::string& what = "submodule is not maximal totally isotropic")
      : Error(what) {}
};

struct NotAnIsometry : Error {
  NotAnIsometry() : Error("matrix is not an isometry of the space") {}
};

struct InvalidChain : Error {
  explicit InvalidChain(const std::string& what) : Error("invalid lattice chain: " + what) {}
};

/// Bounded search ran out of candidates.  On valid inputs this signals an
/// internal defect, not a recoverable condition.
struct SearchExhausted : Error {
  explicit SearchExhausted(const std::string& what) : Error("search exhausted: " + what) {}
};

struct TooLarge : Error {
  explicit TooLarge(const std::string& what) : Error("enumeration budget exceeded: " + what) {}
};

/// Malformed input (parse errors, precondition violations on user data).
struct InvalidInput : Error {
  explicit InvalidInput(const std::string& what) : Error(what) {}
};

}  // namespace hyperbasis
