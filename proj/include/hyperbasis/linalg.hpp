#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hyperbasis/padic.hpp"

namespace hyperbasis::linalg {

using padic::CtxPtr;
using padic::Scalar;

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::vector<Scalar> coords);
  static Vector zeros(std::size_t n, const CtxPtr& ctx);
  static Vector unit(std::size_t n, std::size_t i, const CtxPtr& ctx);

  const CtxPtr& ctx() const { return ctx_; }

  std::size_t size() const { return coords_.size(); }
  const Scalar& operator[](std::size_t i) const { return coords_[i]; }
  Scalar& operator[](std::size_t i) { return coords_[i]; }

  Vector operator+(const Vector& o) const;
  Vector operator-(const Vector& o) const;
  Vector scaled(const Scalar& c) const;
  /// Multiplies every coordinate by p^k.
  Vector shifted(long k) const;

  /// Minimal certified valuation over the coordinates; +inf when all are
  /// exact zeros.  Throws PrecisionExhausted if a zero-at-precision
  /// coordinate could hide the minimum.
  long min_valuation() const;

  std::string to_string() const;

 private:
  std::vector<Scalar> coords_;
  CtxPtr ctx_;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const CtxPtr& ctx);
  static Matrix identity(std::size_t n, const CtxPtr& ctx);
  static Matrix from_rows(const std::vector<Vector>& rows);
  /// Zero-row matrix that still remembers its width and context.
  static Matrix empty(std::size_t cols, const CtxPtr& ctx);

  const CtxPtr& ctx() const { return ctx_; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const Scalar& at(std::size_t i, std::size_t j) const { return e_[i * cols_ + j]; }
  Scalar& at(std::size_t i, std::size_t j) { return e_[i * cols_ + j]; }

  Vector row(std::size_t i) const;
  void set_row(std::size_t i, const Vector& v);
  std::vector<Vector> row_list() const;

  Matrix operator+(const Matrix& o) const;
  Matrix operator-(const Matrix& o) const;
  Matrix operator*(const Matrix& o) const;
  Matrix transpose() const;
  Matrix scaled(const Scalar& c) const;
  Matrix shifted(long k) const;

  long min_valuation() const;
  std::string to_string() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Scalar> e_;
  CtxPtr ctx_;
};

/// x * A for a row vector x.
Vector mul_row(const Vector& x, const Matrix& a);
/// A * x for a column vector x.
Vector mul_col(const Matrix& a, const Vector& x);

Scalar det(const Matrix& a);
Matrix inverse(const Matrix& a);
/// Solves A * x = b (column sense).
Vector solve(const Matrix& a, const Vector& b);

/// Decision helpers shared by the lattice layer.  `zero_floor` is the
/// absolute p-power above which a residual representative is accepted as a
/// certified zero: large enough that honest desk-scale values never reach
/// it, small enough that full-precision cancellation always clears it.
long zero_floor(const CtxPtr& ctx);
bool entry_is_zero(const Scalar& a);
bool entries_equal(const Scalar& a, const Scalar& b);

/// Canonical Hermite basis of the row span over Z_p.  Accepts any
/// rectangular matrix; returns one canonical row per pivot (rank rows),
/// pivots normalized to exact powers of p, entries above a pivot reduced to
/// digits below it.  Two matrices span the same module iff their canonical
/// forms agree entry-for-entry.
struct Echelon {
  Matrix basis;                       // rank x cols canonical rows
  std::vector<std::size_t> pivot_cols;
  std::vector<long> pivot_exps;       // pivot at (i, pivot_cols[i]) is p^pivot_exps[i]
};

Echelon hermite_echelon(const Matrix& b);
Matrix hermite_basis(const Matrix& b);

/// Exponents (a_1 <= ... <= a_n) of the p-power elementary divisors.
std::vector<long> elementary_divisors(const Matrix& a);

/// Coefficients c with c * echelon.basis = v when v lies in the row span
/// (as a module over the field; integrality is the caller's test), nullopt
/// when v is certifiably outside the span.
std::optional<Vector> express_in_rows(const Echelon& ech, const Vector& v);

bool matrices_equal(const Matrix& a, const Matrix& b);

}  // namespace hyperbasis::linalg
