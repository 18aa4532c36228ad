#include "hyperbasis/linalg.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

namespace hyperbasis::linalg {

using padic::BigInt;

// --- Vector -----------------------------------------------------------------

Vector::Vector(std::vector<Scalar> coords) : coords_(std::move(coords)) {
  if (!coords_.empty()) ctx_ = coords_.front().ctx();
}

Vector Vector::zeros(std::size_t n, const CtxPtr& ctx) {
  Vector v(std::vector<Scalar>(n, Scalar::zero(ctx)));
  v.ctx_ = ctx;
  return v;
}

Vector Vector::unit(std::size_t n, std::size_t i, const CtxPtr& ctx) {
  Vector v = zeros(n, ctx);
  v[i] = Scalar::one(ctx);
  return v;
}

Vector Vector::operator+(const Vector& o) const {
  std::vector<Scalar> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(coords_[i] + o[i]);
  Vector v(std::move(out));
  v.ctx_ = ctx_;
  return v;
}

Vector Vector::operator-(const Vector& o) const {
  std::vector<Scalar> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(coords_[i] - o[i]);
  Vector v(std::move(out));
  v.ctx_ = ctx_;
  return v;
}

Vector Vector::scaled(const Scalar& c) const {
  std::vector<Scalar> out;
  out.reserve(size());
  for (const auto& x : coords_) out.push_back(x * c);
  Vector v(std::move(out));
  v.ctx_ = ctx_;
  return v;
}

Vector Vector::shifted(long k) const {
  std::vector<Scalar> out;
  out.reserve(size());
  for (const auto& x : coords_) out.push_back(x.shift(k));
  Vector v(std::move(out));
  v.ctx_ = ctx_;
  return v;
}

long Vector::min_valuation() const {
  long best = Scalar::kInfVal;
  bool uncertain = false;
  for (const auto& x : coords_) {
    if (x.is_exact_zero()) continue;
    if (x.is_near_zero()) {
      uncertain = true;
      best = std::min(best, x.val_lower_bound());
      continue;
    }
    best = std::min(best, x.valuation());
  }
  if (uncertain) {
    // A zero-at-precision coordinate only matters if its bound could undercut
    // a certified unit, or if there is no unit at all.
    for (const auto& x : coords_) {
      if (x.is_near_zero() && x.val_lower_bound() <= best &&
          x.val_lower_bound() < zero_floor(ctx_ ? ctx_ : x.ctx()))
        throw PrecisionExhausted("min valuation hidden by zero-at-precision coordinate");
    }
  }
  return best;
}

std::string Vector::to_string() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < size(); ++i) {
    if (i) os << ", ";
    os << coords_[i].to_string(4);
  }
  os << ")";
  return os.str();
}

// --- Matrix -----------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, const CtxPtr& ctx)
    : rows_(rows), cols_(cols), e_(rows * cols, Scalar::zero(ctx)), ctx_(ctx) {}

Matrix Matrix::identity(std::size_t n, const CtxPtr& ctx) {
  Matrix m(n, n, ctx);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = Scalar::one(ctx);
  return m;
}

Matrix Matrix::empty(std::size_t cols, const CtxPtr& ctx) { return Matrix(0, cols, ctx); }

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) throw InvalidInput("from_rows needs at least one row; use Matrix::empty");
  Matrix m(rows.size(), rows.front().size(), rows.front().ctx());
  for (std::size_t i = 0; i < rows.size(); ++i) m.set_row(i, rows[i]);
  return m;
}

Vector Matrix::row(std::size_t i) const {
  std::vector<Scalar> out;
  out.reserve(cols_);
  for (std::size_t j = 0; j < cols_; ++j) out.push_back(at(i, j));
  Vector v(std::move(out));
  return v;
}

void Matrix::set_row(std::size_t i, const Vector& v) {
  if (v.size() != cols_) throw InvalidInput("row width mismatch");
  for (std::size_t j = 0; j < cols_; ++j) at(i, j) = v[j];
}

std::vector<Vector> Matrix::row_list() const {
  std::vector<Vector> out;
  out.reserve(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out.push_back(row(i));
  return out;
}

Matrix Matrix::operator+(const Matrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw InvalidInput("matrix shape mismatch in add");
  Matrix m(rows_, cols_, ctx_);
  for (std::size_t i = 0; i < e_.size(); ++i) m.e_[i] = e_[i] + o.e_[i];
  return m;
}

Matrix Matrix::operator-(const Matrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw InvalidInput("matrix shape mismatch in sub");
  Matrix m(rows_, cols_, ctx_);
  for (std::size_t i = 0; i < e_.size(); ++i) m.e_[i] = e_[i] - o.e_[i];
  return m;
}

Matrix Matrix::operator*(const Matrix& o) const {
  if (cols_ != o.rows_) throw InvalidInput("matrix shape mismatch in mul");
  Matrix m(rows_, o.cols_, ctx_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < o.cols_; ++j) {
      Scalar acc = Scalar::zero(ctx_);
      for (std::size_t k = 0; k < cols_; ++k) acc = acc + at(i, k) * o.at(k, j);
      m.at(i, j) = acc;
    }
  return m;
}

Matrix Matrix::transpose() const {
  Matrix m(cols_, rows_, ctx_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) m.at(j, i) = at(i, j);
  return m;
}

Matrix Matrix::scaled(const Scalar& c) const {
  Matrix m(rows_, cols_, ctx_);
  for (std::size_t i = 0; i < e_.size(); ++i) m.e_[i] = e_[i] * c;
  return m;
}

Matrix Matrix::shifted(long k) const {
  Matrix m(rows_, cols_, ctx_);
  for (std::size_t i = 0; i < e_.size(); ++i) m.e_[i] = e_[i].shift(k);
  return m;
}

long Matrix::min_valuation() const {
  long best = Scalar::kInfVal;
  for (const auto& x : e_) {
    if (x.is_exact_zero()) continue;
    if (x.is_near_zero()) {
      if (x.val_lower_bound() < zero_floor(ctx_))
        throw PrecisionExhausted("matrix min valuation hidden by zero-at-precision entry");
      continue;
    }
    best = std::min(best, x.valuation());
  }
  return best;
}

std::string Matrix::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < rows_; ++i) os << row(i).to_string() << "\n";
  return os.str();
}

Vector mul_row(const Vector& x, const Matrix& a) {
  if (x.size() != a.rows()) throw InvalidInput("shape mismatch in mul_row");
  std::vector<Scalar> out;
  out.reserve(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    Scalar acc = Scalar::zero(a.ctx());
    for (std::size_t i = 0; i < x.size(); ++i) acc = acc + x[i] * a.at(i, j);
    out.push_back(acc);
  }
  return Vector(std::move(out));
}

Vector mul_col(const Matrix& a, const Vector& x) {
  if (x.size() != a.cols()) throw InvalidInput("shape mismatch in mul_col");
  std::vector<Scalar> out;
  out.reserve(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Scalar acc = Scalar::zero(a.ctx());
    for (std::size_t j = 0; j < x.size(); ++j) acc = acc + a.at(i, j) * x[j];
    out.push_back(acc);
  }
  return Vector(std::move(out));
}

// --- zero/equality decisions ---------------------------------------------------

long zero_floor(const CtxPtr& ctx) {
  return std::max<long>(ctx->margin() + 4, ctx->precision_digits() / 3);
}

bool entry_is_zero(const Scalar& a) {
  if (a.is_exact_zero()) return true;
  long floor = zero_floor(a.ctx());
  if (a.is_near_zero()) {
    if (a.val_lower_bound() >= floor) return true;
    if (getenv("HB_TRAP")) abort();
    throw PrecisionExhausted("zero decision on weakly bounded value");
  }
  if (a.known_digits() < a.ctx()->margin())
    throw PrecisionExhausted("zero decision without margin");
  return a.valuation() >= floor;
}

bool entries_equal(const Scalar& a, const Scalar& b) { return entry_is_zero(a - b); }

bool matrices_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (!entries_equal(a.at(i, j), b.at(i, j))) return false;
  return true;
}

// --- Hermite form -----------------------------------------------------------------

namespace {

// Splits a = low + p^e * q with low carrying exactly the digits of a below
// position e.  Requires those digits to be certified.
struct DigitSplit {
  Scalar low;
  Scalar quotient;
};

DigitSplit split_at(const Scalar& a, long e) {
  const CtxPtr& ctx = a.ctx();
  if (a.is_exact_zero()) return {a, a};
  if (a.is_near_zero()) {
    if (a.val_lower_bound() < e)
      throw PrecisionExhausted("digit split below certified bound");
    return {Scalar::zero(ctx), Scalar::near_zero(a.val_lower_bound() - e, ctx)};
  }
  const long va = a.valuation();
  if (va >= e) return {Scalar::zero(ctx), a.shift(-e)};
  if (a.abs_precision() < e)
    throw PrecisionExhausted("digit split beyond certified digits");
  BigInt step = ctx->pow(static_cast<int>(e - va));
  BigInt usmall = a.unit_part() % step;
  BigInt ubig = a.unit_part() / step;
  Scalar low = Scalar::from_unit(usmall, va, ctx->precision_digits(), ctx);
  Scalar q;
  if (ubig == 0) {
    q = Scalar::near_zero(a.abs_precision() - e, ctx);
  } else {
    long vb = padic::int_valuation(ubig, ctx->p());
    long known_q = a.abs_precision() - e - vb;
    if (known_q < ctx->margin()) {
      q = Scalar::near_zero(std::min(a.abs_precision() - e, vb), ctx);
    } else {
      q = Scalar::from_unit(ubig / ctx->pow(static_cast<int>(vb)), vb,
                            static_cast<int>(std::min<long>(known_q, ctx->precision_digits())),
                            ctx);
    }
  }
  return {low, q};
}

// Subtracts q * pivot_row from row (vectors as raw scalar spans inside the
// working matrix), forcing the pivot column entry to an exact zero.
void eliminate(Matrix& m, std::size_t target, std::size_t pivot_row, std::size_t col,
               const Scalar& q) {
  const CtxPtr& ctx = m.ctx();
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (j == col) {
      m.at(target, j) = Scalar::zero(ctx);
      continue;
    }
    m.at(target, j) = m.at(target, j) - q * m.at(pivot_row, j);
  }
}

}  // namespace

Echelon hermite_echelon(const Matrix& b) {
  Matrix w = b;
  const CtxPtr& ctx = w.ctx();
  std::vector<std::size_t> pivot_cols;
  std::vector<long> pivot_exps;
  std::size_t r = 0;  // next pivot row slot
  for (std::size_t col = 0; col < w.cols() && r < w.rows(); ++col) {
    // Pick the not-yet-used row whose entry in this column has minimal
    // certified valuation.
    std::optional<std::size_t> best;
    long best_val = 0;
    bool blocked = false;
    for (std::size_t i = r; i < w.rows(); ++i) {
      const Scalar& x = w.at(i, col);
      if (x.is_exact_zero()) continue;
      if (x.is_near_zero()) {
        if (x.val_lower_bound() < zero_floor(ctx)) blocked = true;
        continue;
      }
      if (x.known_digits() < ctx->margin()) {
        blocked = true;
        continue;
      }
      if (x.valuation() >= zero_floor(ctx)) continue;  // treat as zero
      if (!best || x.valuation() < best_val) {
        best = i;
        best_val = x.valuation();
      }
    }
    if (!best) {
      if (blocked) {
        if (getenv("HB_TRAP")) abort();
        throw PrecisionExhausted("pivot choice not certified in column " + std::to_string(col));
      }
      continue;  // no pivot in this column
    }
    std::size_t prow = *best;
    if (prow != r) {
      for (std::size_t j = 0; j < w.cols(); ++j) std::swap(w.at(prow, j), w.at(r, j));
    }
    const long e = best_val;
    // Normalize the row so the pivot becomes exactly p^e.
    Scalar unit_inv =
        Scalar::from_unit(padic::mod_inverse(w.at(r, col).unit_part(), ctx->modulus()), 0,
                          w.at(r, col).known_digits(), ctx);
    for (std::size_t j = 0; j < w.cols(); ++j) {
      if (j == col)
        w.at(r, j) = Scalar::p_power(e, ctx);
      else
        w.at(r, j) = w.at(r, j) * unit_inv;
    }
    // Clear the column below the pivot.
    for (std::size_t i = r + 1; i < w.rows(); ++i) {
      const Scalar& x = w.at(i, col);
      if (x.is_exact_zero()) continue;
      if (x.is_near_zero() || x.valuation() >= zero_floor(ctx)) {
        w.at(i, col) = Scalar::zero(ctx);
        continue;
      }
      eliminate(w, i, r, col, x.shift(-e));
    }
    // Reduce entries above the pivot to digits below p^e.
    for (std::size_t i = 0; i < r; ++i) {
      const Scalar& x = w.at(i, col);
      if (x.is_exact_zero()) continue;
      if (x.is_near_zero() || x.valuation() >= zero_floor(ctx)) {
        w.at(i, col) = Scalar::zero(ctx);
        continue;
      }
      auto split = split_at(w.at(i, col), e);
      if (split.quotient.is_zeroish()) {
        w.at(i, col) = split.low;
        continue;
      }
      for (std::size_t j = 0; j < w.cols(); ++j) {
        if (j == col)
          w.at(i, j) = split.low;
        else
          w.at(i, j) = w.at(i, j) - split.quotient * w.at(r, j);
      }
    }
    pivot_cols.push_back(col);
    pivot_exps.push_back(e);
    ++r;
  }
  // Any leftover rows must be certified zero rows.
  for (std::size_t i = r; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      if (!entry_is_zero(w.at(i, j)))
        throw PrecisionExhausted("row reduction left an uncertified remainder");
  // Canonical output: representatives that vanished within the window, and
  // unit noise at or beyond it, become exact zeros.  This stops certified
  // bounds from decaying across long pipelines of canonical bases.
  Matrix basis(r, w.cols(), ctx);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const Scalar& x = w.at(i, j);
      if (x.is_near_zero() && x.val_lower_bound() >= zero_floor(ctx))
        continue;  // stays the default exact zero
      if (x.is_unit_form() && x.valuation() >= zero_floor(ctx)) continue;
      basis.at(i, j) = x;
    }
  return Echelon{std::move(basis), std::move(pivot_cols), std::move(pivot_exps)};
}

Matrix hermite_basis(const Matrix& b) { return hermite_echelon(b).basis; }

std::vector<long> elementary_divisors(const Matrix& a) {
  Matrix w = a;
  const CtxPtr& ctx = w.ctx();
  const std::size_t n = std::min(w.rows(), w.cols());
  std::vector<long> exps;
  for (std::size_t t = 0; t < n; ++t) {
    std::optional<std::pair<std::size_t, std::size_t>> best;
    long best_val = 0;
    bool blocked = false;
    for (std::size_t i = t; i < w.rows(); ++i)
      for (std::size_t j = t; j < w.cols(); ++j) {
        const Scalar& x = w.at(i, j);
        if (x.is_exact_zero()) continue;
        if (x.is_near_zero()) {
          if (x.val_lower_bound() < zero_floor(ctx)) blocked = true;
          continue;
        }
        if (x.known_digits() < ctx->margin()) {
          blocked = true;
          continue;
        }
        if (x.valuation() >= zero_floor(ctx)) continue;
        if (!best || x.valuation() < best_val) {
          best = {{i, j}};
          best_val = x.valuation();
        }
      }
    if (!best) {
      if (blocked) throw PrecisionExhausted("Smith pivot not certified");
      throw SingularMatrix("Smith reduction on a rank-deficient matrix");
    }
    auto [pi, pj] = *best;
    for (std::size_t j = 0; j < w.cols(); ++j) std::swap(w.at(pi, j), w.at(t, j));
    for (std::size_t i = 0; i < w.rows(); ++i) std::swap(w.at(i, pj), w.at(i, t));
    const long e = best_val;
    Scalar unit_inv =
        Scalar::from_unit(padic::mod_inverse(w.at(t, t).unit_part(), ctx->modulus()), 0,
                          w.at(t, t).known_digits(), ctx);
    for (std::size_t j = t; j < w.cols(); ++j) w.at(t, j) = w.at(t, j) * unit_inv;
    w.at(t, t) = Scalar::p_power(e, ctx);
    for (std::size_t i = t + 1; i < w.rows(); ++i) {
      const Scalar& x = w.at(i, t);
      if (x.is_exact_zero()) continue;
      if (x.is_near_zero() || x.valuation() >= zero_floor(ctx)) {
        w.at(i, t) = Scalar::zero(ctx);
        continue;
      }
      Scalar q = x.shift(-e);
      for (std::size_t j = t; j < w.cols(); ++j) {
        if (j == t)
          w.at(i, j) = Scalar::zero(ctx);
        else
          w.at(i, j) = w.at(i, j) - q * w.at(t, j);
      }
    }
    for (std::size_t j = t + 1; j < w.cols(); ++j) {
      const Scalar& x = w.at(t, j);
      if (x.is_exact_zero()) continue;
      if (x.is_near_zero() || x.valuation() >= zero_floor(ctx)) {
        w.at(t, j) = Scalar::zero(ctx);
        continue;
      }
      w.at(t, j) = Scalar::zero(ctx);  // column cleared by the (now zeroed) rows below
    }
    exps.push_back(e);
  }
  std::sort(exps.begin(), exps.end());
  return exps;
}

namespace {

// Forward elimination with minimal-valuation pivoting; returns the pivots'
// product sign-adjusted for determinant use, or applies the same steps to an
// augmented identity for inversion.
struct GaussResult {
  Matrix reduced;
  Matrix companion;  // same row ops applied to the identity
  Scalar determinant;
};

GaussResult gauss(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidInput("gauss requires a square matrix");
  const CtxPtr& ctx = a.ctx();
  Matrix w = a;
  Matrix c = Matrix::identity(a.rows(), ctx);
  int swaps = 0;
  for (std::size_t t = 0; t < w.rows(); ++t) {
    std::optional<std::size_t> best;
    long best_val = 0;
    bool blocked = false;
    for (std::size_t i = t; i < w.rows(); ++i) {
      const Scalar& x = w.at(i, t);
      if (x.is_exact_zero()) continue;
      if (x.is_near_zero()) {
        if (x.val_lower_bound() < zero_floor(ctx)) blocked = true;
        continue;
      }
      if (x.known_digits() < ctx->margin()) {
        blocked = true;
        continue;
      }
      if (x.valuation() >= zero_floor(ctx)) continue;
      if (!best || x.valuation() < best_val) {
        best = i;
        best_val = x.valuation();
      }
    }
    if (!best) {
      if (blocked) throw PrecisionExhausted("Gauss pivot not certified");
      throw SingularMatrix();
    }
    if (*best != t) {
      ++swaps;
      for (std::size_t j = 0; j < w.cols(); ++j) std::swap(w.at(*best, j), w.at(t, j));
      for (std::size_t j = 0; j < c.cols(); ++j) std::swap(c.at(*best, j), c.at(t, j));
    }
    const Scalar pivot = w.at(t, t);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      if (i == t) continue;
      const Scalar& x = w.at(i, t);
      if (x.is_exact_zero()) continue;
      if (x.is_near_zero() || x.valuation() >= zero_floor(ctx)) {
        w.at(i, t) = Scalar::zero(ctx);
        continue;
      }
      Scalar q = x / pivot;
      for (std::size_t j = 0; j < w.cols(); ++j) {
        if (j == t)
          w.at(i, j) = Scalar::zero(ctx);
        else
          w.at(i, j) = w.at(i, j) - q * w.at(t, j);
      }
      for (std::size_t j = 0; j < c.cols(); ++j) c.at(i, j) = c.at(i, j) - q * c.at(t, j);
    }
  }
  Scalar det = Scalar::one(ctx);
  for (std::size_t t = 0; t < w.rows(); ++t) det = det * w.at(t, t);
  if (swaps % 2 == 1) det = -det;
  return GaussResult{std::move(w), std::move(c), std::move(det)};
}

}  // namespace

Scalar det(const Matrix& a) {
  if (a.rows() == 0) return Scalar::one(a.ctx());
  return gauss(a).determinant;
}

Matrix inverse(const Matrix& a) {
  if (a.rows() == 0) return a;
  GaussResult g = gauss(a);
  // w is now diagonal; divide companion rows by the diagonal.
  Matrix out = std::move(g.companion);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    Scalar d = g.reduced.at(i, i);
    for (std::size_t j = 0; j < out.cols(); ++j) out.at(i, j) = out.at(i, j) / d;
  }
  return out;
}

Vector solve(const Matrix& a, const Vector& b) {
  return mul_col(inverse(a), b);
}

std::optional<Vector> express_in_rows(const Echelon& ech, const Vector& v) {
  const CtxPtr& ctx = ech.basis.ctx();
  Vector rest = v;
  std::vector<Scalar> coeffs(ech.pivot_cols.size(), Scalar::zero(ctx));
  for (std::size_t i = 0; i < ech.pivot_cols.size(); ++i) {
    const Scalar& x = rest[ech.pivot_cols[i]];
    if (x.is_exact_zero()) continue;
    if (x.is_near_zero() || x.valuation() >= zero_floor(ctx)) {
      if (x.val_lower_bound() < zero_floor(ctx))
        throw PrecisionExhausted("coefficient extraction on weak zero");
      continue;
    }
    Scalar c = x.shift(-ech.pivot_exps[i]);
    coeffs[i] = c;
    rest = rest - ech.basis.row(i).scaled(c);
  }
  for (std::size_t j = 0; j < rest.size(); ++j) {
    if (!entry_is_zero(rest[j])) return std::nullopt;
  }
  return Vector(std::move(coeffs));
}

}  // namespace hyperbasis::linalg
