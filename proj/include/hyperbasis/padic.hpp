#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyperbasis/errors.hpp"

namespace hyperbasis::padic {

using BigInt = boost::multiprecision::cpp_int;

/// Working parameters for truncated p-adic arithmetic: the prime p, the
/// number N of relative digits every representative carries, and the margin
/// M of certified digits a yes/no decision must keep in hand.
class PAdicContext {
 public:
  PAdicContext(std::int64_t p, int precision_digits = 48, int margin = 8);

  std::int64_t p() const { return p_; }
  int precision_digits() const { return precision_digits_; }
  int margin() const { return margin_; }

  /// p^k for 0 <= k <= N (cached), larger k computed on demand.
  const BigInt& pow(int k) const;
  const BigInt& modulus() const { return powers_[precision_digits_]; }

 private:
  std::int64_t p_;
  int precision_digits_;
  int margin_;
  std::vector<BigInt> powers_;
  mutable std::vector<BigInt> high_powers_;  // overflow cache beyond N
};

using CtxPtr = std::shared_ptr<const PAdicContext>;

CtxPtr make_context(std::int64_t p, int precision_digits = 48, int margin = 8);

/// An exact rational a/b used for input and (when reconstruction succeeds)
/// output.  den is kept positive and coprime to num.
struct Rational {
  BigInt num;
  BigInt den;
  Rational() : num(0), den(1) {}
  Rational(BigInt n, BigInt d);
  std::string to_string() const;
};

/// Parses "a", "-a" or "a/b" (base 10).
Rational parse_rational(const std::string& text);

/// A truncated p-adic number.  Three states:
///   exact zero        -- the distinguished zero produced by construction;
///   unit form         -- value p^v * u with u in [1, p^N) coprime to p,
///                        certified to `known` relative digits;
///   zero at precision -- the representative vanished below the certified
///                        window; all that is known is value in O(p^bound).
/// Representative arithmetic is exact and deterministic: every operation
/// reduces the unit part mod p^N the same way, so chains of operations that
/// cancel do so identically to the last stored digit.
class Scalar {
 public:
  static constexpr long kInfVal = std::numeric_limits<long>::max() / 4;

  Scalar() = default;

  static Scalar zero(CtxPtr ctx);
  static Scalar one(const CtxPtr& ctx) { return from_integer(1, ctx); }
  static Scalar from_integer(const BigInt& n, const CtxPtr& ctx);
  static Scalar from_rational(const Rational& q, const CtxPtr& ctx);
  static Scalar from_rational(const BigInt& num, const BigInt& den, const CtxPtr& ctx);
  /// p^v exactly, full precision.
  static Scalar p_power(long v, const CtxPtr& ctx);
  /// Raw constructor from unit data; u is reduced mod p^N and must stay
  /// coprime to p.
  static Scalar from_unit(BigInt u, long v, int known, const CtxPtr& ctx);
  /// The "zero at precision" value O(p^bound).
  static Scalar near_zero(long bound, CtxPtr ctx);

  const CtxPtr& ctx() const { return ctx_; }

  bool is_exact_zero() const { return state_ == State::ExactZero; }
  bool is_near_zero() const { return state_ == State::NearZero; }
  bool is_unit_form() const { return state_ == State::Unit; }
  /// Exact zero or representative zero.
  bool is_zeroish() const { return state_ != State::Unit; }

  /// Valuation of the representative; +infinity (kInfVal) for exact zero;
  /// PrecisionExhausted for zero-at-precision (the valuation is unknown).
  long valuation() const;
  /// A certified lower bound on the valuation, defined in every state.
  long val_lower_bound() const;
  /// v + known for unit form, the bound for near zero, +inf for exact zero:
  /// the absolute p-power below which nothing is certified.
  long abs_precision() const;

  int known_digits() const { return known_; }
  const BigInt& unit_part() const;
  /// Unit representative reduced mod p^k (k <= N).
  BigInt unit_mod(int k) const;
  /// Representative digits d_0..d_{k-1} of the unit part.
  std::vector<int> digits(int k) const;

  Scalar operator+(const Scalar& o) const;
  Scalar operator-(const Scalar& o) const;
  Scalar operator*(const Scalar& o) const;
  Scalar operator/(const Scalar& o) const;
  Scalar operator-() const;
  Scalar inverse() const;
  /// Multiplies by p^k (exact, no precision change).
  Scalar shift(long k) const;

  bool same_representative(const Scalar& o) const;

  // --- margin-gated decisions -------------------------------------------

  /// Certified "valuation >= r".  Throws PrecisionExhausted when the state
  /// cannot support the decision.
  bool val_ge(long r) const;
  /// Certified exact valuation; requires >= margin known digits on unit
  /// values; kInfVal for exact zero; throws on near zero.
  long certified_val() const;
  /// True when the value is certifiably congruent to o modulo p^abs_window.
  bool congruent_mod(const Scalar& o, long abs_window) const;
  /// True when the value is certifiably in O(p^abs_window).
  bool is_zero_mod(long abs_window) const;

  /// Renders "p^v * (d0 + d1*p + ... + O(p^k))".
  std::string to_string(int max_digits = 8) const;

  /// Attempts small-rational reconstruction of the certified digits.
  std::optional<Rational> reconstruct_rational(const BigInt& bound) const;

 private:
  enum class State { ExactZero, NearZero, Unit };
  State state_ = State::ExactZero;
  long v_ = 0;        // valuation (Unit) or absolute bound (NearZero)
  BigInt u_ = 0;      // unit representative in [1, p^N), 0 otherwise
  int known_ = 0;     // certified relative digits (Unit only)
  CtxPtr ctx_;

  void require_ctx(const Scalar& o) const;
  Scalar add_impl(const Scalar& o, bool negate_o) const;
};

/// Valuation of a nonzero integer.
long int_valuation(const BigInt& n, std::int64_t p);

/// Extended-gcd modular inverse, m > 1, gcd(a, m) = 1.
BigInt mod_inverse(const BigInt& a, const BigInt& m);

/// Legendre symbol (a/p) for odd prime p; a not divisible by p -> +-1,
/// a divisible by p -> 0.
int legendre_symbol(const BigInt& a, std::int64_t p);

/// Square root with Hensel lifting.  Tie-break: for odd p the root whose
/// unit part mod p lies in [1,(p-1)/2]; for p = 2 the root congruent to
/// 1 mod 4.  Throws NotASquare / PrecisionExhausted.
Scalar sqrt(const Scalar& a);

bool is_square(const Scalar& a);

/// Hilbert symbol (a,b)_p in {+1,-1} by the classical closed form.
int hilbert_symbol(const Scalar& a, const Scalar& b);

}  // namespace hyperbasis::padic
