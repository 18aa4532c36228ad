#include "hyperbasis/padic.hpp"

#include <algorithm>
#include <sstream>

namespace hyperbasis::padic {

namespace {

bool is_prime_desk_scale(std::int64_t p) {
  if (p < 2) return false;
  for (std::int64_t d = 2; d * d <= p; ++d) {
    if (p % d == 0) return false;
  }
  return true;
}

}  // namespace

PAdicContext::PAdicContext(std::int64_t p, int precision_digits, int margin)
    : p_(p), precision_digits_(precision_digits), margin_(margin) {
  if (!is_prime_desk_scale(p)) throw InvalidInput("p must be prime, got " + std::to_string(p));
  if (margin < 1) throw InvalidInput("margin must be >= 1");
  if (precision_digits <= margin)
    throw InvalidInput("precision_digits must exceed margin");
  powers_.reserve(static_cast<std::size_t>(precision_digits) + 1);
  BigInt acc = 1;
  for (int k = 0; k <= precision_digits; ++k) {
    powers_.push_back(acc);
    acc *= p;
  }
}

const BigInt& PAdicContext::pow(int k) const {
  if (k < 0) throw InvalidInput("negative power request");
  if (k <= precision_digits_) return powers_[static_cast<std::size_t>(k)];
  std::size_t idx = static_cast<std::size_t>(k - precision_digits_ - 1);
  while (high_powers_.size() <= idx) {
    const BigInt& prev = high_powers_.empty() ? powers_.back() : high_powers_.back();
    high_powers_.push_back(prev * p_);
  }
  return high_powers_[idx];
}

CtxPtr make_context(std::int64_t p, int precision_digits, int margin) {
  return std::make_shared<const PAdicContext>(p, precision_digits, margin);
}

Rational::Rational(BigInt n, BigInt d) : num(std::move(n)), den(std::move(d)) {
  if (den == 0) throw DivisionByZero();
  if (den < 0) {
    den = -den;
    num = -num;
  }
  BigInt g = boost::multiprecision::gcd(num < 0 ? BigInt(-num) : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

std::string Rational::to_string() const {
  std::ostringstream os;
  os << num;
  if (den != 1) os << "/" << den;
  return os.str();
}

Rational parse_rational(const std::string& text) {
  auto bad = [&]() { return InvalidInput("malformed rational: '" + text + "'"); };
  std::string s = text;
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  if (s.empty()) throw bad();
  std::size_t slash = s.find('/');
  auto parse_int = [&](const std::string& part) {
    if (part.empty()) throw bad();
    std::size_t i = (part[0] == '+' || part[0] == '-') ? 1 : 0;
    if (i == part.size()) throw bad();
    for (; i < part.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(part[i]))) throw bad();
    return BigInt(part);
  };
  if (slash == std::string::npos) return Rational(parse_int(s), 1);
  BigInt num = parse_int(s.substr(0, slash));
  BigInt den = parse_int(s.substr(slash + 1));
  if (den == 0) throw bad();
  return Rational(num, den);
}

long int_valuation(const BigInt& n, std::int64_t p) {
  if (n == 0) throw InvalidInput("valuation of integer zero");
  BigInt a = n < 0 ? BigInt(-n) : n;
  long v = 0;
  while (a % p == 0) {
    a /= p;
    ++v;
  }
  return v;
}

BigInt mod_inverse(const BigInt& a, const BigInt& m) {
  BigInt r0 = m, r1 = ((a % m) + m) % m;
  BigInt t0 = 0, t1 = 1;
  while (r1 != 0) {
    BigInt q = r0 / r1;
    BigInt r2 = r0 - q * r1;
    r0 = r1;
    r1 = r2;
    BigInt t2 = t0 - q * t1;
    t0 = t1;
    t1 = t2;
  }
  if (r0 != 1) throw InvalidInput("element not invertible in modular inverse");
  return ((t0 % m) + m) % m;
}

// --- Scalar construction ----------------------------------------------------

Scalar Scalar::zero(CtxPtr ctx) {
  Scalar s;
  s.state_ = State::ExactZero;
  s.ctx_ = std::move(ctx);
  return s;
}

Scalar Scalar::near_zero(long bound, CtxPtr ctx) {
  Scalar s;
  s.state_ = State::NearZero;
  s.v_ = bound;
  s.ctx_ = std::move(ctx);
  return s;
}

Scalar Scalar::from_unit(BigInt u, long v, int known, const CtxPtr& ctx) {
  const int N = ctx->precision_digits();
  u = ((u % ctx->modulus()) + ctx->modulus()) % ctx->modulus();
  if (u == 0 || u % ctx->p() == 0)
    throw InvalidInput("unit part must be coprime to p");
  Scalar s;
  s.state_ = State::Unit;
  s.v_ = v;
  s.u_ = std::move(u);
  s.known_ = std::min(known, N);
  s.ctx_ = ctx;
  return s;
}

Scalar Scalar::from_integer(const BigInt& n, const CtxPtr& ctx) {
  if (n == 0) return zero(ctx);
  long v = int_valuation(n, ctx->p());
  BigInt u = n / ctx->pow(static_cast<int>(v));
  return from_unit(std::move(u), v, ctx->precision_digits(), ctx);
}

Scalar Scalar::from_rational(const Rational& q, const CtxPtr& ctx) {
  return from_rational(q.num, q.den, ctx);
}

Scalar Scalar::from_rational(const BigInt& num, const BigInt& den, const CtxPtr& ctx) {
  if (den == 0) throw DivisionByZero();
  if (num == 0) return zero(ctx);
  long vn = int_valuation(num, ctx->p());
  long vd = int_valuation(den, ctx->p());
  BigInt un = num / ctx->pow(static_cast<int>(vn));
  BigInt ud = den / ctx->pow(static_cast<int>(vd));
  BigInt u = (un % ctx->modulus()) * mod_inverse(ud, ctx->modulus());
  return from_unit(std::move(u), vn - vd, ctx->precision_digits(), ctx);
}

Scalar Scalar::p_power(long v, const CtxPtr& ctx) {
  return from_unit(1, v, ctx->precision_digits(), ctx);
}

// --- state queries -----------------------------------------------------------

long Scalar::valuation() const {
  switch (state_) {
    case State::ExactZero: return kInfVal;
    case State::Unit: return v_;
    default: throw PrecisionExhausted("valuation of a value that is zero at precision O(p^" +
                                      std::to_string(v_) + ")");
  }
}

long Scalar::val_lower_bound() const {
  return state_ == State::ExactZero ? kInfVal : v_;
}

long Scalar::abs_precision() const {
  switch (state_) {
    case State::ExactZero: return kInfVal;
    case State::Unit: return v_ + known_;
    default: return v_;
  }
}

const BigInt& Scalar::unit_part() const {
  if (state_ != State::Unit) throw PrecisionExhausted("unit part of a zero value");
  return u_;
}

BigInt Scalar::unit_mod(int k) const {
  return unit_part() % ctx_->pow(k);
}

std::vector<int> Scalar::digits(int k) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  BigInt u = unit_part();
  for (int i = 0; i < k; ++i) {
    out.push_back(static_cast<int>(u % ctx_->p()));
    u /= ctx_->p();
  }
  return out;
}

void Scalar::require_ctx(const Scalar& o) const {
  if (!ctx_ || !o.ctx_ || ctx_->p() != o.ctx_->p() ||
      ctx_->precision_digits() != o.ctx_->precision_digits())
    throw InvalidInput("mixing scalars from different p-adic contexts");
}

// --- arithmetic ---------------------------------------------------------------

Scalar Scalar::add_impl(const Scalar& o, bool negate_o) const {
  require_ctx(o);
  if (is_exact_zero() && o.is_exact_zero()) return zero(ctx_);
  if (is_exact_zero()) return negate_o ? -o : o;
  if (o.is_exact_zero()) return *this;

  const long A = std::min(abs_precision(), o.abs_precision());
  if (is_near_zero() && o.is_near_zero()) return near_zero(A, ctx_);
  if (is_near_zero() || o.is_near_zero()) {
    const Scalar& unit = is_near_zero() ? o : *this;
    bool flip = is_near_zero() && negate_o;
    if (unit.v_ >= A) return near_zero(A, ctx_);
    Scalar r = unit;
    r.known_ = static_cast<int>(std::min<long>(unit.known_, A - unit.v_));
    if (flip) r.u_ = ctx_->modulus() - r.u_;
    // Results certified below the margin carry no usable digits; coarsen to
    // zero-at-precision and let the margin gate fire at decision time.
    if (r.known_ < ctx_->margin()) return near_zero(r.v_, ctx_);
    return r;
  }

  const long m = std::min(v_, o.v_);
  BigInt t = u_ * ctx_->pow(static_cast<int>(v_ - m));
  BigInt to = o.u_ * ctx_->pow(static_cast<int>(o.v_ - m));
  if (negate_o)
    t -= to;
  else
    t += to;
  if (t == 0) return near_zero(A, ctx_);
  long c = int_valuation(t, ctx_->p());
  long v = m + c;
  if (v >= A) return near_zero(A, ctx_);
  BigInt u = t / ctx_->pow(static_cast<int>(c));
  int known = static_cast<int>(std::min<long>(A - v, ctx_->precision_digits()));
  if (known < ctx_->margin()) return near_zero(v, ctx_);
  return from_unit(std::move(u), v, known, ctx_);
}

Scalar Scalar::operator+(const Scalar& o) const { return add_impl(o, false); }
Scalar Scalar::operator-(const Scalar& o) const { return add_impl(o, true); }

Scalar Scalar::operator-() const {
  if (state_ != State::Unit) return *this;
  Scalar r = *this;
  r.u_ = ctx_->modulus() - u_;
  return r;
}

Scalar Scalar::operator*(const Scalar& o) const {
  require_ctx(o);
  if (is_exact_zero() || o.is_exact_zero()) return zero(ctx_);
  if (is_near_zero() || o.is_near_zero())
    return near_zero(val_lower_bound() + o.val_lower_bound(), ctx_);
  BigInt u = (u_ * o.u_) % ctx_->modulus();
  int known = std::min(known_, o.known_);
  if (known < ctx_->margin()) return near_zero(v_ + o.v_, ctx_);
  return from_unit(std::move(u), v_ + o.v_, known, ctx_);
}

Scalar Scalar::inverse() const {
  if (is_exact_zero()) throw DivisionByZero();
  if (is_near_zero())
    throw PrecisionExhausted("inverse of a value that is zero at precision");
  BigInt u = mod_inverse(u_, ctx_->modulus());
  return from_unit(std::move(u), -v_, known_, ctx_);
}

Scalar Scalar::operator/(const Scalar& o) const {
  require_ctx(o);
  if (o.is_exact_zero()) throw DivisionByZero();
  if (o.is_near_zero())
    throw PrecisionExhausted("division by a value that is zero at precision");
  if (is_exact_zero()) return zero(ctx_);
  if (is_near_zero()) return near_zero(v_ - o.v_, ctx_);
  BigInt u = (u_ * mod_inverse(o.u_, ctx_->modulus())) % ctx_->modulus();
  int known = std::min(known_, o.known_);
  if (known < ctx_->margin()) return near_zero(v_ - o.v_, ctx_);
  return from_unit(std::move(u), v_ - o.v_, known, ctx_);
}

Scalar Scalar::shift(long k) const {
  if (state_ == State::ExactZero) return *this;
  Scalar r = *this;
  r.v_ += k;
  return r;
}

bool Scalar::same_representative(const Scalar& o) const {
  if (state_ != o.state_) return false;
  if (state_ == State::ExactZero) return true;
  if (state_ == State::NearZero) return v_ == o.v_;
  return v_ == o.v_ && u_ == o.u_;
}

// --- decisions -----------------------------------------------------------------

bool Scalar::val_ge(long r) const {
  switch (state_) {
    case State::ExactZero: return true;
    case State::Unit:
      if (known_ < ctx_->margin())
        throw PrecisionExhausted("valuation comparison without margin");
      return v_ >= r;
    default:
      if (v_ >= r) return true;  // value in O(p^bound), bound >= r
      throw PrecisionExhausted("valuation lower bound O(p^" + std::to_string(v_) +
                               ") too weak to compare against " + std::to_string(r));
  }
}

long Scalar::certified_val() const {
  if (state_ == State::ExactZero) return kInfVal;
  if (state_ == State::NearZero)
    throw PrecisionExhausted("exact valuation of a zero-at-precision value");
  if (known_ < ctx_->margin())
    throw PrecisionExhausted("valuation certified below margin");
  return v_;
}

bool Scalar::is_zero_mod(long abs_window) const {
  switch (state_) {
    case State::ExactZero: return true;
    case State::Unit:
      if (v_ >= abs_window) {
        if (known_ < ctx_->margin())
          throw PrecisionExhausted("zero test without margin");
        return true;
      }
      if (v_ + known_ < abs_window)
        throw PrecisionExhausted("zero test beyond certified digits");
      return false;
    default:
      if (v_ >= abs_window) return true;
      throw PrecisionExhausted("zero test beyond certified digits");
  }
}

bool Scalar::congruent_mod(const Scalar& o, long abs_window) const {
  return (*this - o).is_zero_mod(abs_window);
}

// --- rendering -------------------------------------------------------------------

std::string Scalar::to_string(int max_digits) const {
  if (is_exact_zero()) return "0";
  if (is_near_zero()) return "O(p^" + std::to_string(v_) + ")";
  std::ostringstream os;
  os << "p^" << v_ << " * (";
  int k = std::min(known_, max_digits);
  auto d = digits(k);
  bool first = true;
  for (int i = 0; i < k; ++i) {
    if (d[static_cast<std::size_t>(i)] == 0) continue;
    if (!first) os << " + ";
    first = false;
    os << d[static_cast<std::size_t>(i)];
    if (i == 1) os << "*p";
    if (i > 1) os << "*p^" << i;
  }
  if (!first) os << " + ";
  os << "O(p^" << known_ << "))";
  return os.str();
}

std::optional<Rational> Scalar::reconstruct_rational(const BigInt& bound) const {
  if (is_exact_zero()) return Rational(0, 1);
  if (is_near_zero()) return std::nullopt;
  // Classic half-extended Euclid rational reconstruction of u mod p^known.
  BigInt m = ctx_->pow(known_);
  BigInt r0 = m, r1 = u_ % m;
  BigInt t0 = 0, t1 = 1;
  BigInt limit;
  {
    // limit = floor(sqrt(m/2))
    BigInt half = m / 2;
    limit = boost::multiprecision::sqrt(half);
  }
  while (r1 > limit) {
    BigInt q = r0 / r1;
    BigInt r2 = r0 - q * r1;
    r0 = r1;
    r1 = r2;
    BigInt t2 = t0 - q * t1;
    t0 = t1;
    t1 = t2;
  }
  BigInt num = r1, den = t1;
  if (den == 0) return std::nullopt;
  if (den < 0) {
    den = -den;
    num = -num;
  }
  BigInt an = num < 0 ? BigInt(-num) : num;
  if (an > bound || den > bound) return std::nullopt;
  if (den % ctx_->p() == 0) return std::nullopt;
  // Validate the congruence num = u * den mod p^known.
  if (((u_ * den - num) % m + m) % m != 0) return std::nullopt;
  BigInt g = boost::multiprecision::gcd(an, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  // Fold in p^v.
  if (v_ >= 0)
    num *= ctx_->pow(static_cast<int>(v_));
  else
    den *= ctx_->pow(static_cast<int>(-v_));
  return Rational(num, den);
}

// --- number-theoretic helpers ------------------------------------------------------

int legendre_symbol(const BigInt& a, std::int64_t p) {
  BigInt r = ((a % p) + p) % p;
  if (r == 0) return 0;
  // Euler's criterion with fast modular exponentiation.
  BigInt e = (p - 1) / 2, base = r, acc = 1, mod = p;
  while (e > 0) {
    if (e % 2 == 1) acc = (acc * base) % mod;
    base = (base * base) % mod;
    e /= 2;
  }
  return acc == 1 ? 1 : -1;
}

namespace {

// Square root mod odd prime p by Tonelli-Shanks.
BigInt sqrt_mod_p(const BigInt& a, std::int64_t p) {
  BigInt n = ((a % p) + p) % p;
  if (n == 0) return 0;
  auto powmod = [&](BigInt b, BigInt e) {
    BigInt acc = 1;
    b %= p;
    while (e > 0) {
      if (e % 2 == 1) acc = (acc * b) % p;
      b = (b * b) % p;
      e /= 2;
    }
    return acc;
  };
  if (p % 4 == 3) return powmod(n, (BigInt(p) + 1) / 4);
  // Find q, s with p-1 = q * 2^s, q odd.
  BigInt q = p - 1;
  int s = 0;
  while (q % 2 == 0) {
    q /= 2;
    ++s;
  }
  // Deterministic: smallest quadratic non-residue.
  BigInt z = 2;
  while (legendre_symbol(z, p) != -1) ++z;
  BigInt m = s, c = powmod(z, q), t = powmod(n, q), r = powmod(n, (q + 1) / 2);
  while (t != 1) {
    BigInt tt = t;
    int i = 0;
    while (tt != 1) {
      tt = (tt * tt) % p;
      ++i;
    }
    BigInt b = c;
    for (BigInt j = 0; j < m - i - 1; ++j) b = (b * b) % p;
    m = i;
    c = (b * b) % p;
    t = (t * c) % p;
    r = (r * b) % p;
  }
  return r;
}

}  // namespace

Scalar sqrt(const Scalar& a) {
  if (a.is_exact_zero()) return a;
  if (a.is_near_zero())
    throw PrecisionExhausted("sqrt of a value that is zero at precision");
  const auto& ctx = a.ctx();
  const std::int64_t p = ctx->p();
  const int N = ctx->precision_digits();
  const int need = p == 2 ? std::max(3, ctx->margin()) : ctx->margin();
  if (a.known_digits() < need)
    throw PrecisionExhausted("sqrt needs more certified digits");
  if (a.valuation() % 2 != 0) throw NotASquare("odd valuation");
  const BigInt& u = a.unit_part();

  BigInt w;
  int known_out;
  if (p != 2) {
    if (legendre_symbol(u, p) != 1) throw NotASquare("unit part is a quadratic non-residue");
    w = sqrt_mod_p(u, p);
    // Newton iteration w <- (w + u/w)/2, doubling certified digits, until the
    // representative satisfies w^2 = u mod p^N exactly.
    BigInt inv2 = mod_inverse(2, ctx->modulus());
    for (int iter = 0; iter < 64; ++iter) {
      if ((w * w - u) % ctx->modulus() == 0) break;
      w = ((w + u * mod_inverse(w, ctx->modulus())) % ctx->modulus() * inv2) % ctx->modulus();
    }
    if ((w * w - u) % ctx->modulus() != 0)
      throw PrecisionExhausted("sqrt lifting failed to converge");
    known_out = a.known_digits();
    if (w % p > (p - 1) / 2) w = ctx->modulus() - w;
  } else {
    if (u % 8 != 1) throw NotASquare("unit part not congruent to 1 mod 8");
    // Lift x^2 = u mod 2^j digit by digit from x = 1 mod 8.
    w = 1;
    for (int j = 3; j < N; ++j) {
      BigInt r = (w * w - u) % ctx->pow(j + 1);
      if (r != 0) w += ctx->pow(j - 1);
    }
    if ((w * w - u) % ctx->modulus() != 0)
      throw PrecisionExhausted("2-adic sqrt lifting failed");
    known_out = a.known_digits() - 1;  // derivative 2w eats one digit
    if (w % 4 != 1) w = ctx->modulus() - w;
  }
  if (known_out < ctx->margin()) throw PrecisionExhausted("sqrt result below margin");
  return Scalar::from_unit(std::move(w), a.valuation() / 2, known_out, ctx);
}

bool is_square(const Scalar& a) {
  if (a.is_exact_zero()) return true;
  if (a.is_near_zero()) throw PrecisionExhausted("square test on zero-at-precision value");
  const auto& ctx = a.ctx();
  const int need = ctx->p() == 2 ? std::max(3, ctx->margin()) : ctx->margin();
  if (a.known_digits() < need) throw PrecisionExhausted("square test needs more digits");
  if (a.valuation() % 2 != 0) return false;
  if (ctx->p() == 2) return a.unit_part() % 8 == 1;
  return legendre_symbol(a.unit_part(), ctx->p()) == 1;
}

int hilbert_symbol(const Scalar& a, const Scalar& b) {
  if (a.is_exact_zero() || b.is_exact_zero())
    throw InvalidInput("hilbert symbol requires nonzero arguments");
  if (a.is_near_zero() || b.is_near_zero())
    throw PrecisionExhausted("hilbert symbol on zero-at-precision value");
  const auto& ctx = a.ctx();
  const std::int64_t p = ctx->p();
  const int need = p == 2 ? 3 : 1;
  if (a.known_digits() < need || b.known_digits() < need)
    throw PrecisionExhausted("hilbert symbol needs more certified digits");
  const long alpha = a.valuation(), beta = b.valuation();
  if (p != 2) {
    int sign = 1;
    if ((alpha % 2 != 0) && (beta % 2 != 0) && ((p - 1) / 2) % 2 == 1) sign = -sign;
    if (beta % 2 != 0 && legendre_symbol(a.unit_part(), p) == -1) sign = -sign;
    if (alpha % 2 != 0 && legendre_symbol(b.unit_part(), p) == -1) sign = -sign;
    return sign;
  }
  auto eps = [](const BigInt& u) { return static_cast<int>(((u - 1) / 2) % 2); };
  auto omega = [](const BigInt& u) { return static_cast<int>(((u * u - 1) / 8) % 2); };
  BigInt ua = a.unit_mod(3), ub = b.unit_mod(3);
  int e = eps(ua) * eps(ub) + static_cast<int>(alpha % 2 != 0) * omega(ub) +
          static_cast<int>(beta % 2 != 0) * omega(ua);
  return e % 2 == 0 ? 1 : -1;
}

}  // namespace hyperbasis::padic
