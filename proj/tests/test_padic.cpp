#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hyperbasis/padic.hpp"
#include "test_support.hpp"

using namespace hyperbasis;
using namespace hyperbasis::padic;
using hyperbasis::testing::Rng;
using hyperbasis::testing::brute_inverse_mod;
using hyperbasis::testing::brute_is_square_mod;
using hyperbasis::testing::ipow;

namespace {

// Independent solubility search for z^2 = a x^2 + b y^2 over Z_p: primitive
// solutions mod p^(2k+1) with k = 1 for odd p (valuations reduced mod 2
// beforehand make every such solution liftable) and k = 3 for p = 2.
int brute_hilbert_small(std::int64_t a, std::int64_t b, std::int64_t p) {
  auto reduce = [&](std::int64_t t) {
    while (t % (p * p) == 0) t /= p * p;
    return t;
  };
  a = reduce(a);
  b = reduce(b);
  const int k = p == 2 ? 3 : 1;
  const std::int64_t m = ipow(p, 2 * k + 1);
  auto sq = [&](std::int64_t t) { return ((t % m) * (t % m)) % m; };
  for (std::int64_t x = 0; x < m; ++x)
    for (std::int64_t y = 0; y < m; ++y)
      for (std::int64_t z = 0; z < m; ++z) {
        if (x % p == 0 && y % p == 0 && z % p == 0) continue;
        std::int64_t lhs = (((a % m) * sq(x) + (b % m) * sq(y)) % m + m) % m;
        if (lhs == sq(z)) return 1;
      }
  return -1;
}

}  // namespace

TEST_CASE("context validation") {
  CHECK_THROWS_AS(make_context(4), InvalidInput);
  CHECK_THROWS_AS(make_context(1), InvalidInput);
  CHECK_THROWS_AS(make_context(5, 8, 8), InvalidInput);
  CHECK_THROWS_AS(make_context(5, 8, 0), InvalidInput);
  auto ctx = make_context(5);
  CHECK(ctx->precision_digits() == 48);
  CHECK(ctx->margin() == 8);
}

TEST_CASE("from_rational matches hand oracles") {
  auto c3 = make_context(3);
  // 9/2 = 3^2 * (1/2); inverse of 2 mod 9 found by exhaustive search.
  CHECK(brute_inverse_mod(2, 9) == 5);
  Scalar x = Scalar::from_rational(9, 2, c3);
  CHECK(x.valuation() == 2);
  CHECK(x.unit_mod(2) == 5);

  CHECK(Scalar::from_rational(0, 7, c3).is_exact_zero());

  auto c5 = make_context(5);
  CHECK(brute_inverse_mod(3, 25) == 17);
  Scalar y = Scalar::from_rational(1, 3, c5);
  CHECK(y.valuation() == 0);
  CHECK(y.unit_mod(2) == 17);
}

TEST_CASE("valuation operation") {
  auto c3 = make_context(3);
  CHECK(Scalar::from_rational(9, 2, c3).valuation() == 2);
  auto c5 = make_context(5);
  CHECK(Scalar::zero(c5).valuation() == Scalar::kInfVal);
  auto c2 = make_context(2);
  CHECK(Scalar::from_rational(7, 4, c2).valuation() == -2);
}

TEST_CASE("arith examples") {
  auto c5 = make_context(5);
  const int N = c5->precision_digits();

  SUBCASE("single digit cancellation") {
    Scalar a = Scalar::from_integer(1, c5);
    Scalar b = Scalar::from_integer(4, c5);  // u = p-1
    Scalar s = a + b;
    CHECK(s.valuation() >= 1);
    CHECK(s.known_digits() == N - 1);
  }
  SUBCASE("valuation additivity") {
    Scalar a = Scalar::p_power(1, c5);
    Scalar b = Scalar::p_power(2, c5);
    Scalar prod = a * b;
    CHECK(prod.valuation() == 3);
    CHECK(prod.unit_part() == 1);
  }
  SUBCASE("inverse against brute oracle mod 25") {
    Scalar a = Scalar::from_integer(3, c5);
    Scalar inv = Scalar::one(c5) / a;
    CHECK(inv.unit_mod(2) == brute_inverse_mod(3, 25));
  }
  SUBCASE("division by zero") {
    CHECK_THROWS_AS(Scalar::one(c5) / Scalar::zero(c5), DivisionByZero);
  }
  SUBCASE("full cancellation gives zero at precision") {
    Scalar a = Scalar::from_rational(1, 3, c5);
    Scalar b = Scalar::from_integer(3, c5);
    Scalar z = a * b - Scalar::one(c5);
    CHECK(z.is_near_zero());
    CHECK(z.abs_precision() >= N);
    CHECK_THROWS_AS(z.valuation(), PrecisionExhausted);
    CHECK(z.is_zero_mod(N - c5->margin()));
  }
  SUBCASE("deep cancellation coarsens to zero-at-precision") {
    Scalar a = Scalar::one(c5);
    Scalar b = Scalar::one(c5) + Scalar::p_power(N - 2, c5);
    Scalar d = a - b;
    CHECK(d.is_near_zero());
    // Decisions that would need the lost digits refuse with margin errors.
    CHECK_THROWS_AS(d.valuation(), PrecisionExhausted);
    CHECK_THROWS_AS(d.is_zero_mod(N), PrecisionExhausted);
  }
}

TEST_CASE("roundtrip valuation on random rationals") {
  Rng rng(1001);
  for (std::int64_t p : {2, 3, 5, 7}) {
    auto ctx = make_context(p);
    for (int i = 0; i < 250; ++i) {
      std::int64_t num = rng.uniform(-100000, 100000);
      std::int64_t den = rng.uniform(1, 100000);
      if (num == 0) continue;
      Scalar x = Scalar::from_rational(num, den, ctx);
      long expect = int_valuation(num, p) - int_valuation(den, p);
      CHECK(x.valuation() == expect);
    }
  }
}

TEST_CASE("field axioms hold to certified precision") {
  Rng rng(1002);
  auto ctx = make_context(5);
  const long window = ctx->precision_digits() - ctx->margin();
  auto rand_scalar = [&]() {
    std::int64_t num = rng.uniform(1, 10000) * (rng.flip() ? 1 : -1);
    std::int64_t den = rng.uniform(1, 10000);
    return Scalar::from_rational(num, den, ctx);
  };
  for (int i = 0; i < 200; ++i) {
    Scalar a = rand_scalar(), b = rand_scalar(), c = rand_scalar();
    long base = a.valuation() + b.valuation() + c.valuation();
    CHECK(((a * b) * c).congruent_mod(a * (b * c), window + base));
    Scalar lhs = a * (b + c);
    Scalar rhs = a * b + a * c;
    CHECK(lhs.congruent_mod(rhs, window + std::min(lhs.val_lower_bound(), rhs.val_lower_bound())));
  }
}

TEST_CASE("sqrt examples") {
  auto c7 = make_context(7);
  Scalar four = Scalar::from_integer(4, c7);
  Scalar r = padic::sqrt(four);
  CHECK(r.valuation() == 0);
  CHECK(r.unit_mod(1) == 2);
  CHECK((r * r).same_representative(four));

  auto c5 = make_context(5);
  // 16^2 = 256 = 6 + 10*25, derived by enumerating squares mod 25.
  CHECK(brute_is_square_mod(6, 25));
  Scalar six = Scalar::from_integer(6, c5);
  Scalar s = padic::sqrt(six);
  CHECK(s.unit_mod(2) == 16);
  CHECK((s * s).same_representative(six));

  CHECK_THROWS_AS(padic::sqrt(Scalar::from_integer(2, c5)), NotASquare);
  CHECK_THROWS_AS(padic::sqrt(Scalar::p_power(1, c5)), NotASquare);
}

TEST_CASE("sqrt agrees with brute square oracle on unit classes") {
  for (std::int64_t p : {3, 5, 7}) {
    auto ctx = make_context(p);
    const std::int64_t m5 = ipow(p, 5);
    for (std::int64_t u = 1; u < p; ++u) {
      Scalar x = Scalar::from_integer(u, ctx);
      bool oracle = brute_is_square_mod(u, m5);
      CHECK(is_square(x) == oracle);
      if (oracle) {
        Scalar r = padic::sqrt(x);
        CHECK((r * r).same_representative(x));
        CHECK(r.unit_mod(1) <= (p - 1) / 2);
      } else {
        CHECK_THROWS_AS(padic::sqrt(x), NotASquare);
      }
    }
  }
  auto c2 = make_context(2);
  for (std::int64_t u : {1, 3, 5, 7}) {
    Scalar x = Scalar::from_integer(u, c2);
    bool oracle = brute_is_square_mod(u, 1 << 5);
    CHECK(is_square(x) == oracle);
    if (oracle) {
      Scalar r = padic::sqrt(x);
      CHECK((r * r).congruent_mod(x, c2->precision_digits() - 1));
      CHECK(r.unit_mod(2) == 1);
    }
  }
}

TEST_CASE("hilbert symbol examples") {
  auto c3 = make_context(3);
  for (std::int64_t a : {1, 2, 3, 6, -1}) {
    CHECK(hilbert_symbol(Scalar::one(c3), Scalar::from_integer(a, c3)) == 1);
  }
  CHECK(hilbert_symbol(Scalar::from_integer(2, c3), Scalar::from_integer(3, c3)) ==
        brute_hilbert_small(2, 3, 3));
  CHECK(brute_hilbert_small(2, 3, 3) == -1);

  auto c5 = make_context(5);
  CHECK(hilbert_symbol(Scalar::from_integer(5, c5), Scalar::from_integer(2, c5)) == -1);
  CHECK(brute_hilbert_small(5, 2, 5) == -1);
}

TEST_CASE("hilbert symbol agrees with solubility oracle on square classes") {
  for (std::int64_t p : {2, 3, 5, 7}) {
    auto ctx = make_context(p);
    std::vector<std::int64_t> reps;
    if (p == 2) {
      reps = {1, 3, 5, 7, 2, 6, 10, 14};
    } else {
      std::int64_t u = 2;
      while (legendre_symbol(u, p) != -1) ++u;
      reps = {1, u, p, p * u};
    }
    for (std::int64_t a : reps)
      for (std::int64_t b : reps) {
        int got = hilbert_symbol(Scalar::from_integer(a, ctx), Scalar::from_integer(b, ctx));
        int want = brute_hilbert_small(a, b, p);
        CAPTURE(p);
        CAPTURE(a);
        CAPTURE(b);
        CHECK(got == want);
      }
  }
}

TEST_CASE("hilbert symbol bilinearity") {
  Rng rng(1003);
  for (std::int64_t p : {2, 3, 5}) {
    auto ctx = make_context(p);
    for (int i = 0; i < 100; ++i) {
      std::int64_t a = rng.uniform(1, 500), b1 = rng.uniform(1, 500), b2 = rng.uniform(1, 500);
      Scalar sa = Scalar::from_integer(a, ctx);
      Scalar sb1 = Scalar::from_integer(b1, ctx);
      Scalar sb2 = Scalar::from_integer(b2, ctx);
      CHECK(hilbert_symbol(sa, sb1 * sb2) == hilbert_symbol(sa, sb1) * hilbert_symbol(sa, sb2));
    }
  }
}

TEST_CASE("rendering and rational reconstruction") {
  auto c5 = make_context(5);
  Scalar x = Scalar::from_rational(9, 2, c5);
  auto rec = x.reconstruct_rational(1000000);
  REQUIRE(rec.has_value());
  CHECK(rec->num == 9);
  CHECK(rec->den == 2);
  CHECK(Scalar::zero(c5).to_string() == "0");
  CHECK(Scalar::from_integer(7, c5).to_string().substr(0, 3) == "p^0");
  CHECK(parse_rational("-9/6").num == -3);
  CHECK(parse_rational("-9/6").den == 2);
  CHECK_THROWS_AS(parse_rational("1/"), InvalidInput);
  CHECK_THROWS_AS(parse_rational("x"), InvalidInput);
}
