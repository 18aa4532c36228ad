#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hyperbasis/linalg.hpp"
#include "test_support.hpp"

using namespace hyperbasis;
using namespace hyperbasis::linalg;
using hyperbasis::padic::CtxPtr;
using hyperbasis::padic::Scalar;
using hyperbasis::padic::make_context;
using hyperbasis::testing::Rng;

namespace {

Matrix mat_from_ints(const std::vector<std::vector<std::int64_t>>& rows, const CtxPtr& ctx) {
  Matrix m(rows.size(), rows.front().size(), ctx);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m.at(i, j) = Scalar::from_integer(rows[i][j], ctx);
  return m;
}

Matrix random_unimodular(std::size_t n, const CtxPtr& ctx, Rng& rng, int steps = 8) {
  Matrix u = Matrix::identity(n, ctx);
  for (int s = 0; s < steps; ++s) {
    std::size_t i = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(n) - 1));
    std::size_t j = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(n) - 1));
    if (i == j) continue;
    Matrix shear = Matrix::identity(n, ctx);
    shear.at(i, j) = Scalar::from_integer(rng.uniform(-6, 6), ctx);
    u = u * shear;
  }
  return u;
}

Matrix random_invertible(std::size_t n, const CtxPtr& ctx, Rng& rng) {
  Matrix d(n, n, ctx);
  for (std::size_t i = 0; i < n; ++i)
    d.at(i, i) = Scalar::p_power(rng.uniform(0, 2), ctx);
  return random_unimodular(n, ctx, rng) * d * random_unimodular(n, ctx, rng);
}

bool same_digits(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (!a.at(i, j).same_representative(b.at(i, j))) return false;
  return true;
}

}  // namespace

TEST_CASE("matrix arithmetic basics") {
  auto ctx = make_context(5);
  Rng rng(2001);
  Matrix a = random_invertible(3, ctx, rng);
  CHECK(matrices_equal(Matrix::identity(3, ctx) * a, a));

  Matrix d = mat_from_ints({{5, 0}, {0, 25}}, ctx);
  Scalar dd = det(d);
  CHECK(dd.valuation() == 3);
  CHECK(dd.unit_part() == 1);

  Matrix swap = mat_from_ints({{0, 1}, {1, 0}}, ctx);
  CHECK(matrices_equal(inverse(swap), swap));

  CHECK_THROWS_AS(det(mat_from_ints({{1, 1}, {1, 1}}, ctx)), SingularMatrix);
}

TEST_CASE("hermite basis canonical examples") {
  SUBCASE("already canonical, p=5") {
    auto ctx = make_context(5);
    Matrix b = mat_from_ints({{5, 0}, {0, 1}}, ctx);
    CHECK(same_digits(hermite_basis(b), b));
  }
  SUBCASE("reduction at p=2 with membership oracle") {
    auto ctx = make_context(2);
    Matrix b = mat_from_ints({{1, 1}, {1, -1}}, ctx);
    Matrix want = mat_from_ints({{1, 1}, {0, 2}}, ctx);
    Echelon e = hermite_echelon(b);
    CHECK(same_digits(e.basis, want));
    // Membership oracle: (0,2) = (1,1)-(1,-1) is in the span, (1,0) is not.
    Vector inside(std::vector<Scalar>{Scalar::zero(ctx), Scalar::from_integer(2, ctx)});
    auto c_in = express_in_rows(e, inside);
    REQUIRE(c_in.has_value());
    CHECK((*c_in)[0].is_zeroish());
    CHECK((*c_in)[1].valuation() == 0);
    Vector outside(std::vector<Scalar>{Scalar::one(ctx), Scalar::zero(ctx)});
    auto c_out = express_in_rows(e, outside);
    REQUIRE(c_out.has_value());  // in the span over the field
    CHECK((*c_out)[1].valuation() < 0);  // but not integrally
  }
  SUBCASE("no spurious reduction, p=5") {
    auto ctx = make_context(5);
    Matrix b = mat_from_ints({{1, 1}, {0, 5}}, ctx);
    CHECK(same_digits(hermite_basis(b), b));
    Echelon e = hermite_echelon(b);
    Vector outside(std::vector<Scalar>{Scalar::one(ctx), Scalar::zero(ctx)});
    auto c = express_in_rows(e, outside);
    REQUIRE(c.has_value());
    CHECK((*c)[1].valuation() == -1);
  }
}

TEST_CASE("hermite basis is a canonical class function") {
  Rng rng(2002);
  for (std::int64_t p : {2, 3, 5}) {
    auto ctx = make_context(p);
    for (int trial = 0; trial < 40; ++trial) {
      std::size_t n = static_cast<std::size_t>(rng.uniform(2, 5));
      Matrix b = random_invertible(n, ctx, rng);
      Matrix u = random_unimodular(n, ctx, rng);
      for (long e : elementary_divisors(u)) CHECK(e == 0);
      Matrix h1 = hermite_basis(b);
      Matrix h2 = hermite_basis(u * b);
      CHECK(same_digits(h1, h2));
      CHECK(same_digits(hermite_basis(h1), h1));
    }
  }
}

TEST_CASE("elementary divisors") {
  auto ctx = make_context(3);
  CHECK(elementary_divisors(Matrix::identity(4, ctx)) == std::vector<long>{0, 0, 0, 0});
  CHECK(elementary_divisors(mat_from_ints({{1, 0}, {0, 3}}, ctx)) == std::vector<long>{0, 1});
  // 2x2 Smith reduction by hand: the unit entry gives divisor p^0 and the
  // determinant has valuation 2.
  CHECK(elementary_divisors(mat_from_ints({{3, 1}, {0, 3}}, ctx)) == std::vector<long>{0, 2});
}

TEST_CASE("elementary divisors invariance and determinant") {
  Rng rng(2003);
  auto ctx = make_context(5);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = static_cast<std::size_t>(rng.uniform(2, 5));
    Matrix a = random_invertible(n, ctx, rng);
    Matrix u = random_unimodular(n, ctx, rng);
    auto d1 = elementary_divisors(a);
    auto d2 = elementary_divisors(a * u);
    CHECK(d1 == d2);
    long sum = 0;
    for (long e : d1) sum += e;
    CHECK(sum == det(a).valuation());
  }
}

TEST_CASE("solve") {
  auto ctx = make_context(5);
  Rng rng(2004);
  SUBCASE("identity") {
    Vector b(std::vector<Scalar>{Scalar::from_integer(7, ctx), Scalar::from_integer(-2, ctx)});
    Vector x = solve(Matrix::identity(2, ctx), b);
    CHECK(entries_equal(x[0], b[0]));
    CHECK(entries_equal(x[1], b[1]));
  }
  SUBCASE("diagonal") {
    Matrix a = mat_from_ints({{5, 0}, {0, 1}}, ctx);
    Vector b(std::vector<Scalar>{Scalar::from_integer(5, ctx), Scalar::zero(ctx)});
    Vector x = solve(a, b);
    CHECK(entries_equal(x[0], Scalar::one(ctx)));
    CHECK(entry_is_zero(x[1]));
  }
  SUBCASE("random residual") {
    for (int trial = 0; trial < 30; ++trial) {
      Matrix a = random_invertible(3, ctx, rng);
      Vector b(std::vector<Scalar>{Scalar::from_integer(rng.uniform(-50, 50), ctx),
                                   Scalar::from_integer(rng.uniform(-50, 50), ctx),
                                   Scalar::from_integer(rng.uniform(-50, 50), ctx)});
      Vector x = solve(a, b);
      Vector r = mul_col(a, x) - b;
      for (std::size_t i = 0; i < 3; ++i) CHECK(entry_is_zero(r[i]));
    }
  }
}
