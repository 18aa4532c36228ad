#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "hyperbasis/lattice.hpp"

using namespace hyperbasis;
using namespace hyperbasis::lattice;
using hyperbasis::padic::Scalar;
using hyperbasis::padic::make_context;
using hyperbasis::testing::ApteFixture;
using hyperbasis::testing::Rng;
using hyperbasis::testing::apte_fixture;
using hyperbasis::testing::ints_matrix;
using hyperbasis::testing::ints_vector;
using hyperbasis::testing::random_unimodular;

namespace {

SpacePtr quad_space(const std::vector<std::vector<std::int64_t>>& gram, const padic::CtxPtr& ctx) {
  return std::make_shared<const BilinearSpace>(FormKind::Quadratic, ints_matrix(gram, ctx));
}

SpacePtr alt_space(const std::vector<std::vector<std::int64_t>>& gram, const padic::CtxPtr& ctx) {
  return std::make_shared<const BilinearSpace>(FormKind::Alternating, ints_matrix(gram, ctx));
}

}  // namespace

TEST_CASE("dual examples") {
  auto ctx = make_context(5);
  SUBCASE("unimodular hyperbolic plane is self-dual") {
    Lattice l = Lattice::standard(quad_space({{0, 1}, {1, 0}}, ctx));
    CHECK(lattice_equal(dual(l), l));
    CHECK(double_dual_check(l));
  }
  SUBCASE("p-modular plane dualizes to (1/p) of itself") {
    Lattice l = Lattice::standard(quad_space({{0, 5}, {5, 0}}, ctx));
    CHECK(lattice_equal(dual(l), scaled_lattice(l, -1)));
    CHECK(double_dual_check(l));
    CHECK(pr_modular(l, 1));
  }
  SUBCASE("diag basis in diag(2,2) space") {
    auto sp = quad_space({{2, 0}, {0, 2}}, ctx);
    Lattice l(sp, ints_matrix({{1, 0}, {0, 5}}, ctx));
    // Direct Gram inversion oracle: dual = R x p^-1 R.
    Lattice expect(sp, linalg::Matrix::identity(2, ctx));
    expect = Lattice(sp, ints_matrix({{1, 0}, {0, 1}}, ctx));
    Lattice d = dual(l);
    Vector half = ints_vector({1, 0}, ctx).scaled(Scalar::from_rational(1, 2, ctx));
    CHECK(member(half, d));
    CHECK(member(ints_vector({0, 1}, ctx).scaled(Scalar::from_rational(1, 10, ctx)), d));
    CHECK(!member(ints_vector({1, 0}, ctx).scaled(Scalar::from_rational(1, 5, ctx)), d));
    CHECK(double_dual_check(l));
  }
}

TEST_CASE("double dual on random lattices") {
  Rng rng(4001);
  for (std::int64_t p : {2, 3, 5}) {
    auto ctx = make_context(p);
    for (int trial = 0; trial < 25; ++trial) {
      std::size_t half = static_cast<std::size_t>(rng.uniform(1, 3));
      std::size_t dim = 2 * half;
      SpacePtr sp;
      if (p == 2) {
        linalg::Matrix g(dim, dim, ctx);
        for (std::size_t i = 0; i < half; ++i) {
          long s = rng.uniform(0, 2);
          g.at(2 * i, 2 * i + 1) = Scalar::p_power(s, ctx);
          g.at(2 * i + 1, 2 * i) = -Scalar::p_power(s, ctx);
        }
        sp = std::make_shared<const BilinearSpace>(FormKind::Alternating, g);
      } else {
        linalg::Matrix g(dim, dim, ctx);
        for (std::size_t i = 0; i < dim; ++i)
          g.at(i, i) = Scalar::from_integer(2 * rng.uniform(1, p - 1), ctx).shift(rng.uniform(0, 2));
        sp = std::make_shared<const BilinearSpace>(FormKind::Quadratic, g);
      }
      linalg::Matrix diag(dim, dim, ctx);
      for (std::size_t i = 0; i < dim; ++i) diag.at(i, i) = Scalar::p_power(rng.uniform(-1, 2), ctx);
      Lattice l(sp, random_unimodular(dim, ctx, rng) * diag);
      CHECK(double_dual_check(l));
    }
  }
}

TEST_CASE("predicates examples") {
  auto ctx = make_context(5);
  SUBCASE("unimodular plane") {
    Lattice l = Lattice::standard(quad_space({{0, 1}, {1, 0}}, ctx));
    auto pr = predicates(l);
    CHECK(pr.integral);
    CHECK(pr.even);
    CHECK(pr.totally_even);
    CHECK(pr.p_elementary);
    CHECK(pr_modular(l, 0));
    CHECK(pr_maximal(l, 0));
  }
  SUBCASE("p^2-modular plane is not p-elementary") {
    Lattice l = Lattice::standard(quad_space({{0, 25}, {25, 0}}, ctx));
    CHECK(!predicates(l).p_elementary);
    CHECK(pr_modular(l, 2));
  }
  SUBCASE("Re + Rpf inside the unimodular plane is p-maximal") {
    auto sp = quad_space({{0, 1}, {1, 0}}, ctx);
    Lattice l(sp, ints_matrix({{1, 0}, {0, 5}}, ctx));
    CHECK(l.gram().min_valuation() >= 1);
    CHECK(pr_maximal(l, 1));
    CHECK(!pr_maximal(l, 0));
  }
}

TEST_CASE("maximal lattice examples") {
  auto ctx = make_context(5);
  SUBCASE("hyperbolic plane") {
    auto sp = quad_space({{0, 1}, {1, 0}}, ctx);
    Lattice m = maximal_lattice(sp, 0);
    CHECK(lattice_equal(m, Lattice::standard(sp)));
    CHECK(pr_maximal(m, 0));
  }
  SUBCASE("anisotropic plane: unique maximal is the standard lattice") {
    auto sp = quad_space({{2, 0}, {0, -4}}, ctx);  // Q = x^2 - 2 y^2, 2 a non-residue
    Lattice m = maximal_lattice(sp, 0);
    CHECK(lattice_equal(m, Lattice::standard(sp)));
  }
  SUBCASE("alternating standard plane") {
    auto sp = alt_space({{0, 1}, {-1, 0}}, ctx);
    CHECK(lattice_equal(maximal_lattice(sp, 0), Lattice::standard(sp)));
  }
  SUBCASE("scaled start still saturates") {
    auto sp = quad_space({{0, 1}, {1, 0}}, ctx);
    Lattice m = maximal_lattice(sp, 2);
    CHECK(pr_maximal(m, 2));
    CHECK(m.gram().min_valuation() >= 2);
  }
}

TEST_CASE("modified dual examples") {
  SUBCASE("alternating p-modular plane becomes unimodular") {
    auto ctx = make_context(2);
    auto sp = alt_space({{0, 2}, {-2, 0}}, ctx);
    Lattice l = Lattice::standard(sp);
    Lattice md = modified_dual(l);
    CHECK(md.scale_exponent() == 1);
    CHECK(lattice_equal(md, scaled_lattice(l, -1).with_scale(1)));
    CHECK(pr_modular(md, 0));
  }
  SUBCASE("unimodular plane becomes p-modular") {
    auto ctx = make_context(5);
    auto sp = quad_space({{0, 1}, {1, 0}}, ctx);
    Lattice l = Lattice::standard(sp);
    Lattice md = modified_dual(l);
    CHECK(md.scale_exponent() == 1);
    CHECK(equal_span(md, l));
    CHECK(pr_modular(md, 1));
  }
  SUBCASE("rank-1 anisotropic: the lemma's double modified dual") {
    auto ctx = make_context(5);
    auto sp = quad_space({{2}}, ctx);
    Lattice l = Lattice::standard(sp);
    Lattice md = modified_dual(l);
    CHECK(md.scale_exponent() == 1);
    CHECK(equal_span(md, l));  // {x : p x^2 in R} = R
    Lattice md2 = modified_dual(md);
    CHECK(md2.scale_exponent() == 2);
    CHECK(equal_span(md2, scaled_lattice(l, -1)));  // {x : p^2 x^2 in R} = p^-1 R
  }
}

TEST_CASE("apte decomposition examples") {
  auto ctx = make_context(5);
  SUBCASE("H(1) perp H(p), already split") {
    auto sp = quad_space({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 5}, {0, 0, 5, 0}}, ctx);
    Lattice l = Lattice::standard(sp);
    auto d = apte_decompose(l);
    CHECK(d.unimodular_pairs.size() == 1);
    CHECK(d.p_modular_pairs.size() == 1);
    CHECK(d.an_basis.rows() == 0);
  }
  SUBCASE("block counts survive a random unimodular re-basing") {
    Rng rng(4002);
    for (int trial = 0; trial < 10; ++trial) {
      auto fx = apte_fixture(5, FormKind::Quadratic, 1, 1, 0, rng, ctx);
      auto d = apte_decompose(fx.built);
      CHECK(d.unimodular_pairs.size() == 1);
      CHECK(d.p_modular_pairs.size() == 1);
      for (long e : linalg::elementary_divisors(d.witness)) CHECK(e == 0);
    }
  }
  SUBCASE("H(p^2) is rejected as not p-elementary") {
    auto sp = quad_space({{0, 25}, {25, 0}}, ctx);
    try {
      apte_decompose(Lattice::standard(sp));
      FAIL("expected NotAPTE");
    } catch (const NotAPTE& e) {
      CHECK(e.reason == NotAPTE::Reason::NotPElementary);
    }
  }
}

TEST_CASE("split_hyperbolic examples") {
  auto ctx = make_context(5);
  auto sp = quad_space({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 5}, {0, 0, 5, 0}}, ctx);
  Lattice l = Lattice::standard(sp);
  SUBCASE("splitting the unimodular pair leaves H(p)") {
    auto [plane, comp] = split_hyperbolic(l, ints_vector({1, 0, 0, 0}, ctx),
                                          ints_vector({0, 1, 0, 0}, ctx));
    CHECK(comp.rank() == 2);
    CHECK(pr_modular(comp, 1));
  }
  SUBCASE("splitting the p-modular pair leaves H(1)") {
    auto [plane, comp] = split_hyperbolic(l, ints_vector({0, 0, 1, 0}, ctx),
                                          ints_vector({0, 0, 0, 1}, ctx));
    CHECK(comp.rank() == 2);
    CHECK(pr_modular(comp, 0));
  }
  SUBCASE("rank-0 complement") {
    auto sp2 = quad_space({{0, 1}, {1, 0}}, ctx);
    Lattice h1 = Lattice::standard(sp2);
    Vector e = ints_vector({1, 0}, ctx);
    Vector y = ints_vector({0, 1}, ctx);
    Vector f = y - e.scaled(h1.q(y));
    auto [plane, comp] = split_hyperbolic(h1, e, f);
    CHECK(comp.rank() == 0);
    CHECK(lattice_equal(plane, h1));
  }
  SUBCASE("a non-splitting plane is refused") {
    auto sp2 = quad_space({{0, 25}, {25, 0}}, ctx);
    Lattice h = Lattice::standard(sp2);
    CHECK_THROWS_AS(
        split_hyperbolic(h, ints_vector({1, 0}, ctx), ints_vector({0, 1}, ctx)),
        DoesNotSplit);
  }
}

TEST_CASE("isotropic sublattice examples") {
  auto ctx = make_context(5);
  SUBCASE("H(1) perp H(p): everything") {
    auto sp = quad_space({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 5}, {0, 0, 5, 0}}, ctx);
    Lattice l = Lattice::standard(sp);
    CHECK(lattice_equal(isotropic_sublattice(l), l));
  }
  SUBCASE("H(p) perp unit line: deep part of the kernel") {
    auto sp = quad_space({{0, 5, 0}, {5, 0, 0}, {0, 0, 2}}, ctx);
    Lattice l = Lattice::standard(sp);
    Lattice s = isotropic_sublattice(l);
    Lattice expect(sp, ints_matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 5}}, ctx));
    CHECK(lattice_equal(s, expect));
  }
  SUBCASE("H(p) alone") {
    auto sp = quad_space({{0, 5}, {5, 0}}, ctx);
    Lattice l = Lattice::standard(sp);
    CHECK(lattice_equal(isotropic_sublattice(l), l));
  }
  SUBCASE("anisotropic lattice has none") {
    auto sp = quad_space({{2, 0}, {0, -4}}, ctx);
    CHECK_THROWS_AS(isotropic_sublattice(Lattice::standard(sp)), NoIsotropicVectors);
  }
}

TEST_CASE("even sublattice dual bound") {
  auto ctx = make_context(5);
  SUBCASE("H(1) perp H(p)") {
    auto sp = quad_space({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 5}, {0, 0, 5, 0}}, ctx);
    CHECK(even_sublattice_dual_bound(Lattice::standard(sp)));
  }
  SUBCASE("H(p) perp unit line") {
    auto sp = quad_space({{0, 5, 0}, {5, 0, 0}, {0, 0, 2}}, ctx);
    CHECK(even_sublattice_dual_bound(Lattice::standard(sp)));
  }
  SUBCASE("random APTE lattices") {
    Rng rng(4003);
    int done = 0;
    for (int trial = 0; trial < 50; ++trial) {
      std::int64_t p = trial % 2 == 0 ? 3 : 5;
      auto c = make_context(p);
      std::size_t uni = static_cast<std::size_t>(rng.uniform(0, 2));
      std::size_t pmod = static_cast<std::size_t>(rng.uniform(0, 2));
      if (uni + pmod == 0) uni = 1;
      std::size_t an = static_cast<std::size_t>(rng.uniform(0, 7));
      auto fx = apte_fixture(p, FormKind::Quadratic, uni, pmod, an, rng, c);
      CHECK(even_sublattice_dual_bound(fx.built));
      ++done;
    }
    CHECK(done == 50);
  }
}

TEST_CASE("lattice comparisons") {
  auto ctx = make_context(5);
  auto sp = quad_space({{0, 1}, {1, 0}}, ctx);
  Rng rng(4004);
  Lattice l(sp, ints_matrix({{2, 1}, {1, 3}}, ctx));
  Lattice ul(sp, random_unimodular(2, ctx, rng) * l.basis());
  CHECK(lattice_equal(l, ul));
  CHECK(includes(l, scaled_lattice(l, 1)));
  CHECK(!includes(scaled_lattice(l, 1), l));
  CHECK(containment_exponent(l, scaled_lattice(l, 1)) == 1);

  auto sp2 = quad_space({{2, 0}, {0, 2}}, ctx);
  Lattice span(sp2, ints_matrix({{1, 1}, {0, 5}}, ctx));
  CHECK(!member(ints_vector({1, 0}, ctx), span));  // solve gives coefficient -1/5
  CHECK(member(ints_vector({1, 1}, ctx), span));
}

TEST_CASE("modified dual structural properties") {
  Rng rng(4005);
  int trials = 0;
  for (std::int64_t p : {3, 5}) {
    auto ctx = make_context(p);
    for (int t = 0; t < 12; ++t) {
      std::size_t uni = static_cast<std::size_t>(rng.uniform(0, 2));
      std::size_t pmod = static_cast<std::size_t>(rng.uniform(0, 2));
      if (uni + pmod == 0) pmod = 1;
      std::size_t an = static_cast<std::size_t>(rng.uniform(0, 7));
      auto fx = apte_fixture(p, FormKind::Quadratic, uni, pmod, an, rng, ctx);
      Lattice md = modified_dual(fx.built);
      // Still APTE, with unimodular and p-modular block counts exchanged.
      auto d = apte_decompose(md);
      CHECK(d.unimodular_pairs.size() == fx.pmod);
      CHECK(d.p_modular_pairs.size() == fx.uni);
      // The lemma: the double modified dual is p^-1 L at scale t+2.
      Lattice md2 = modified_dual(md);
      CHECK(md2.scale_exponent() == 2);
      CHECK(equal_span(md2, scaled_lattice(fx.built, -1)));
      ++trials;
    }
  }
  // Alternating case at p = 2.
  auto ctx2 = make_context(2);
  for (int t = 0; t < 8; ++t) {
    std::size_t uni = static_cast<std::size_t>(rng.uniform(0, 2));
    std::size_t pmod = static_cast<std::size_t>(rng.uniform(0, 2));
    if (uni + pmod == 0) uni = 1;
    auto fx = apte_fixture(2, FormKind::Alternating, uni, pmod, 0, rng, ctx2);
    Lattice md = modified_dual(fx.built);
    auto d = apte_decompose(md);
    CHECK(d.unimodular_pairs.size() == fx.pmod);
    CHECK(d.p_modular_pairs.size() == fx.uni);
    CHECK(equal_span(modified_dual(md), scaled_lattice(fx.built, -1)));
    ++trials;
  }
  CHECK(trials == 32);
}

TEST_CASE("split complement stays APTE") {
  Rng rng(4006);
  auto ctx = make_context(3);
  for (int t = 0; t < 15; ++t) {
    std::size_t uni = static_cast<std::size_t>(rng.uniform(1, 2));
    std::size_t pmod = static_cast<std::size_t>(rng.uniform(0, 1));
    auto fx = apte_fixture(3, FormKind::Quadratic, uni, pmod, static_cast<std::size_t>(rng.uniform(0, 4)), rng, ctx);
    auto pair = find_unimodular_pair(fx.built);
    REQUIRE(pair.has_value());
    auto [plane, comp] = split_hyperbolic(fx.built, pair->e, pair->f);
    auto d = apte_decompose(comp);  // must not throw
    CHECK(d.unimodular_pairs.size() == fx.uni - 1);
    CHECK(d.p_modular_pairs.size() == fx.pmod);
  }
}
