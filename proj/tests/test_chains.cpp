#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "hyperbasis/chains.hpp"

using namespace hyperbasis;
using namespace hyperbasis::chains;
using hyperbasis::lattice::Lattice;
using hyperbasis::lattice::SpacePtr;
using hyperbasis::padic::Scalar;
using hyperbasis::padic::make_context;
using hyperbasis::testing::Rng;
using hyperbasis::testing::apte_fixture;
using hyperbasis::testing::ints_matrix;

namespace {

SpacePtr alt_space(std::size_t pairs, std::int64_t p, const padic::CtxPtr& ctx) {
  linalg::Matrix g(2 * pairs, 2 * pairs, ctx);
  for (std::size_t i = 0; i < pairs; ++i) {
    g.at(2 * i, 2 * i + 1) = Scalar::one(ctx);
    g.at(2 * i + 1, 2 * i) = -Scalar::one(ctx);
  }
  (void)p;
  return std::make_shared<const BilinearSpace>(FormKind::Alternating, g);
}

SpacePtr quad_space(const std::vector<std::vector<std::int64_t>>& gram, const padic::CtxPtr& ctx) {
  return std::make_shared<const BilinearSpace>(FormKind::Quadratic, ints_matrix(gram, ctx));
}

}  // namespace

TEST_CASE("standard chain validates") {
  SUBCASE("alternating n=2") {
    auto ctx = make_context(2);
    auto sp = alt_space(2, 2, ctx);
    auto w = space::witt_decompose(*sp);
    LatticeChain c = standard_chain(w, sp);
    CHECK(c.length() == 3);
    auto rep = validate_chain(c);
    CHECK(rep.valid());
    // Member 1 carries exactly one p-modular plane.
    auto d = lattice::apte_decompose(c.member(1));
    CHECK(d.p_modular_pairs.size() == 1);
    CHECK(d.unimodular_pairs.size() == 1);
  }
  SUBCASE("quadratic with anisotropic kernel") {
    auto ctx = make_context(5);
    auto sp = quad_space({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 2, 0}, {0, 0, 0, -4}}, ctx);
    auto w = space::witt_decompose(*sp);
    CHECK(w.witt_index() == 1);
    LatticeChain c = standard_chain(w, sp);
    CHECK(c.length() == 2);
    CHECK(validate_chain(c).valid());
  }
  SUBCASE("anisotropic space: single-member chain") {
    auto ctx = make_context(5);
    auto sp = quad_space({{2, 0}, {0, -4}}, ctx);
    auto w = space::witt_decompose(*sp);
    CHECK(w.witt_index() == 0);
    LatticeChain c = standard_chain(w, sp);
    CHECK(c.length() == 1);
    CHECK(validate_chain(c).valid());
  }
}

TEST_CASE("invalid chains are reported") {
  auto ctx = make_context(3);
  auto sp = alt_space(1, 3, ctx);
  auto w = space::witt_decompose(*sp);
  LatticeChain good = standard_chain(w, sp);
  SUBCASE("p-scaled head instead of a proper step") {
    LatticeChain bad(
        std::vector<Lattice>{good.member(0), lattice::scaled_lattice(good.member(0), 1)});
    auto rep = validate_chain(bad);
    CHECK(!rep.valid());
  }
  SUBCASE("missing member") {
    LatticeChain bad(std::vector<Lattice>{good.member(0)});
    auto rep = validate_chain(bad);
    CHECK(!rep.valid());
    CHECK(rep.first_failure().find("length") != std::string::npos);
  }
}

TEST_CASE("transform chain examples") {
  auto ctx = make_context(3);
  auto sp = alt_space(1, 3, ctx);
  auto w = space::witt_decompose(*sp);
  LatticeChain c = standard_chain(w, sp);
  SUBCASE("identity") {
    LatticeChain t = transform_chain(c, linalg::Matrix::identity(2, ctx));
    for (std::size_t j = 0; j < c.length(); ++j)
      CHECK(lattice::lattice_equal(t.member(j), c.member(j)));
  }
  SUBCASE("symplectic swap") {
    linalg::Matrix g = ints_matrix({{0, 1}, {-1, 0}}, ctx);
    REQUIRE(is_isometry(*sp, g));
    LatticeChain t = transform_chain(c, g);
    CHECK(validate_chain(t).valid());
    CHECK(lattice::lattice_equal(t.member(0), c.member(0)));
    CHECK(!lattice::lattice_equal(t.member(1), c.member(1)));
  }
  SUBCASE("non-isometry is rejected") {
    linalg::Matrix g = ints_matrix({{1, 0}, {0, 3}}, ctx);
    CHECK_THROWS_AS(transform_chain(c, g), NotAnIsometry);
  }
}

TEST_CASE("random isometries") {
  SUBCASE("zero steps is the identity") {
    auto ctx = make_context(5);
    auto sp = quad_space({{0, 1}, {1, 0}}, ctx);
    linalg::Matrix g = random_isometry(sp, 42, 0);
    CHECK(linalg::matrices_equal(g, linalg::Matrix::identity(2, ctx)));
  }
  SUBCASE("certified and deterministic") {
    auto ctx = make_context(3);
    auto sp = quad_space({{0, 1, 0}, {1, 0, 0}, {0, 0, 2}}, ctx);
    linalg::Matrix g1 = random_isometry(sp, 7, 9);
    linalg::Matrix g2 = random_isometry(sp, 7, 9);
    CHECK(is_isometry(*sp, g1));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(g1.at(i, j).same_representative(g2.at(i, j)));
    linalg::Matrix g3 = random_isometry(sp, 8, 9);
    bool all_same = true;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        if (!g1.at(i, j).same_representative(g3.at(i, j))) all_same = false;
    CHECK(!all_same);
  }
  SUBCASE("transforms preserve validity and block counts") {
    Rng seeds(5001);
    for (int trial = 0; trial < 12; ++trial) {
      std::int64_t p = trial % 2 == 0 ? 2 : 5;
      auto ctx = make_context(p);
      SpacePtr sp;
      if (p == 2) {
        sp = alt_space(2, 2, ctx);
      } else {
        sp = quad_space({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 2, 0}, {0, 0, 0, -4}}, ctx);
      }
      auto w = space::witt_decompose(*sp);
      LatticeChain c = standard_chain(w, sp);
      linalg::Matrix g =
          random_isometry(sp, static_cast<std::uint64_t>(seeds.uniform(1, 1 << 20)), 8);
      LatticeChain t = transform_chain(c, g);
      auto rep = validate_chain(t);
      CAPTURE(rep.first_failure());
      CHECK(rep.valid());
    }
  }
}
