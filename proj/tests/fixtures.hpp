#pragma once

#include <memory>
#include <vector>

#include "hyperbasis/lattice.hpp"
#include "test_support.hpp"

namespace hyperbasis::testing {

using lattice::Lattice;
using lattice::SpacePtr;
using linalg::Matrix;
using linalg::Vector;
using padic::CtxPtr;
using padic::Scalar;
using space::BilinearSpace;
using space::FormKind;

inline Matrix ints_matrix(const std::vector<std::vector<std::int64_t>>& rows, const CtxPtr& ctx) {
  Matrix m(rows.size(), rows.front().size(), ctx);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m.at(i, j) = Scalar::from_integer(rows[i][j], ctx);
  return m;
}

inline Vector ints_vector(const std::vector<std::int64_t>& v, const CtxPtr& ctx) {
  std::vector<Scalar> c;
  for (auto x : v) c.push_back(Scalar::from_integer(x, ctx));
  return linalg::Vector(std::move(c));
}

inline Matrix random_unimodular(std::size_t n, const CtxPtr& ctx, Rng& rng, int steps = 8) {
  Matrix u = Matrix::identity(n, ctx);
  for (int s = 0; s < steps; ++s) {
    auto i = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(n) - 1));
    auto j = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(n) - 1));
    if (i == j) continue;
    Matrix shear = Matrix::identity(n, ctx);
    shear.at(i, j) = Scalar::from_integer(rng.uniform(-2 * ctx->p(), 2 * ctx->p()), ctx);
    u = u * shear;
  }
  return u;
}

inline std::int64_t least_nonresidue(std::int64_t p) {
  for (std::int64_t u = 2; u < p; ++u)
    if (padic::legendre_symbol(u, p) == -1) return u;
  return 0;
}

/// Diagonal blocks (as Q-doubled entries) for anisotropic kernels whose
/// standard lattice is the unique maximal lattice.
inline std::vector<std::vector<std::int64_t>> anisotropic_kernel_menu(std::int64_t p) {
  std::int64_t u = least_nonresidue(p);
  return {
      {},
      {2},
      {2 * u},
      {2 * p},
      {2, -2 * u},
      {2, -2 * p},
      {2 * p, -2 * u * p},
      {2, -2 * u, 2 * p, -2 * u * p},
  };
}

/// Isometry of the space that also stabilizes the standard lattice R^dim:
/// integral reflections (quadratic) or integral transvections (alternating).
inline Matrix random_lattice_isometry(const SpacePtr& sp, Rng& rng, int steps = 8) {
  const CtxPtr& ctx = sp->ctx();
  const std::size_t dim = sp->dim();
  Matrix g = Matrix::identity(dim, ctx);
  for (int s = 0; s < steps; ++s) {
    std::vector<Scalar> c;
    bool nz = false;
    for (std::size_t i = 0; i < dim; ++i) {
      std::int64_t v = rng.uniform(-2, 2);
      if (v != 0) nz = true;
      c.push_back(Scalar::from_integer(v, ctx));
    }
    if (!nz) continue;
    Vector w{std::move(c)};
    Matrix gen = Matrix::identity(dim, ctx);
    if (sp->kind() == FormKind::Quadratic) {
      Scalar qw = sp->eval_q(w);
      if (qw.is_zeroish() || qw.valuation() != 0) continue;
      for (std::size_t i = 0; i < dim; ++i) {
        Vector x = Vector::unit(dim, i, ctx);
        gen.set_row(i, x - w.scaled(sp->eval_b(x, w) / qw));
      }
    } else {
      Scalar cc = Scalar::from_integer(rng.uniform(1, ctx->p() - 1), ctx);
      for (std::size_t i = 0; i < dim; ++i) {
        Vector x = Vector::unit(dim, i, ctx);
        gen.set_row(i, x + w.scaled(sp->eval_b(x, w) * cc));
      }
    }
    g = g * gen;
  }
  return g;
}

struct ApteFixture {
  SpacePtr space;
  Lattice built;  // block-diagonal reference lattice (identity basis)
  std::size_t uni;
  std::size_t pmod;
  std::size_t an_dim;
};

/// Builds a space whose standard lattice is APTE with the requested block
/// structure, then re-bases it by a random unimodular mix.
inline ApteFixture apte_fixture(std::int64_t p, FormKind kind, std::size_t uni, std::size_t pmod,
                                std::size_t an_choice, Rng& rng, const CtxPtr& ctx) {
  std::vector<std::int64_t> an =
      kind == FormKind::Quadratic ? anisotropic_kernel_menu(p)[an_choice]
                                  : std::vector<std::int64_t>{};
  const std::size_t dim = 2 * (uni + pmod) + an.size();
  Matrix gram(dim, dim, ctx);
  std::size_t at = 0;
  auto plane = [&](std::int64_t s) {
    gram.at(at, at + 1) = Scalar::from_integer(s, ctx);
    gram.at(at + 1, at) =
        Scalar::from_integer(kind == FormKind::Quadratic ? s : -s, ctx);
    at += 2;
  };
  for (std::size_t i = 0; i < uni; ++i) plane(1);
  for (std::size_t i = 0; i < pmod; ++i) plane(p);
  for (auto d : an) {
    gram.at(at, at) = Scalar::from_integer(d, ctx);
    ++at;
  }
  auto sp = std::make_shared<const BilinearSpace>(kind, gram);
  Matrix basis = random_unimodular(dim, ctx, rng) * Matrix::identity(dim, ctx);
  return ApteFixture{sp, Lattice(sp, basis, 0), uni, pmod, an.size()};
}

}  // namespace hyperbasis::testing
