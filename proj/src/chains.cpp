#include "hyperbasis/chains.hpp"

#include <algorithm>

namespace hyperbasis::chains {

using lattice::apte_decompose;
using lattice::includes;
using lattice::lattice_equal;
using lattice::maximal_lattice_on_span;
using lattice::pr_maximal;
using lattice::scaled_lattice;
using linalg::entries_equal;
using linalg::matrices_equal;

LatticeChain::LatticeChain(std::vector<Lattice> members) : members_(std::move(members)) {
  if (members_.empty()) throw InvalidChain("a chain needs at least one member");
  for (const auto& m : members_) {
    if (!lattice::spaces_compatible(*m.space(), *members_.front().space()))
      throw InvalidChain("members live on different spaces");
    if (m.scale_exponent() != 0) throw InvalidChain("chain members must carry scale 0");
    if (m.rank() != members_.front().rank())
      throw InvalidChain("members span different subspaces");
  }
}

ValidationReport validate_chain(const LatticeChain& c) {
  ValidationReport rep;
  auto add = [&](const std::string& name, bool pass, const std::string& detail = "") {
    rep.checks.push_back({name, pass, pass ? "" : detail});
  };

  const Lattice& head = c.max_member();
  std::size_t witt = 0;
  {
    space::WittDecomposition w =
        space::witt_decompose(head.full_rank() ? *head.space()
                                               : head.space()->restricted(head.basis()));
    witt = w.witt_index();
  }
  add("length-is-witt-index-plus-one", c.length() == witt + 1,
      "length " + std::to_string(c.length()) + " vs Witt index " + std::to_string(witt));

  add("head-is-maximal", pr_maximal(head, 0));

  bool strict = true, index_p = true;
  for (std::size_t j = 1; j < c.length(); ++j) {
    const Lattice& prev = c.member(j - 1);
    const Lattice& curr = c.member(j);
    if (!includes(prev, curr) || lattice_equal(prev, curr)) {
      strict = false;
      break;
    }
    Matrix coeffs(curr.rank(), curr.rank(), curr.ctx());
    bool expressed = true;
    for (std::size_t i = 0; i < curr.rank(); ++i) {
      auto row = linalg::express_in_rows(prev.echelon(), curr.basis().row(i));
      if (!row) {
        expressed = false;
        break;
      }
      coeffs.set_row(i, *row);
    }
    if (!expressed) {
      strict = false;
      break;
    }
    std::vector<long> divs = linalg::elementary_divisors(coeffs);
    for (std::size_t i = 0; i + 1 < divs.size(); ++i)
      if (divs[i] != 0) index_p = false;
    if (divs.empty() || divs.back() != 1) index_p = false;
  }
  add("strict-descent", strict);
  add("steps-have-index-p", index_p);

  bool members_apte = true, pmod_counts = true;
  for (std::size_t j = 0; j < c.length() && members_apte; ++j) {
    try {
      auto d = apte_decompose(c.member(j));
      if (d.p_modular_pairs.size() != j || d.pair_count() != witt) pmod_counts = false;
    } catch (const NotAPTE&) {
      members_apte = false;
    }
  }
  add("members-are-apte", members_apte);
  add("member-j-has-j-p-modular-planes", members_apte && pmod_counts);

  add("p-max-inside-min", includes(c.min_member(), scaled_lattice(head, 1)));
  return rep;
}

LatticeChain standard_chain(const space::WittDecomposition& w, const SpacePtr& s) {
  const std::size_t n = w.witt_index();
  std::vector<Vector> kernel_rows;
  if (!w.kernel_basis.empty()) {
    Lattice kmax = maximal_lattice_on_span(s, Matrix::from_rows(w.kernel_basis), 0, 0);
    kernel_rows = kmax.basis().row_list();
  }
  std::vector<Lattice> members;
  for (std::size_t j = 0; j <= n; ++j) {
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back(w.pairs[i].first);
      rows.push_back(i < j ? w.pairs[i].second.shifted(1) : w.pairs[i].second);
    }
    for (const auto& r : kernel_rows) rows.push_back(r);
    members.push_back(Lattice::from_rows(s, rows, 0));
  }
  return LatticeChain(std::move(members));
}

bool is_isometry(const BilinearSpace& s, const Matrix& g) {
  if (g.rows() != s.dim() || g.cols() != s.dim()) return false;
  try {
    linalg::det(g);
  } catch (const SingularMatrix&) {
    return false;
  }
  return matrices_equal(g * s.gram() * g.transpose(), s.gram());
}

LatticeChain transform_chain(const LatticeChain& c, const Matrix& g) {
  if (!is_isometry(*c.space(), g)) throw NotAnIsometry();
  std::vector<Lattice> members;
  members.reserve(c.length());
  for (const auto& m : c.members())
    members.emplace_back(m.space(), m.basis() * g, m.scale_exponent());
  return LatticeChain(std::move(members));
}

// --- random isometries ------------------------------------------------------------

namespace {

Matrix outer_update(const Matrix& id, const Vector& coeff_row, const Vector& add,
                    const BilinearSpace& s, const Scalar& factor) {
  // x -> x + factor * b(x, coeff_row) * add, as a matrix acting on rows.
  Matrix g = id;
  for (std::size_t i = 0; i < s.dim(); ++i) {
    Vector ei = Vector::unit(s.dim(), i, s.ctx());
    Scalar c = s.eval_b(ei, coeff_row) * factor;
    for (std::size_t j = 0; j < s.dim(); ++j) g.at(i, j) = g.at(i, j) + c * add[j];
  }
  return g;
}

Vector small_vector(const BilinearSpace& s, SplitMix64& rng) {
  std::vector<Scalar> c;
  bool nonzero = false;
  for (std::size_t i = 0; i < s.dim(); ++i) {
    std::int64_t v = rng.range(-2, 2);
    if (v != 0) nonzero = true;
    c.push_back(Scalar::from_integer(v, s.ctx()));
  }
  if (!nonzero) c[0] = Scalar::one(s.ctx());
  return Vector(std::move(c));
}

// Change-of-basis conjugation: the map sending basis row i to image row i.
Matrix conjugated_map(const Matrix& basis, const Matrix& images) {
  return linalg::inverse(basis) * images;
}

// Entries that vanished within the certified window are zero by
// construction here; resetting them stops bound decay across compositions.
Matrix sanitize_zeros(Matrix m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const Scalar& x = m.at(i, j);
      if (x.is_near_zero() && x.val_lower_bound() >= linalg::zero_floor(m.ctx()))
        m.at(i, j) = Scalar::zero(m.ctx());
    }
  return m;
}

}  // namespace

Matrix random_isometry(const SpacePtr& s, std::uint64_t seed, int steps) {
  const CtxPtr& ctx = s->ctx();
  const std::size_t dim = s->dim();
  SplitMix64 rng(seed);
  Matrix g = Matrix::identity(dim, ctx);
  if (dim == 0) return g;
  space::WittDecomposition w = space::witt_decompose(*s);
  const std::size_t n = w.witt_index();

  // Full basis (pairs then kernel) used by pair-level generators.
  std::vector<Vector> basis_rows;
  for (const auto& [e, f] : w.pairs) {
    basis_rows.push_back(e);
    basis_rows.push_back(f);
  }
  for (const auto& k : w.kernel_basis) basis_rows.push_back(k);
  Matrix wbasis = Matrix::from_rows(basis_rows);

  int scalings_left = 2;  // keeps valuations desk-scale across compositions
  for (int step = 0; step < steps; ++step) {
    int kindpick = static_cast<int>(rng.range(0, 3));
    if (kindpick == 1 && scalings_left == 0) kindpick = 0;
    if (kindpick == 1) --scalings_left;
    Matrix gen = Matrix::identity(dim, ctx);
    if (kindpick == 0) {
      if (s->kind() == FormKind::Alternating) {
        // Symplectic transvection x -> x + c b(x,v) v.
        Vector v = small_vector(*s, rng);
        Scalar c = Scalar::from_integer(rng.range(1, ctx->p()), ctx);
        gen = outer_update(gen, v, v, *s, c);
      } else {
        // Reflection in a vector with invertible norm.
        for (int attempt = 0; attempt < 20; ++attempt) {
          Vector v = small_vector(*s, rng);
          Scalar qv = s->eval_q(v);
          if (qv.is_zeroish() || qv.valuation() > 1) continue;
          gen = outer_update(Matrix::identity(dim, ctx), v, v, *s, -qv.inverse());
          break;
        }
      }
    } else if (kindpick == 1 && n > 0) {
      // Scale one hyperbolic pair: e -> p e, f -> f / p.
      std::size_t i = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(n) - 1));
      std::vector<Vector> images = basis_rows;
      images[2 * i] = basis_rows[2 * i].shifted(1);
      images[2 * i + 1] = basis_rows[2 * i + 1].shifted(-1);
      gen = conjugated_map(wbasis, Matrix::from_rows(images));
    } else if (kindpick == 2 && n > 0) {
      // Swap e and f within a pair (with a sign in the alternating case).
      std::size_t i = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(n) - 1));
      std::vector<Vector> images = basis_rows;
      images[2 * i] = basis_rows[2 * i + 1];
      images[2 * i + 1] = s->kind() == FormKind::Alternating
                              ? basis_rows[2 * i].scaled(-Scalar::one(ctx))
                              : basis_rows[2 * i];
      gen = conjugated_map(wbasis, Matrix::from_rows(images));
    } else if (n > 0 && s->kind() == FormKind::Quadratic) {
      // Eichler transformation for an isotropic e and z orthogonal to e:
      // x -> x + b(x,e) z - b(x,z) e - Q(z) b(x,e) e.
      std::size_t i = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(n) - 1));
      const Vector& e = w.pairs[i].first;
      std::vector<Vector> zpool;
      for (std::size_t j2 = 0; j2 < n; ++j2) {
        if (j2 == i) continue;
        zpool.push_back(w.pairs[j2].first);
        zpool.push_back(w.pairs[j2].second);
      }
      for (const auto& k : w.kernel_basis) zpool.push_back(k);
      zpool.push_back(e);
      Vector z = zpool[static_cast<std::size_t>(rng.range(
          0, static_cast<std::int64_t>(zpool.size()) - 1))];
      Scalar sc = Scalar::from_integer(rng.range(1, ctx->p()), ctx);
      z = z.scaled(sc);
      Scalar qz = s->eval_q(z);
      for (std::size_t r = 0; r < dim; ++r) {
        Vector x = Vector::unit(dim, r, ctx);
        Scalar bxe = s->eval_b(x, e);
        Scalar bxz = s->eval_b(x, z);
        Vector img = x + z.scaled(bxe) - e.scaled(bxz) - e.scaled(qz * bxe);
        gen.set_row(r, img);
      }
    } else if (s->kind() == FormKind::Alternating) {
      // Second transvection flavour with a p-scaled coefficient.
      Vector v = small_vector(*s, rng);
      Scalar c = Scalar::from_integer(rng.range(1, ctx->p()), ctx).shift(rng.range(0, 1));
      gen = outer_update(gen, v, v, *s, c);
    }
    gen = sanitize_zeros(std::move(gen));
    if (!is_isometry(*s, gen)) continue;  // skip degenerate picks
    g = sanitize_zeros(g * gen);
  }
  if (!is_isometry(*s, g)) throw NotAnIsometry();
  return g;
}

}  // namespace hyperbasis::chains
