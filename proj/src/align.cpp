#include "hyperbasis/align.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace hyperbasis::align {

using lattice::APTEDecomposition;
using lattice::apte_decompose;
using lattice::containment_exponent;
using lattice::dual;
using lattice::includes;
using lattice::lattice_equal;
using lattice::maximal_lattice_on_span;
using lattice::member;
using lattice::modified_dual;
using lattice::pr_maximal;
using lattice::scaled_lattice;
using lattice::split_hyperbolic;
using linalg::entry_is_zero;
using linalg::zero_floor;
using space::BilinearSpace;
using space::FormKind;

namespace {

long pairing_valuation(const Lattice& l, const Vector& x) {
  long best = Scalar::kInfVal;
  for (std::size_t i = 0; i < l.rank(); ++i) {
    Scalar b = l.b(x, l.basis().row(i));
    if (b.is_zeroish()) continue;
    best = std::min(best, b.valuation());
  }
  return best;
}

Vector sanitize_vector(Vector v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].is_near_zero() && v[i].val_lower_bound() >= zero_floor(v.ctx()))
      v[i] = Scalar::zero(v.ctx());
  }
  return v;
}

bool certified_zero(const Scalar& s) { return entry_is_zero(s); }

}  // namespace

// --- max_isotropic ------------------------------------------------------------

Lattice max_isotropic(const Lattice& l) {
  APTEDecomposition d = apte_decompose(l);
  if (d.pair_count() == 0) throw NoIsotropicVectors();
  std::vector<Vector> rows;
  for (const auto& [e, f] : d.unimodular_pairs) rows.push_back(e);
  for (const auto& [e, f] : d.p_modular_pairs) rows.push_back(e);
  return Lattice::from_rows(l.space(), rows, l.scale_exponent());
}

// --- adapt_to_isotropic -------------------------------------------------------

namespace {

struct AdaptResult {
  std::vector<Vector> e;
  std::vector<Vector> f;
  std::vector<long> pairing;
  Matrix kernel;
};

AdaptResult adapt_rec(const Lattice& l, const Lattice& x, int depth) {
  const CtxPtr& ctx = l.ctx();
  if (depth > 64) throw PrecisionExhausted("adapt recursion too deep");
  const std::size_t n = x.rank();
  if (n == 0) {
    if (l.rank() > 0 && !pr_maximal(l, 0))
      throw NotMaximalIsotropic("anisotropic remainder is not the maximal lattice");
    return AdaptResult{{}, {}, {}, l.basis()};
  }

  // Pairing valuations between X generators and L generators.
  long minval = Scalar::kInfVal;
  std::size_t best_i = 0, best_j = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < l.rank(); ++j) {
      Scalar b = l.b(x.basis().row(i), l.basis().row(j));
      if (b.is_zeroish()) continue;
      if (b.valuation() < minval) {
        minval = b.valuation();
        best_i = i;
        best_j = j;
      }
    }
  if (minval == Scalar::kInfVal)
    throw NotMaximalIsotropic("isotropic submodule pairs to zero with the lattice");

  if (minval <= -1)
    throw NotMaximalIsotropic("isotropic submodule is not integral against the lattice");

  if (minval == 0) {
    // Split a unimodular plane on (x_i, partner).
    Vector xv = x.basis().row(best_i);
    Vector y = l.basis().row(best_j).scaled(l.b(xv, l.basis().row(best_j)).inverse());
    Vector f = sanitize_vector(y - xv.scaled(l.q(y)));
    auto [plane, comp] = split_hyperbolic(l, xv, f);
    std::vector<Vector> xrows;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == best_i) continue;
      Vector z = x.basis().row(k);
      xrows.push_back(sanitize_vector(z - xv.scaled(l.b(z, f))));
    }
    Lattice xnext = Lattice::from_rows(l.space(), xrows, l.scale_exponent());
    if (xnext.rank() != n - 1)
      throw NotMaximalIsotropic("isotropic submodule dropped rank during splitting");
    AdaptResult sub = adapt_rec(comp, xnext, depth + 1);
    AdaptResult out;
    out.e.push_back(std::move(xv));
    out.f.push_back(std::move(f));
    out.pairing.push_back(0);
    for (std::size_t k = 0; k < sub.e.size(); ++k) {
      out.e.push_back(sub.e[k]);
      out.f.push_back(sub.f[k]);
      out.pairing.push_back(sub.pairing[k]);
    }
    out.kernel = std::move(sub.kernel);
    return out;
  }

  if (minval != 1)
    throw NotMaximalIsotropic("pairing ideal deeper than pR: lattice is not APTE-compatible");

  // b(X, L) = pR: pass to the modified dual, where p^-1 X is again maximal
  // totally isotropic and pairs into units.
  Lattice lstar = modified_dual(l);
  Lattice xstar(l.space(), x.basis().shifted(-1), lstar.scale_exponent());
  AdaptResult sub = adapt_rec(lstar, xstar, depth + 1);
  AdaptResult out;
  for (std::size_t k = 0; k < sub.e.size(); ++k) {
    if (sub.pairing[k] != 0)
      throw NotMaximalIsotropic("p-pairing reappeared inside the modified dual");
    out.e.push_back(sub.e[k].shifted(1));
    out.f.push_back(sub.f[k].shifted(1));
    out.pairing.push_back(1);
  }
  if (sub.kernel.rows() > 0) {
    Lattice kern = maximal_lattice_on_span(l.space(), sub.kernel, l.scale_exponent(), 0);
    out.kernel = kern.basis();
  } else {
    out.kernel = Matrix::empty(l.dim(), ctx);
  }
  return out;
}

void verify_adapted(const Lattice& l, const Lattice& x, const AdaptedBasis& ab) {
  const CtxPtr& ctx = l.ctx();
  const std::size_t n = ab.e.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!certified_zero(l.q(ab.e[i])) || !certified_zero(l.q(ab.f[i])))
      throw SearchExhausted("adapted basis vector is not isotropic");
    for (std::size_t j = 0; j < n; ++j) {
      if (!certified_zero(l.b(ab.e[i], ab.e[j])) || !certified_zero(l.b(ab.f[i], ab.f[j])))
        throw SearchExhausted("adapted basis pairs are not mutually isotropic");
      Scalar want = i == j ? Scalar::p_power(ab.pairing[i], ctx) : Scalar::zero(ctx);
      if (!certified_zero(l.b(ab.e[i], ab.f[j]) - want))
        throw SearchExhausted("adapted basis pairing matrix is wrong");
    }
    for (std::size_t k = 0; k < ab.kernel_basis.rows(); ++k) {
      if (!certified_zero(l.b(ab.e[i], ab.kernel_basis.row(k))) ||
          !certified_zero(l.b(ab.f[i], ab.kernel_basis.row(k))))
        throw SearchExhausted("adapted kernel is not orthogonal to the pairs");
    }
  }
  // Eq. (1): the pieces rebuild L, and the e-vectors span X.
  std::vector<Vector> rows;
  for (const auto& v : ab.e) rows.push_back(v);
  for (const auto& v : ab.f) rows.push_back(v);
  for (const auto& r : ab.kernel_basis.row_list()) rows.push_back(r);
  Lattice recon = Lattice::from_rows(l.space(), rows, l.scale_exponent());
  if (!lattice_equal(recon, l)) throw SearchExhausted("adapted basis does not rebuild the lattice");
  Lattice espan = Lattice::from_rows(l.space(), ab.e, l.scale_exponent());
  if (!lattice_equal(espan, x)) throw SearchExhausted("adapted e-vectors do not span X");
}

}  // namespace

AdaptedBasis adapt_to_isotropic(const Lattice& l, const Lattice& x) {
  // Preconditions: X inside L, totally isotropic, primitive, maximal rank.
  if (!includes(l, x)) throw NotMaximalIsotropic("X is not contained in L");
  for (std::size_t i = 0; i < x.rank(); ++i) {
    if (!certified_zero(l.q(x.basis().row(i))))
      throw NotMaximalIsotropic("X contains a non-isotropic generator");
    for (std::size_t j = 0; j < x.rank(); ++j)
      if (!certified_zero(l.b(x.basis().row(i), x.basis().row(j))))
        throw NotMaximalIsotropic("X is not totally isotropic");
  }
  {
    // Primitivity: the coefficients of X in L form a saturated module, i.e.
    // every elementary divisor of the coefficient matrix is a unit.
    Matrix coeffs(x.rank(), l.rank(), l.ctx());
    for (std::size_t i = 0; i < x.rank(); ++i) {
      auto c = linalg::express_in_rows(l.echelon(), x.basis().row(i));
      if (!c) throw NotMaximalIsotropic("X escapes the span of L");
      coeffs.set_row(i, *c);
    }
    for (long e : linalg::elementary_divisors(coeffs))
      if (e != 0) throw NotMaximalIsotropic("X is not primitive in L");
  }
  {
    BilinearSpace sub = l.full_rank() ? *l.space() : l.space()->restricted(l.basis());
    if (x.rank() != space::witt_index(sub))
      throw NotMaximalIsotropic("rank of X differs from the Witt index");
  }
  AdaptResult res = adapt_rec(l, x, 0);
  AdaptedBasis out{std::move(res.e), std::move(res.f), std::move(res.pairing),
                   std::move(res.kernel)};
  verify_adapted(l, x, out);
  return out;
}

// --- isometry_between ------------------------------------------------------------

namespace {

// Orthogonal lattice basis of an anisotropic maximal lattice (odd p): pick a
// norm of minimal valuation among rows and row sums, split, repeat.
std::vector<Vector> lattice_diagonalize(const Lattice& k) {
  std::vector<Vector> rows = k.basis().row_list();
  std::vector<Vector> out;
  while (!rows.empty()) {
    std::optional<Vector> best;
    long best_val = Scalar::kInfVal;
    auto consider = [&](const Vector& v) {
      Scalar nv = k.b(v, v);
      if (nv.is_zeroish()) return;
      if (nv.valuation() < best_val) {
        best_val = nv.valuation();
        best = v;
      }
    };
    for (const auto& v : rows) consider(v);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = i + 1; j < rows.size(); ++j) consider(rows[i] + rows[j]);
    if (!best) throw PrecisionExhausted("anisotropic block has no certified norm");
    Vector v = *best;
    Scalar nv = k.b(v, v);
    std::vector<Vector> next;
    for (const auto& w : rows) {
      Scalar c = k.b(w, v) / nv;
      if (!c.val_ge(0)) throw SearchExhausted("anisotropic block failed to split integrally");
      next.push_back(sanitize_vector(w - v.scaled(c)));
    }
    linalg::Echelon ech = linalg::hermite_echelon(Matrix::from_rows(next));
    if (ech.basis.rows() != rows.size() - 1)
      throw SearchExhausted("anisotropic block diagonalization rank drop");
    rows = ech.basis.row_list();
    out.push_back(std::move(v));
  }
  return out;
}

struct ScalarClass {
  long val_parity;
  bool unit_square;
};

ScalarClass square_class(const Scalar& s) {
  return ScalarClass{((s.valuation() % 2) + 2) % 2,
                     padic::legendre_symbol(s.unit_part(), s.ctx()->p()) == 1};
}

bool operator==(const ScalarClass& a, const ScalarClass& b) {
  return a.val_parity == b.val_parity && a.unit_square == b.unit_square;
}

// Canonical diagonal of Q-values for the anisotropic class of the given
// scaled q-values: the lexicographically first tuple over {1, u0, p, p*u0}
// with the same dimension, discriminant class and Hasse invariant.
std::vector<Scalar> canonical_anisotropic_diag(const std::vector<Scalar>& q, const CtxPtr& ctx) {
  const std::size_t m = q.size();
  Scalar disc = Scalar::one(ctx);
  for (const auto& v : q) disc = disc * v;
  int hasse = 1;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) hasse *= padic::hilbert_symbol(q[i], q[j]);
  ScalarClass dc = square_class(disc);

  std::int64_t u0 = 2;
  while (padic::legendre_symbol(u0, ctx->p()) != -1) ++u0;
  std::vector<Scalar> menu = {Scalar::one(ctx), Scalar::from_integer(u0, ctx),
                              Scalar::p_power(1, ctx),
                              Scalar::from_integer(u0, ctx).shift(1)};
  std::vector<std::size_t> pick(m, 0);
  while (true) {
    bool nondecreasing = true;
    for (std::size_t i = 0; i + 1 < m; ++i)
      if (pick[i] > pick[i + 1]) nondecreasing = false;
    if (nondecreasing) {
      std::vector<Scalar> cand;
      for (auto idx : pick) cand.push_back(menu[idx]);
      Scalar cd = Scalar::one(ctx);
      for (const auto& v : cand) cd = cd * v;
      int ch = 1;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) ch *= padic::hilbert_symbol(cand[i], cand[j]);
      if (square_class(cd) == dc && ch == hasse) return cand;
    }
    std::size_t pos = 0;
    while (pos < m && ++pick[pos] == menu.size()) pick[pos++] = 0;
    if (pos == m) break;
  }
  throw SearchExhausted("no canonical diagonal matches the anisotropic invariants");
}

// Rewrites the maximal anisotropic lattice K on a basis whose scaled Gram is
// exactly diag(2 * target_i); both kernels of an isometry problem then agree
// entry for entry.
Matrix canonical_kernel_basis(const Lattice& k) {
  const CtxPtr& ctx = k.ctx();
  if (k.rank() == 0) return Matrix::empty(k.dim(), ctx);
  std::vector<Vector> diag = lattice_diagonalize(k);
  std::vector<Scalar> qvals;
  for (const auto& v : diag) qvals.push_back(k.q(v));
  std::vector<Scalar> target = canonical_anisotropic_diag(qvals, ctx);

  Lattice cur = k;
  std::vector<Vector> out;
  for (const auto& t : target) {
    Vector w = Vector::zeros(k.dim(), ctx);
    if (cur.rank() == 1) {
      Vector v = cur.basis().row(0);
      Scalar ratio = t / cur.q(v);
      Scalar root = padic::sqrt(ratio);  // classification guarantees a square
      w = v.scaled(root);
    } else {
      // Isotropic vector of (restricted form) perp <-t> yields Q(w) = t.
      Matrix wrows = cur.basis();
      const std::size_t mm = wrows.rows();
      Matrix aug(mm + 1, mm + 1, ctx);
      Matrix sub = (wrows * k.space()->gram() * wrows.transpose()).shifted(k.scale_exponent());
      for (std::size_t i = 0; i < mm; ++i)
        for (std::size_t j = 0; j < mm; ++j) aug.at(i, j) = sub.at(i, j);
      aug.at(mm, mm) = -(t + t);
      BilinearSpace augspace(FormKind::Quadratic, aug);
      space::IsotropicSearch iso = space::find_isotropic(augspace);
      if (!iso.found())
        throw SearchExhausted("kernel canonical value is not represented");
      const Vector& c = *iso.vec;
      Scalar z = c[mm];
      if (z.is_zeroish()) throw SearchExhausted("kernel representation degenerated");
      for (std::size_t i = 0; i < mm; ++i)
        w = w + wrows.row(i).scaled(c[i] / z);
      w = sanitize_vector(w);
    }
    if (!member(w, k)) throw SearchExhausted("canonical kernel vector escaped the lattice");
    out.push_back(w);
    // Split w off inside the lattice.
    if (cur.rank() > 1) {
      Scalar nw = cur.b(w, w);
      std::vector<Vector> next;
      for (std::size_t i = 0; i < cur.rank(); ++i) {
        Vector zz = cur.basis().row(i);
        Scalar c = cur.b(zz, w) / nw;
        if (!c.val_ge(0)) throw SearchExhausted("canonical kernel split is not integral");
        next.push_back(sanitize_vector(zz - w.scaled(c)));
      }
      linalg::Echelon ech = linalg::hermite_echelon(Matrix::from_rows(next));
      if (ech.basis.rows() != cur.rank() - 1)
        throw SearchExhausted("canonical kernel split rank drop");
      cur = Lattice(k.space(), ech.basis, k.scale_exponent());
    }
  }
  return Matrix::from_rows(out);
}

}  // namespace

Matrix isometry_between(const Lattice& l, const Lattice& x1, const Lattice& x2) {
  const CtxPtr& ctx = l.ctx();
  AdaptedBasis a1 = adapt_to_isotropic(l, x1);
  AdaptedBasis a2 = adapt_to_isotropic(l, x2);
  auto order = [](const AdaptedBasis& a) {
    std::vector<std::size_t> idx(a.e.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t i, std::size_t j) { return a.pairing[i] < a.pairing[j]; });
    return idx;
  };
  std::vector<std::size_t> o1 = order(a1), o2 = order(a2);
  for (std::size_t i = 0; i < o1.size(); ++i)
    if (a1.pairing[o1[i]] != a2.pairing[o2[i]])
      throw SearchExhausted("pairing multisets of the two adapted bases differ");

  Matrix k1 = a1.kernel_basis.rows() > 0
                  ? canonical_kernel_basis(Lattice(l.space(), a1.kernel_basis, l.scale_exponent()))
                  : Matrix::empty(l.dim(), ctx);
  Matrix k2 = a2.kernel_basis.rows() > 0
                  ? canonical_kernel_basis(Lattice(l.space(), a2.kernel_basis, l.scale_exponent()))
                  : Matrix::empty(l.dim(), ctx);

  std::vector<Vector> b1, b2;
  for (std::size_t i = 0; i < o1.size(); ++i) {
    b1.push_back(a1.e[o1[i]]);
    b1.push_back(a1.f[o1[i]]);
    b2.push_back(a2.e[o2[i]]);
    b2.push_back(a2.f[o2[i]]);
  }
  for (const auto& r : k1.row_list()) b1.push_back(r);
  for (const auto& r : k2.row_list()) b2.push_back(r);
  Matrix m1 = Matrix::from_rows(b1);
  Matrix m2 = Matrix::from_rows(b2);
  Matrix sigma = linalg::inverse(m1) * m2;
  if (!chains::is_isometry(*l.space(), sigma)) throw SearchExhausted("basis map is not an isometry");
  if (!lattice_equal(Lattice(l.space(), l.basis() * sigma, l.scale_exponent()), l))
    throw SearchExhausted("isometry does not stabilize the lattice");
  if (!lattice_equal(Lattice(l.space(), x1.basis() * sigma, x1.scale_exponent()), x2))
    throw SearchExhausted("isometry does not carry X1 to X2");
  return sigma;
}

// --- candidate pool ---------------------------------------------------------------

std::vector<Vector> isotropic_candidates(const Lattice& l, bool deep) {
  const CtxPtr& ctx = l.ctx();
  APTEDecomposition d = apte_decompose(l);
  std::vector<Vector> gens;
  for (const auto& [e, f] : d.unimodular_pairs) {
    gens.push_back(e);
    gens.push_back(f);
  }
  for (const auto& [e, f] : d.p_modular_pairs) {
    gens.push_back(e);
    gens.push_back(f);
  }
  if (d.pair_count() > 0) {
    const Vector& e1 = d.unimodular_pairs.empty() ? d.p_modular_pairs[0].first
                                                  : d.unimodular_pairs[0].first;
    const Vector& f1 = d.unimodular_pairs.empty() ? d.p_modular_pairs[0].second
                                                  : d.unimodular_pairs[0].second;
    Scalar bef = l.b(e1, f1);
    for (const auto& krow : d.an_basis.row_list()) {
      // k + e1 - (Q(k)/b(e1,f1)) f1 is exactly isotropic.
      Vector g = krow + e1 - f1.scaled(l.q(krow) / bef);
      gens.push_back(sanitize_vector(g));
    }
  }

  std::vector<Vector> pool;
  std::set<std::string> seen;
  auto push = [&](const Vector& v) {
    // Primitive in L, exactly isotropic; dedup on leading digits.
    if (!member(v, l) || member(v, scaled_lattice(l, 1))) return;
    Scalar qv = l.q(v);
    if (!qv.is_exact_zero() && !(qv.is_near_zero() && qv.val_lower_bound() >= zero_floor(ctx)))
      return;
    std::ostringstream key;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Scalar& cc = v[i];
      if (cc.is_zeroish()) {
        key << "z;";
      } else {
        key << cc.valuation() << ":" << cc.unit_mod(std::min(3, cc.known_digits())) << ";";
      }
    }
    if (seen.insert(key.str()).second) pool.push_back(v);
  };

  for (const auto& g : gens) push(g);
  const std::int64_t p = ctx->p();
  std::vector<Scalar> coeffs;
  for (std::int64_t c = 1; c < p; ++c) coeffs.push_back(Scalar::from_integer(c, ctx));
  coeffs.push_back(Scalar::p_power(1, ctx));
  if (deep) {
    for (std::int64_t c = 1; c < p; ++c)
      coeffs.push_back(Scalar::from_integer(c * p, ctx));
    for (std::int64_t c = p + 1; c < 2 * p; ++c)
      coeffs.push_back(Scalar::from_integer(c, ctx));
  }
  for (std::size_t a = 0; a < gens.size(); ++a)
    for (std::size_t b = 0; b < gens.size(); ++b) {
      if (a == b) continue;
      for (const auto& c : coeffs) {
        Vector x0 = gens[a] + gens[b].scaled(c);
        Scalar q0 = l.q(x0);
        if (q0.is_zeroish()) {
          push(sanitize_vector(x0));
          continue;
        }
        if (q0.valuation() < 1) continue;
        // Hensel-correct along a generator with unit pairing.
        for (const auto& w : gens) {
          Scalar bw = l.b(x0, w);
          if (bw.is_zeroish() || bw.valuation() != 0) continue;
          Scalar tau = space::hensel_root_quadratic(q0, bw, l.q(w), Scalar::zero(ctx));
          push(sanitize_vector(x0 + w.scaled(tau)));
          break;
        }
      }
    }
  return pool;
}

// --- common_basis ------------------------------------------------------------------

namespace {

struct AlignRec {
  std::vector<Vector> e;
  std::vector<Vector> f;
  // exps[nu][member j][pair i]
  std::array<std::vector<std::vector<long>>, 2> r;
  std::array<std::vector<std::vector<long>>, 2> s;
  Matrix kernel;
};

struct ChainPair {
  std::vector<Lattice> m1;
  std::vector<Lattice> m2;
};

long ladder_top(const std::vector<Lattice>& members, const Vector& xs, bool* ok) {
  // Largest j with b(xs, member_j) = R; requires value 0 at j=0 and >= 1 at n.
  *ok = true;
  if (pairing_valuation(members.front(), xs) != 0) {
    *ok = false;
    return 0;
  }
  if (pairing_valuation(members.back(), xs) < 1) {
    *ok = false;
    return 0;
  }
  long j = 0;
  for (std::size_t t = 1; t < members.size(); ++t) {
    if (pairing_valuation(members[t], xs) == 0) j = static_cast<long>(t);
  }
  return j;
}

long member_top(const std::vector<Lattice>& members, const Vector& x) {
  long k = -1;
  for (std::size_t t = 0; t < members.size(); ++t) {
    if (member(x, members[t]))
      k = static_cast<long>(t);
    else
      break;
  }
  return k;
}

Vector unit_partner(const Lattice& l, const Vector& xs, bool* ok) {
  for (std::size_t i = 0; i < l.rank(); ++i) {
    Scalar b = l.b(xs, l.basis().row(i));
    if (!b.is_zeroish() && b.valuation() == 0) {
      *ok = true;
      return l.basis().row(i).scaled(b.inverse());
    }
  }
  *ok = false;
  return Vector::zeros(l.dim(), l.ctx());
}

struct LevelPlan {
  Vector e;  // normalized pair: b(e,f) = 1
  Vector f;
  long pivot1;  // collapse position in chain 1
  long pivot2;  // collapse position in chain 2
  // per-member exponents for this pair, chain 1 and chain 2
  std::vector<std::pair<long, long>> exps1;
  std::vector<std::pair<long, long>> exps2;
  // plane vectors per member (what actually splits)
  std::vector<std::pair<Vector, Vector>> planes1;
  std::vector<std::pair<Vector, Vector>> planes2;
  std::string note;
};

AlignRec align_rec(std::vector<Lattice> m1, std::vector<Lattice> m2,
                   std::vector<std::string>& trace, int depth);

// Isotropic candidates drawn from every member of the chain (vectors found
// in member j realize depth k >= j), filtered to primitive vectors of the
// maximal member.
std::vector<Vector> chain_candidate_pool(const std::vector<Lattice>& members, bool deep) {
  const Lattice& head = members.front();
  std::vector<Vector> pool;
  std::set<std::string> seen;
  for (std::size_t j = members.size(); j-- > 0;) {
    for (const auto& v : isotropic_candidates(members[j], deep)) {
      if (!member(v, head) || member(v, scaled_lattice(head, 1))) continue;
      std::ostringstream key;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const Scalar& cc = v[i];
        if (cc.is_zeroish())
          key << "z;";
        else
          key << cc.valuation() << ":" << cc.unit_mod(std::min(3, cc.known_digits())) << ";";
      }
      if (seen.insert(key.str()).second) pool.push_back(v);
    }
  }
  return pool;
}

// Tries one candidate plan: splits every member, collapses at the pivots,
// recurses, and merges.  Returns nullopt when any step refuses, letting the
// caller backtrack to the next candidate.
std::optional<AlignRec> try_plan(const LevelPlan& plan, const std::vector<Lattice>& m1,
                                 const std::vector<Lattice>& m2,
                                 std::vector<std::string>& trace, int depth) {
  const std::size_t n = m1.size() - 1;
  std::vector<Lattice> c1, c2;
  try {
    for (std::size_t j = 0; j <= n; ++j) {
      auto [pl1, co1] = split_hyperbolic(m1[j], plan.planes1[j].first, plan.planes1[j].second);
      c1.push_back(co1);
      auto [pl2, co2] = split_hyperbolic(m2[j], plan.planes2[j].first, plan.planes2[j].second);
      c2.push_back(co2);
    }
  } catch (const DoesNotSplit&) {
    return std::nullopt;
  } catch (const PrecisionExhausted&) {
    throw;
  }
  // The two members around each pivot must collapse to the same complement.
  auto collapse = [&](std::vector<Lattice>& cs, long pivot) -> bool {
    if (pivot < 0 || pivot + 1 >= static_cast<long>(cs.size())) return false;
    if (!lattice_equal(cs[static_cast<std::size_t>(pivot)], cs[static_cast<std::size_t>(pivot) + 1]))
      return false;
    cs.erase(cs.begin() + pivot + 1);
    return true;
  };
  if (!collapse(c1, plan.pivot1) || !collapse(c2, plan.pivot2)) return std::nullopt;
  AlignRec sub;
  try {
    sub = align_rec(std::move(c1), std::move(c2), trace, depth + 1);
  } catch (const SearchExhausted&) {
    return std::nullopt;
  } catch (const InvalidChain&) {
    return std::nullopt;
  }
  AlignRec out;
  out.e.push_back(plan.e);
  out.f.push_back(plan.f);
  for (std::size_t k = 0; k < sub.e.size(); ++k) {
    out.e.push_back(sub.e[k]);
    out.f.push_back(sub.f[k]);
  }
  out.kernel = sub.kernel;
  for (int nu = 0; nu < 2; ++nu) {
    const auto& exps = nu == 0 ? plan.exps1 : plan.exps2;
    long pivot = nu == 0 ? plan.pivot1 : plan.pivot2;
    auto& rt = out.r[static_cast<std::size_t>(nu)];
    auto& st = out.s[static_cast<std::size_t>(nu)];
    rt.assign(n + 1, {});
    st.assign(n + 1, {});
    for (std::size_t j = 0; j <= n; ++j) {
      rt[j].push_back(exps[j].first);
      st[j].push_back(exps[j].second);
      std::size_t subj = j > static_cast<std::size_t>(pivot) ? j - 1 : j;
      const auto& subr = sub.r[static_cast<std::size_t>(nu)];
      const auto& subs = sub.s[static_cast<std::size_t>(nu)];
      for (std::size_t i = 0; i < sub.e.size(); ++i) {
        rt[j].push_back(subr[subj][i]);
        st[j].push_back(subs[subj][i]);
      }
    }
  }
  trace.push_back("depth " + std::to_string(depth) + ": " + plan.note);
  return out;
}

AlignRec align_rec(std::vector<Lattice> m1, std::vector<Lattice> m2,
                   std::vector<std::string>& trace, int depth) {
  if (m1.size() != m2.size()) throw InvalidChain("chains have different lengths");
  const std::size_t n = m1.size() - 1;
  const CtxPtr& ctx = m1.front().ctx();
  if (depth > 16) throw SearchExhausted("alignment recursion too deep");
  if (n == 0) {
    if (!lattice_equal(m1[0], m2[0]))
      throw InvalidChain("anisotropic base lattices of the two chains differ");
    AlignRec out;
    out.kernel = m1[0].basis();
    out.r[0].assign(1, {});
    out.r[1].assign(1, {});
    out.s[0].assign(1, {});
    out.s[1].assign(1, {});
    return out;
  }

  long r = std::max(containment_exponent(m1.front(), m2.back()),
                    containment_exponent(m2.front(), m1.back()));
  if (r < 1) throw InvalidChain("strict chains must need at least one power of p");

  bool swapped = false;
  if (includes(m2.back(), scaled_lattice(m1.front(), r - 1))) {
    std::swap(m1, m2);
    swapped = true;
  }

  auto finish = [&](AlignRec rec) {
    if (swapped) {
      std::swap(rec.r[0], rec.r[1]);
      std::swap(rec.s[0], rec.s[1]);
    }
    return rec;
  };

  auto attempt_case_a = [&](const std::vector<Lattice>& w1, const std::vector<Lattice>& w2,
                            const std::vector<Vector>& cands,
                            long rr) -> std::optional<AlignRec> {
    // Order candidates by their depth k in chain 1, descending.
    std::vector<std::pair<long, std::size_t>> ordered;
    for (std::size_t idx = 0; idx < cands.size(); ++idx) {
      if (member(cands[idx].shifted(rr - 1), w2.front())) continue;  // not primitive in max2
      long k = member_top(w1, cands[idx]);
      ordered.emplace_back(-k, idx);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [negk, idx] : ordered) {
      const Vector& x = cands[idx];
      Vector xs = x.shifted(rr);
      bool ok = false;
      long jstar = ladder_top(w2, xs, &ok);
      if (!ok) continue;
      Vector y = unit_partner(w2[static_cast<std::size_t>(jstar)], xs, &ok);
      if (!ok) continue;
      y = sanitize_vector(y - xs.scaled(w2.front().q(y)));
      long kstar = -negk;
      LevelPlan plan;
      plan.e = x;
      plan.f = y.shifted(rr);
      plan.pivot1 = kstar;
      plan.pivot2 = jstar;
      for (std::size_t j = 0; j <= n; ++j) {
        bool low1 = static_cast<long>(j) <= kstar;
        plan.planes1.emplace_back(low1 ? x : x.shifted(1), y.shifted(rr));
        plan.exps1.emplace_back(low1 ? 0 : 1, 0);
        bool low2 = static_cast<long>(j) <= jstar;
        plan.planes2.emplace_back(xs, low2 ? y : y.shifted(1));
        plan.exps2.emplace_back(rr, low2 ? -rr : 1 - rr);
      }
      plan.note = "case A: r=" + std::to_string(rr) + " j=" + std::to_string(jstar) +
                  " k=" + std::to_string(kstar) + (swapped ? " (chains swapped)" : "");
      auto res = try_plan(plan, w1, w2, trace, depth);
      if (res) return res;
    }
    return std::nullopt;
  };

  for (int tier = 0; tier < 2; ++tier) {
    std::vector<Vector> pool = chain_candidate_pool(m1, tier == 1);

    if (auto res = attempt_case_a(m1, m2, pool, r)) return finish(std::move(*res));

    // Case A may instead apply with the chains interchanged.
    if (!includes(m2.front(), scaled_lattice(m1.front(), r - 1))) {
      if (tier == 1)
        throw SearchExhausted("candidate pool missed a primitive case-A witness");
      continue;
    }
    if (!includes(m1.front(), scaled_lattice(m2.front(), r - 1))) {
      std::vector<Vector> pool2 = chain_candidate_pool(m2, tier == 1);
      if (auto res = attempt_case_a(m2, m1, pool2, r)) {
        AlignRec rec = std::move(*res);
        std::swap(rec.r[0], rec.r[1]);
        std::swap(rec.s[0], rec.s[1]);
        return finish(std::move(rec));
      }
      if (tier == 1)
        throw SearchExhausted("swapped case-A pool exhausted");
      continue;
    }

    // Case B: p^{r-1} maps each maximal member into the other.
    std::vector<std::pair<std::pair<long, long>, std::size_t>> ordered;
    for (std::size_t idx = 0; idx < pool.size(); ++idx) {
      const Vector& x = pool[idx];
      if (!member(x.shifted(r - 1), m2.front())) continue;
      if (member(x.shifted(r - 2), m2.front())) continue;  // not primitive
      long k = member_top(m1, x);
      long imin = static_cast<long>(n);
      if (k == static_cast<long>(n)) {
        for (long i = 0; i < static_cast<long>(n); ++i) {
          if (pairing_valuation(m1[static_cast<std::size_t>(i) + 1], x) >= 1) {
            imin = i;
            break;
          }
        }
      }
      ordered.push_back({{-k, imin}, idx});
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    for (const auto& [key, idx] : ordered) {
      const Vector& x = pool[idx];
      Vector xr1 = x.shifted(r - 1);
      long kstar = -key.first;
      long istar = key.second;
      LevelPlan plan;
      bool sub_b1 = member(xr1, m2.back());
      Vector y = Vector::zeros(m1.front().dim(), ctx);
      long jstar = 0;
      if (sub_b1) {
        bool ok = false;
        jstar = ladder_top(m2, xr1, &ok);
        if (!ok) continue;
        Vector y0 = unit_partner(m2[static_cast<std::size_t>(jstar)], xr1, &ok);
        if (!ok) continue;
        y = sanitize_vector(y0 - xr1.scaled(m2.front().q(y0)));
        for (std::size_t j = 0; j <= n; ++j) {
          bool low = static_cast<long>(j) <= jstar;
          plan.planes2.emplace_back(xr1, low ? y : y.shifted(1));
          plan.exps2.emplace_back(r - 1, low ? 1 - r : 2 - r);
        }
      } else {
        jstar = member_top(m2, xr1);
        if (jstar < 0 || jstar >= static_cast<long>(n)) continue;
        Lattice md = modified_dual(m2[static_cast<std::size_t>(jstar) + 1]);
        bool ok = false;
        Vector yp = unit_partner(md, xr1, &ok);
        if (!ok) continue;
        yp = sanitize_vector(yp - xr1.scaled(md.q(yp)));
        y = yp.shifted(1);
        if (!member(y, m2.back())) continue;
        for (std::size_t j = 0; j <= n; ++j) {
          bool low = static_cast<long>(j) <= jstar;
          plan.planes2.emplace_back(low ? xr1 : xr1.shifted(1), y);
          plan.exps2.emplace_back(low ? r - 1 : r, 1 - r);
        }
      }
      Vector f0 = y.shifted(r - 1);
      Scalar pairing = m1.front().b(x, f0);
      if (pairing.is_zeroish() || pairing.valuation() != 0) continue;
      if (!member(f0, m1.front())) continue;
      plan.e = x;
      plan.f = f0;
      plan.pivot2 = jstar;
      if (member(f0, m1.back())) {
        plan.pivot1 = kstar;
        for (std::size_t j = 0; j <= n; ++j) {
          bool low = static_cast<long>(j) <= kstar;
          plan.planes1.emplace_back(low ? x : x.shifted(1), f0);
          plan.exps1.emplace_back(low ? 0 : 1, 0);
        }
      } else {
        if (kstar != static_cast<long>(n) || istar >= static_cast<long>(n)) continue;
        plan.pivot1 = istar;
        for (std::size_t j = 0; j <= n; ++j) {
          bool low = static_cast<long>(j) <= istar;
          plan.planes1.emplace_back(x, low ? f0 : f0.shifted(1));
          plan.exps1.emplace_back(0, low ? 0 : 1);
        }
      }
      plan.note = std::string("case B") + (sub_b1 ? "1" : "2") + ": r=" + std::to_string(r) +
                  " j=" + std::to_string(jstar) + " k=" + std::to_string(kstar) +
                  " i=" + std::to_string(istar) + (swapped ? " (chains swapped)" : "");
      auto res = try_plan(plan, m1, m2, trace, depth);
      if (res) return finish(std::move(*res));
    }
  }
  throw SearchExhausted("no isotropic candidate admits a completing recursion");
}

}  // namespace

ChainAlignment common_basis(const LatticeChain& c1, const LatticeChain& c2) {
  if (!lattice::spaces_compatible(*c1.space(), *c2.space()))
    throw InvalidChain("chains live on different spaces");
  if (c1.length() != c2.length()) throw InvalidChain("chains have different lengths");
  {
    auto rep1 = chains::validate_chain(c1);
    if (!rep1.valid()) throw InvalidChain("first chain: " + rep1.first_failure());
    auto rep2 = chains::validate_chain(c2);
    if (!rep2.valid()) throw InvalidChain("second chain: " + rep2.first_failure());
  }
  std::vector<std::string> trace;
  AlignRec rec = align_rec(c1.members(), c2.members(), trace, 0);
  const CtxPtr& ctx = c1.space()->ctx();
  const std::size_t n = rec.e.size();

  // Normalize so that chain 1's maximal member carries zero exponents.
  for (std::size_t i = 0; i < n; ++i) {
    long c = rec.r[0][0][i];
    if (c == 0) continue;
    rec.e[i] = rec.e[i].shifted(c);
    rec.f[i] = rec.f[i].shifted(-c);
    for (int nu = 0; nu < 2; ++nu)
      for (std::size_t j = 0; j <= c1.steps(); ++j) {
        rec.r[static_cast<std::size_t>(nu)][j][i] -= c;
        rec.s[static_cast<std::size_t>(nu)][j][i] += c;
      }
  }

  ChainAlignment out;
  out.basis.e = std::move(rec.e);
  out.basis.f = std::move(rec.f);
  out.basis.kernel_basis = std::move(rec.kernel);
  out.r = std::move(rec.r);
  out.s = std::move(rec.s);
  out.trace = std::move(trace);

  // Final verification of the theorem's equations before returning.
  const std::vector<const LatticeChain*> cs = {&c1, &c2};
  for (std::size_t nu = 0; nu < 2; ++nu) {
    for (std::size_t j = 0; j <= c1.steps(); ++j) {
      std::vector<Vector> rows;
      for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(out.basis.e[i].shifted(out.r[nu][j][i]));
        rows.push_back(out.basis.f[i].shifted(out.s[nu][j][i]));
      }
      for (const auto& kr : out.basis.kernel_basis.row_list()) rows.push_back(kr);
      Lattice recon = Lattice::from_rows(c1.space(), rows, 0);
      if (!lattice_equal(recon, cs[nu]->member(j)))
        throw SearchExhausted("alignment reconstruction mismatch at chain " +
                              std::to_string(nu + 1) + " member " + std::to_string(j));
    }
    for (std::size_t i = 0; i < n && nu == 0; ++i) {
      if (out.r[0][0][i] != 0 || out.s[0][0][i] != 0)
        throw SearchExhausted("normalization failed to zero the chain-1 head exponents");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Scalar want = i == j ? Scalar::one(ctx) : Scalar::zero(ctx);
      if (!certified_zero(c1.space()->eval_b(out.basis.e[i], out.basis.f[j]) - want))
        throw SearchExhausted("alignment basis pairing is not the identity");
      if (!certified_zero(c1.space()->eval_b(out.basis.e[i], out.basis.e[j])) ||
          !certified_zero(c1.space()->eval_b(out.basis.f[i], out.basis.f[j])))
        throw SearchExhausted("alignment basis is not totally isotropic in pairs");
    }
    if (!certified_zero(c1.space()->eval_q(out.basis.e[i])) ||
        !certified_zero(c1.space()->eval_q(out.basis.f[i])))
      throw SearchExhausted("alignment basis vector is not isotropic");
  }
  return out;
}

}  // namespace hyperbasis::align
