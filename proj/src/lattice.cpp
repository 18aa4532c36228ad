#include "hyperbasis/lattice.hpp"

#include <algorithm>
#include <cstdint>

namespace hyperbasis::lattice {

using linalg::entries_equal;
using linalg::entry_is_zero;
using linalg::zero_floor;
using padic::BigInt;

// --- Lattice basics -----------------------------------------------------------

Lattice::Lattice(SpacePtr space, const Matrix& basis_rows, long scale_exponent)
    : space_(std::move(space)), scale_(scale_exponent) {
  if (basis_rows.cols() != space_->dim())
    throw InvalidInput("lattice basis width does not match space dimension");
  ech_ = linalg::hermite_echelon(basis_rows);
}

Lattice Lattice::standard(SpacePtr space) {
  Matrix id = Matrix::identity(space->dim(), space->ctx());
  return Lattice(std::move(space), id, 0);
}

Lattice Lattice::from_rows(SpacePtr space, const std::vector<Vector>& rows, long scale_exponent) {
  if (rows.empty()) return Lattice(space, Matrix::empty(space->dim(), space->ctx()), scale_exponent);
  return Lattice(space, Matrix::from_rows(rows), scale_exponent);
}

Scalar Lattice::b(const Vector& x, const Vector& y) const {
  return space_->eval_b(x, y).shift(scale_);
}

Scalar Lattice::q(const Vector& x) const { return space_->eval_q(x).shift(scale_); }

Matrix Lattice::gram() const {
  return (ech_.basis * space_->gram() * ech_.basis.transpose()).shifted(scale_);
}

Lattice Lattice::with_scale(long t) const { return Lattice(space_, ech_.basis, t); }

bool spaces_compatible(const BilinearSpace& a, const BilinearSpace& b) {
  if (a.kind() != b.kind() || a.dim() != b.dim()) return false;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      if (!a.gram().at(i, j).same_representative(b.gram().at(i, j))) return false;
  return true;
}

namespace {

void require_comparable(const Lattice& a, const Lattice& b) {
  if (!spaces_compatible(*a.space(), *b.space()))
    throw InvalidInput("lattices live on different spaces");
  if (a.scale_exponent() != b.scale_exponent())
    throw InvalidInput("lattices carry different scale exponents");
}

}  // namespace

// --- membership and comparisons -------------------------------------------------

bool member(const Vector& v, const Lattice& l) {
  auto coeffs = linalg::express_in_rows(l.echelon(), v);
  if (!coeffs) return false;
  for (std::size_t i = 0; i < coeffs->size(); ++i)
    if (!(*coeffs)[i].val_ge(0)) return false;
  return true;
}

bool includes(const Lattice& outer, const Lattice& inner) {
  require_comparable(outer, inner);
  for (std::size_t i = 0; i < inner.rank(); ++i)
    if (!member(inner.basis().row(i), outer)) return false;
  return true;
}

bool equal_span(const Lattice& a, const Lattice& b) {
  if (!spaces_compatible(*a.space(), *b.space())) return false;
  return linalg::matrices_equal(a.basis(), b.basis());
}

bool lattice_equal(const Lattice& a, const Lattice& b) {
  require_comparable(a, b);
  return linalg::matrices_equal(a.basis(), b.basis());
}

Lattice scaled_lattice(const Lattice& l, long k) {
  return Lattice(l.space(), l.basis().shifted(k), l.scale_exponent());
}

Lattice sum(const Lattice& a, const Lattice& b) {
  require_comparable(a, b);
  std::vector<Vector> rows = a.basis().row_list();
  for (const auto& r : b.basis().row_list()) rows.push_back(r);
  return Lattice::from_rows(a.space(), rows, a.scale_exponent());
}

Lattice intersect(const Lattice& a, const Lattice& b) {
  require_comparable(a, b);
  if (a.rank() != b.rank())
    throw InvalidInput("intersection implemented for lattices of a common span");
  return dual(sum(dual(a), dual(b)));
}

long containment_exponent(const Lattice& a, const Lattice& b) {
  require_comparable(a, b);
  long worst = 0;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    auto coeffs = linalg::express_in_rows(b.echelon(), a.basis().row(i));
    if (!coeffs) throw InvalidInput("containment exponent across different spans");
    long mv = coeffs->min_valuation();
    if (mv < -worst) worst = -mv;
  }
  return worst;
}

// --- duals ------------------------------------------------------------------------

Lattice dual(const Lattice& l) {
  if (l.rank() == 0) return l;
  Matrix g = l.gram();
  Matrix d = linalg::inverse(g) * l.basis();
  return Lattice(l.space(), d, l.scale_exponent());
}

bool double_dual_check(const Lattice& l) { return lattice_equal(dual(dual(l)), l); }

// --- predicates --------------------------------------------------------------------

PredicateRecord predicates(const Lattice& l) {
  PredicateRecord out;
  if (l.rank() == 0) {
    out.integral = out.even = out.totally_even = out.p_elementary = true;
    return out;
  }
  Matrix g = l.gram();
  out.integral = g.min_valuation() >= 0;
  out.even = out.integral;
  if (l.space()->kind() == FormKind::Quadratic && out.integral) {
    for (std::size_t i = 0; i < l.rank(); ++i)
      if (!l.q(l.basis().row(i)).val_ge(0)) out.even = false;
  }
  out.totally_even = out.even;
  if (out.even && l.space()->kind() == FormKind::Quadratic) {
    for (std::size_t i = 0; i < l.rank() && out.totally_even; ++i) {
      long row_min = g.row(i).min_valuation();
      Scalar qq = l.q(l.basis().row(i));
      if (qq.is_zeroish()) continue;
      if (qq.valuation() < row_min) out.totally_even = false;
    }
  }
  if (out.integral) {
    Lattice d = dual(l);
    out.p_elementary = includes(d, l) && includes(l, scaled_lattice(d, 1));
  }
  return out;
}

bool pr_modular(const Lattice& l, long r) {
  if (l.rank() == 0) return true;
  return lattice_equal(l, scaled_lattice(dual(l), r));
}

// --- index-p overlattice scanning ------------------------------------------------------

namespace {

// Residue of a scalar mod p^k (k small); requires val >= 0 at certified
// digits.  Zero-ish values and digits at or beyond k contribute 0.
BigInt scalar_residue(const Scalar& s, int k) {
  const CtxPtr& ctx = s.ctx();
  if (s.is_exact_zero()) return 0;
  if (s.is_near_zero()) {
    if (s.val_lower_bound() < k)
      throw PrecisionExhausted("residue of weakly bounded value");
    return 0;
  }
  long v = s.valuation();
  if (v < 0) throw InvalidInput("residue of a non-integral value");
  if (v >= k) return 0;
  if (s.abs_precision() < k) throw PrecisionExhausted("residue beyond certified digits");
  return (s.unit_mod(static_cast<int>(k - v)) * ctx->pow(static_cast<int>(v))) % ctx->pow(k);
}

// Enumerates projective line representatives c in F_p^m (first nonzero
// coordinate 1) and reports any c whose vector w = sum c_i basis_i admits
// w/p inside the p^r bounds.  Residue arithmetic mod p^{slack} does the
// bulk filtering; callers re-verify hits exactly.
class OverlatticeScanner {
 public:
  OverlatticeScanner(const Lattice& l, long r) : l_(l), r_(r) {
    const CtxPtr& ctx = l.ctx();
    k_ = 2 + 4;  // conditions live at shifted valuations 1 and 2
    mod_ = ctx->pow(k_);
    const Matrix g = l.gram();
    const std::size_t m = l.rank();
    res_.assign(m, std::vector<BigInt>(m));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) res_[i][j] = scalar_residue(g.at(i, j).shift(-r), k_);
  }

  // Applies fn to each candidate coefficient vector until fn returns true.
  template <typename Fn>
  bool scan(Fn&& fn) const {
    const std::size_t m = res_.size();
    const std::int64_t p = l_.ctx()->p();
    const BigInt p1 = p, p2 = BigInt(p) * p;
    std::vector<std::int64_t> c(m, 0);
    for (std::size_t lead = 0; lead < m; ++lead) {
      // c[lead] = 1, coordinates before lead are 0, after lead free.
      std::fill(c.begin(), c.end(), 0);
      c[lead] = 1;
      while (true) {
        // pairings s_i = sum_j c_j g_ji ; norm n = sum c_i s_i
        bool ok = true;
        BigInt n = 0;
        for (std::size_t i = 0; i < m && ok; ++i) {
          BigInt s = 0;
          for (std::size_t j = lead; j < m; ++j) {
            if (c[j] == 0) continue;
            s += c[j] * res_[j][i];
          }
          s %= mod_;
          if (s % p1 != 0) ok = false;
          if (c[i] != 0) n += c[i] * s;
        }
        if (ok && n % p2 == 0) {
          if (fn(c)) return true;
        }
        // odometer over coordinates after lead
        std::size_t pos = lead + 1;
        while (pos < m && ++c[pos] == p) c[pos++] = 0;
        if (pos >= m) break;
      }
    }
    return false;
  }

 private:
  const Lattice& l_;
  long r_;
  int k_;
  BigInt mod_;
  std::vector<std::vector<BigInt>> res_;
};

Vector combine_rows(const Lattice& l, const std::vector<std::int64_t>& c) {
  const CtxPtr& ctx = l.ctx();
  Vector w = Vector::zeros(l.dim(), ctx);
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (c[j] == 0) continue;
    w = w + l.basis().row(j).scaled(Scalar::from_integer(c[j], ctx));
  }
  return w;
}

bool bounds_hold(const Lattice& l, long r) {
  if (l.rank() == 0) return true;
  Matrix g = l.gram();
  if (g.min_valuation() < r) return false;
  if (l.space()->kind() == FormKind::Quadratic) {
    for (std::size_t i = 0; i < l.rank(); ++i)
      if (!l.q(l.basis().row(i)).val_ge(r)) return false;
  }
  return true;
}

// One greedy enlargement step; returns the enlarged lattice or nullopt.
std::optional<Lattice> enlarge_once(const Lattice& l, long r) {
  OverlatticeScanner scan(l, r);
  std::optional<Lattice> out;
  scan.scan([&](const std::vector<std::int64_t>& c) {
    Vector w = combine_rows(l, c).shifted(-1);
    std::vector<Vector> rows = l.basis().row_list();
    rows.push_back(w);
    Lattice cand = Lattice::from_rows(l.space(), rows, l.scale_exponent());
    if (cand.rank() != l.rank()) return false;
    if (!bounds_hold(cand, r)) return false;
    out = std::move(cand);
    return true;
  });
  return out;
}

}  // namespace

bool pr_maximal(const Lattice& l, long r) {
  if (!bounds_hold(l, r)) return false;
  if (l.rank() == 0) return true;
  return !enlarge_once(l, r).has_value();
}

Lattice maximal_lattice_on_span(const SpacePtr& s, const Matrix& span_rows, long scale, long r) {
  if (span_rows.rows() == 0) return Lattice(s, span_rows, scale);
  auto sub = std::make_shared<const BilinearSpace>(s->restricted(span_rows));
  long m0 = sub->gram().min_valuation() + scale;
  long deficit = r - m0;
  long k = deficit >= 0 ? (deficit + 1) / 2 : -((-deficit) / 2);
  Lattice cur(sub, Matrix::identity(sub->dim(), s->ctx()).shifted(k), scale);
  while (auto next = enlarge_once(cur, r)) cur = *next;
  // Map back to ambient coordinates.
  Matrix rows = cur.basis() * span_rows;
  return Lattice(s, rows, scale);
}

Lattice maximal_lattice(const SpacePtr& s, long r) {
  return maximal_lattice_on_span(s, Matrix::identity(s->dim(), s->ctx()), 0, r);
}

// --- residue-form analysis over F_p -------------------------------------------------

namespace {

using FpMat = std::vector<std::vector<std::int64_t>>;

std::int64_t fp_norm(std::int64_t x, std::int64_t p) { return ((x % p) + p) % p; }

std::int64_t fp_inv(std::int64_t a, std::int64_t p) {
  a = fp_norm(a, p);
  std::int64_t t0 = 0, t1 = 1, r0 = p, r1 = a;
  while (r1 != 0) {
    std::int64_t qd = r0 / r1;
    std::int64_t r2 = r0 - qd * r1;
    r0 = r1;
    r1 = r2;
    std::int64_t t2 = t0 - qd * t1;
    t0 = t1;
    t1 = t2;
  }
  return fp_norm(t0, p);
}

// Row-reduces m in place; returns pivot columns.
std::vector<std::size_t> fp_rref(FpMat& m, std::int64_t p) {
  std::vector<std::size_t> pivots;
  if (m.empty()) return pivots;
  std::size_t rows = m.size(), cols = m[0].size(), r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t sel = rows;
    for (std::size_t i = r; i < rows; ++i)
      if (fp_norm(m[i][c], p) != 0) {
        sel = i;
        break;
      }
    if (sel == rows) continue;
    std::swap(m[sel], m[r]);
    std::int64_t inv = fp_inv(m[r][c], p);
    for (auto& x : m[r]) x = fp_norm(x * inv, p);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      std::int64_t f = fp_norm(m[i][c], p);
      if (f == 0) continue;
      for (std::size_t j = 0; j < cols; ++j) m[i][j] = fp_norm(m[i][j] - f * m[r][j], p);
    }
    pivots.push_back(c);
    ++r;
  }
  m.resize(r);
  return pivots;
}

// Kernel basis of the symmetric residue matrix (vectors c with c*g = 0).
FpMat fp_kernel(const FpMat& g, std::int64_t p) {
  FpMat m = g;
  std::vector<std::size_t> piv = fp_rref(m, p);
  std::size_t n = g.size();
  std::vector<bool> is_piv(n, false);
  for (auto c : piv) is_piv[c] = true;
  FpMat ker;
  for (std::size_t freec = 0; freec < n; ++freec) {
    if (is_piv[freec]) continue;
    std::vector<std::int64_t> v(n, 0);
    v[freec] = 1;
    for (std::size_t i = 0; i < piv.size(); ++i) v[piv[i]] = fp_norm(-m[i][freec], p);
    ker.push_back(std::move(v));
  }
  return ker;
}

// Isotropic vector of the nondegenerate diagonal residue form
// sum delta_i x_i^2 over F_p (odd p), or empty when anisotropic.
std::vector<std::int64_t> fp_isotropic_diag(const std::vector<std::int64_t>& delta,
                                            std::int64_t p) {
  const std::size_t m = delta.size();
  if (m <= 1) return {};
  auto square_root = [&](std::int64_t a) -> std::int64_t {
    a = fp_norm(a, p);
    for (std::int64_t s = 0; s < p; ++s)
      if (fp_norm(s * s - a, p) == 0) return s;
    return -1;
  };
  if (m == 2) {
    std::int64_t s = square_root(-delta[0] * fp_inv(delta[1], p));
    if (s < 0) return {};
    return {1, s};
  }
  // m >= 3: a nontrivial zero exists; sweep two leading shapes.
  for (std::int64_t a = 0; a < p; ++a)
    for (std::int64_t b = 0; b < p; ++b) {
      if (fp_norm(delta[0] + delta[1] * a * a + delta[2] * b * b, p) == 0) {
        std::vector<std::int64_t> v(m, 0);
        v[0] = 1;
        v[1] = a;
        v[2] = b;
        return v;
      }
    }
  for (std::int64_t c = 0; c < p; ++c) {
    if (fp_norm(delta[1] + delta[2] * c * c, p) == 0) {
      std::vector<std::int64_t> v(m, 0);
      v[1] = 1;
      v[2] = c;
      return v;
    }
  }
  return {};
}

// Diagonalizes the nondegenerate symmetric residue form g over F_p and finds
// an isotropic vector in the original coordinates, or empty when anisotropic.
std::vector<std::int64_t> fp_isotropic(const FpMat& g, std::int64_t p) {
  const std::size_t n = g.size();
  if (n == 0) return {};
  // basis rows in original coordinates
  FpMat basis(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) basis[i][i] = 1;
  auto bval = [&](const std::vector<std::int64_t>& x, const std::vector<std::int64_t>& y) {
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i] == 0) continue;
      std::int64_t row = 0;
      for (std::size_t j = 0; j < n; ++j) row = fp_norm(row + g[i][j] * y[j], p);
      acc = fp_norm(acc + x[i] * row, p);
    }
    return acc;
  };
  FpMat work = basis;
  FpMat diag_basis;
  std::vector<std::int64_t> delta;
  while (!work.empty()) {
    std::size_t pick = work.size();
    for (std::size_t i = 0; i < work.size(); ++i)
      if (bval(work[i], work[i]) != 0) {
        pick = i;
        break;
      }
    std::vector<std::int64_t> v;
    if (pick < work.size()) {
      v = work[pick];
    } else {
      // all norms zero: repair with a pair sum (char != 2)
      bool found = false;
      for (std::size_t i = 0; i < work.size() && !found; ++i)
        for (std::size_t j = i + 1; j < work.size() && !found; ++j)
          if (bval(work[i], work[j]) != 0) {
            v.resize(n);
            for (std::size_t k2 = 0; k2 < n; ++k2) v[k2] = fp_norm(work[i][k2] + work[j][k2], p);
            found = true;
          }
      if (!found) return {};  // degenerate block; callers exclude this
    }
    std::int64_t nv = bval(v, v);
    std::int64_t nv_inv = fp_inv(nv, p);
    FpMat next;
    for (const auto& w : work) {
      std::int64_t c = fp_norm(bval(w, v) * nv_inv, p);
      std::vector<std::int64_t> w2(n);
      for (std::size_t k2 = 0; k2 < n; ++k2) w2[k2] = fp_norm(w[k2] - c * v[k2], p);
      next.push_back(std::move(w2));
    }
    fp_rref(next, p);
    diag_basis.push_back(v);
    delta.push_back(nv);
    work = std::move(next);
  }
  std::vector<std::int64_t> iso = fp_isotropic_diag(delta, p);
  if (iso.empty()) return {};
  std::vector<std::int64_t> out(n, 0);
  for (std::size_t i = 0; i < iso.size(); ++i)
    for (std::size_t k2 = 0; k2 < n; ++k2)
      out[k2] = fp_norm(out[k2] + iso[i] * diag_basis[i][k2], p);
  return out;
}

std::int64_t residue_digit(const Scalar& s) {
  if (s.is_zeroish()) return 0;
  if (s.valuation() > 0) return 0;
  if (s.valuation() < 0) throw InvalidInput("non-integral entry in residue form");
  return static_cast<std::int64_t>(s.unit_mod(1));
}

}  // namespace

std::optional<HyperbolicPair> find_unimodular_pair(const Lattice& l) {
  if (l.rank() < 2) return std::nullopt;
  const CtxPtr& ctx = l.ctx();
  const std::int64_t p = ctx->p();
  Matrix g = l.gram();
  if (g.min_valuation() < 0) throw InvalidInput("unimodular pair search needs an integral lattice");

  if (l.space()->kind() == FormKind::Alternating) {
    for (std::size_t i = 0; i < l.rank(); ++i)
      for (std::size_t j = 0; j < l.rank(); ++j) {
        const Scalar& gij = g.at(i, j);
        if (gij.is_zeroish() || gij.valuation() != 0) continue;
        Vector e = l.basis().row(i);
        Vector f = l.basis().row(j).scaled(gij.inverse());
        return HyperbolicPair{std::move(e), std::move(f), 0};
      }
    return std::nullopt;
  }

  const std::size_t m = l.rank();
  FpMat gbar(m, std::vector<std::int64_t>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) gbar[i][j] = residue_digit(g.at(i, j));
  FpMat radical = fp_kernel(gbar, p);
  // Complement coordinates: unit vectors outside the radical's pivot set.
  FpMat rad_rref = radical;
  std::vector<std::size_t> rad_piv = fp_rref(rad_rref, p);
  std::vector<bool> in_rad(m, false);
  for (auto c : rad_piv) in_rad[c] = true;
  std::vector<std::size_t> comp;
  for (std::size_t i = 0; i < m; ++i)
    if (!in_rad[i]) comp.push_back(i);
  if (comp.empty()) return std::nullopt;
  FpMat nd(comp.size(), std::vector<std::int64_t>(comp.size()));
  for (std::size_t a = 0; a < comp.size(); ++a)
    for (std::size_t b = 0; b < comp.size(); ++b) nd[a][b] = gbar[comp[a]][comp[b]];
  std::vector<std::int64_t> gamma = fp_isotropic(nd, p);
  if (gamma.empty()) return std::nullopt;

  Vector x0 = Vector::zeros(l.dim(), ctx);
  for (std::size_t a = 0; a < comp.size(); ++a) {
    if (gamma[a] == 0) continue;
    x0 = x0 + l.basis().row(comp[a]).scaled(Scalar::from_integer(gamma[a], ctx));
  }
  Scalar q0 = l.q(x0);
  if (!q0.val_ge(1)) throw PrecisionExhausted("residue isotropy did not certify");
  // Hensel-correct along a partner with unit pairing.
  std::optional<std::size_t> wi;
  for (std::size_t i = 0; i < m; ++i) {
    Scalar pair = l.b(x0, l.basis().row(i));
    if (!pair.is_zeroish() && pair.valuation() == 0) {
      wi = i;
      break;
    }
  }
  if (!wi) throw PrecisionExhausted("unit pairing for residue isotropic vector not found");
  Vector w = l.basis().row(*wi);
  Scalar tau = space::hensel_root_quadratic(q0, l.b(x0, w), l.q(w), Scalar::zero(ctx));
  Vector x = x0 + w.scaled(tau);
  Vector y = w.scaled(l.b(x, w).inverse());
  Vector f = y - x.scaled(l.q(y));
  return HyperbolicPair{std::move(x), std::move(f), 0};
}

namespace {

// {x in L : b(x, L) inside pR} without dual stacking: lift the residue
// radical of the Gram matrix and add pL.
Lattice deep_pairing_sublattice(const Lattice& l) {
  const CtxPtr& ctx = l.ctx();
  const std::int64_t p = ctx->p();
  Matrix g = l.gram();
  const std::size_t m = l.rank();
  FpMat gbar(m, std::vector<std::int64_t>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) gbar[i][j] = residue_digit(g.at(i, j));
  FpMat rad = fp_kernel(gbar, p);
  std::vector<Vector> rows;
  for (const auto& c : rad) {
    Vector v = Vector::zeros(l.dim(), ctx);
    for (std::size_t j = 0; j < m; ++j)
      if (c[j] != 0) v = v + l.basis().row(j).scaled(Scalar::from_integer(c[j], ctx));
    rows.push_back(std::move(v));
  }
  for (std::size_t j = 0; j < m; ++j) rows.push_back(l.basis().row(j).shifted(1));
  return Lattice::from_rows(l.space(), rows, l.scale_exponent());
}

std::optional<HyperbolicPair> find_pmodular_pair(const Lattice& l) {
  if (l.rank() < 2) return std::nullopt;
  Lattice l1 = deep_pairing_sublattice(l);
  Lattice shifted = l1.with_scale(l.scale_exponent() - 1);
  auto pr = find_unimodular_pair(shifted);
  if (!pr) return std::nullopt;
  return HyperbolicPair{std::move(pr->e), std::move(pr->f), 1};
}

}  // namespace

// --- splitting -----------------------------------------------------------------------

std::pair<Lattice, Lattice> split_hyperbolic(const Lattice& l, const Vector& e_in,
                                             const Vector& f_in) {
  const CtxPtr& ctx = l.ctx();
  Vector e = e_in, f = f_in;
  if (!member(e, l) || !member(f, l)) throw DoesNotSplit("plane vectors outside the lattice");
  if (!entry_is_zero(l.q(e)) || !entry_is_zero(l.q(f)))
    throw DoesNotSplit("plane vectors are not isotropic");
  Scalar pairing = l.b(e, f);
  if (pairing.is_zeroish()) throw DoesNotSplit("degenerate plane");
  long a = pairing.valuation();
  if (a != 0 && a != 1) throw DoesNotSplit("pairing is neither unimodular nor p-modular");
  // Normalize so b(e,f) is exactly p^a.
  f = f.scaled(Scalar::from_unit(padic::mod_inverse(pairing.unit_part(), ctx->modulus()), 0,
                                 pairing.known_digits(), ctx));
  Scalar bef = l.b(e, f);
  Scalar bfe = l.b(f, e);
  std::vector<Vector> projected;
  for (std::size_t i = 0; i < l.rank(); ++i) {
    Vector z = l.basis().row(i);
    Scalar lam = l.b(z, f) / bef;
    Scalar mu = l.b(z, e) / bfe;
    if (!lam.val_ge(0) || !mu.val_ge(0)) throw DoesNotSplit("projection onto the plane is not integral");
    projected.push_back(z - e.scaled(lam) - f.scaled(mu));
  }
  Lattice complement = Lattice::from_rows(l.space(), projected, l.scale_exponent());
  if (complement.rank() != l.rank() - 2)
    throw DoesNotSplit("orthogonal complement has unexpected rank");
  Lattice plane = Lattice::from_rows(l.space(), {e, f}, l.scale_exponent());
  if (!lattice_equal(sum(plane, complement), l))
    throw DoesNotSplit("plane plus complement does not rebuild the lattice");
  return {std::move(plane), std::move(complement)};
}

// --- APTE decomposition ------------------------------------------------------------------

APTEDecomposition apte_decompose(const Lattice& l) {
  const CtxPtr& ctx = l.ctx();
  APTEDecomposition out;
  out.an_basis = Matrix::empty(l.dim(), ctx);
  out.witness = Matrix::identity(l.rank(), ctx);
  if (l.rank() == 0) return out;

  PredicateRecord pr = predicates(l);
  if (!pr.totally_even) throw NotAPTE(NotAPTE::Reason::NotTotallyEven);

  Lattice cur = l;
  while (cur.rank() >= 2) {
    auto hp = find_unimodular_pair(cur);
    if (!hp) break;
    auto [plane, comp] = split_hyperbolic(cur, hp->e, hp->f);
    out.unimodular_pairs.emplace_back(hp->e, hp->f);
    cur = comp;
  }
  while (cur.rank() >= 2) {
    auto hp = find_pmodular_pair(cur);
    if (!hp) break;
    auto [plane, comp] = split_hyperbolic(cur, hp->e, hp->f);
    out.p_modular_pairs.emplace_back(hp->e, hp->f);
    cur = comp;
  }
  if (cur.rank() > 0) {
    BilinearSpace sub = l.space()->restricted(cur.basis());
    if (!space::is_anisotropic(sub)) {
      if (!predicates(cur).p_elementary) throw NotAPTE(NotAPTE::Reason::NotPElementary);
      throw SearchExhausted("isotropic p-elementary remainder defied plane extraction");
    }
    if (!pr_maximal(cur, 0)) throw NotAPTE(NotAPTE::Reason::AnisotropicPartNotMaximal);
    out.an_basis = cur.basis();
  }

  // Witness: the lattice basis written in the concatenated block basis.
  std::vector<Vector> block_rows;
  for (const auto& [e, f] : out.unimodular_pairs) {
    block_rows.push_back(e);
    block_rows.push_back(f);
  }
  for (const auto& [e, f] : out.p_modular_pairs) {
    block_rows.push_back(e);
    block_rows.push_back(f);
  }
  for (const auto& r : out.an_basis.row_list()) block_rows.push_back(r);
  Lattice rebuilt = Lattice::from_rows(l.space(), block_rows, l.scale_exponent());
  if (!lattice_equal(rebuilt, l))
    throw SearchExhausted("APTE blocks do not rebuild the lattice");
  linalg::Echelon blocks = linalg::hermite_echelon(Matrix::from_rows(block_rows));
  Matrix witness(l.rank(), l.rank(), ctx);
  for (std::size_t i = 0; i < l.rank(); ++i) {
    auto coeffs = linalg::express_in_rows(blocks, l.basis().row(i));
    if (!coeffs) throw SearchExhausted("lattice basis escaped the block span");
    witness.set_row(i, *coeffs);
  }
  for (long e : linalg::elementary_divisors(witness))
    if (e != 0) throw SearchExhausted("APTE witness is not unimodular");
  out.witness = std::move(witness);
  return out;
}

// --- modified dual ------------------------------------------------------------------------

Lattice modified_dual(const Lattice& l) {
  const CtxPtr& ctx = l.ctx();
  APTEDecomposition d = apte_decompose(l);
  std::vector<Vector> rows;
  for (const auto& [e, f] : d.unimodular_pairs) {
    rows.push_back(e);
    rows.push_back(f);
  }
  for (const auto& [e, f] : d.p_modular_pairs) {
    rows.push_back(e.shifted(-1));
    rows.push_back(f.shifted(-1));
  }
  if (d.an_basis.rows() > 0) {
    Lattice an_max =
        maximal_lattice_on_span(l.space(), d.an_basis, l.scale_exponent() + 1, 0);
    for (const auto& r : an_max.basis().row_list()) rows.push_back(r);
  }
  if (rows.empty())
    return Lattice(l.space(), Matrix::empty(l.dim(), ctx), l.scale_exponent() + 1);
  return Lattice::from_rows(l.space(), rows, l.scale_exponent() + 1);
}

// --- isotropic sublattice and the dual-bound check ---------------------------------------------

Lattice isotropic_sublattice(const Lattice& l) {
  APTEDecomposition d = apte_decompose(l);
  if (d.pair_count() == 0) throw NoIsotropicVectors();
  bool hyp_all_pmodular = d.unimodular_pairs.empty();
  std::vector<Vector> rows;
  for (const auto& [e, f] : d.unimodular_pairs) {
    rows.push_back(e);
    rows.push_back(f);
  }
  for (const auto& [e, f] : d.p_modular_pairs) {
    rows.push_back(e);
    rows.push_back(f);
  }
  if (!hyp_all_pmodular || d.an_basis.rows() == 0) {
    if (!hyp_all_pmodular)
      for (const auto& r : d.an_basis.row_list()) rows.push_back(r);
    return Lattice::from_rows(l.space(), rows, l.scale_exponent());
  }
  // All planes p-modular: the isotropic vectors generate the hyperbolic part
  // plus the deep-even part of the anisotropic block.
  Lattice an_deep = maximal_lattice_on_span(l.space(), d.an_basis, l.scale_exponent(), 1);
  for (const auto& r : an_deep.basis().row_list()) rows.push_back(r);
  return Lattice::from_rows(l.space(), rows, l.scale_exponent());
}

bool even_sublattice_dual_bound(const Lattice& l) {
  APTEDecomposition d = apte_decompose(l);
  if (d.pair_count() == 0) throw NoIsotropicVectors();
  const CtxPtr& ctx = l.ctx();
  bool hyp_all_pmodular = d.unimodular_pairs.empty();
  std::vector<Vector> hyp_rows;
  for (const auto& [e, f] : d.unimodular_pairs) {
    hyp_rows.push_back(e);
    hyp_rows.push_back(f);
  }
  for (const auto& [e, f] : d.p_modular_pairs) {
    hyp_rows.push_back(e);
    hyp_rows.push_back(f);
  }
  Lattice hyp = Lattice::from_rows(l.space(), hyp_rows, l.scale_exponent());
  // Hyperbolic block: p Hyp# must land back inside Hyp.
  if (!includes(hyp, scaled_lattice(dual(hyp), 1))) return false;

  // The generating set S of vectors with deep even values.
  Lattice s_lat = l;
  if (hyp_all_pmodular && d.an_basis.rows() > 0) {
    Lattice an_deep = maximal_lattice_on_span(l.space(), d.an_basis, l.scale_exponent(), 1);
    std::vector<Vector> rows = hyp_rows;
    for (const auto& r : an_deep.basis().row_list()) rows.push_back(r);
    s_lat = Lattice::from_rows(l.space(), rows, l.scale_exponent());
  }
  Lattice t_lat = scaled_lattice(dual(s_lat), 1);
  // Sample vectors of p S#: those with integral Q must lie in L.
  const std::int64_t p = ctx->p();
  const std::size_t m = t_lat.rank();
  std::vector<std::int64_t> c(m, 0);
  long budget = 4096;
  while (budget-- > 0) {
    std::size_t pos = 0;
    while (pos < m && ++c[pos] == p) c[pos++] = 0;
    if (pos == m) break;
    Vector z = Vector::zeros(l.dim(), ctx);
    for (std::size_t j = 0; j < m; ++j)
      if (c[j] != 0) z = z + t_lat.basis().row(j).scaled(Scalar::from_integer(c[j], ctx));
    Scalar qz = l.q(z);
    bool integral_q = qz.is_zeroish() ? true : qz.valuation() >= 0;
    if (integral_q && !member(z, l)) return false;
  }
  return true;
}

}  // namespace hyperbasis::lattice
