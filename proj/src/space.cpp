#include "hyperbasis/space.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

namespace hyperbasis::space {

using linalg::entries_equal;
using linalg::entry_is_zero;
using linalg::zero_floor;

namespace {

Scalar dot(const Vector& a, const Vector& b) {
  Scalar acc = Scalar::zero(a.ctx() ? a.ctx() : b.ctx());
  for (std::size_t i = 0; i < a.size(); ++i) acc = acc + a[i] * b[i];
  return acc;
}

}  // namespace

BilinearSpace::BilinearSpace(FormKind kind, Matrix gram) : kind_(kind), gram_(std::move(gram)) {
  if (gram_.rows() != gram_.cols()) throw InvalidInput("Gram matrix must be square");
  const CtxPtr& ctx = gram_.ctx();
  const std::size_t n = gram_.rows();
  if (kind_ == FormKind::Quadratic && ctx->p() == 2)
    throw InvalidInput("quadratic spaces require odd p");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (kind_ == FormKind::Quadratic) {
        if (!entries_equal(gram_.at(i, j), gram_.at(j, i)))
          throw InvalidInput("quadratic Gram matrix must be symmetric");
      } else {
        if (!entries_equal(gram_.at(i, j), -gram_.at(j, i)))
          throw InvalidInput("alternating Gram matrix must be skew-symmetric");
        if (i == j && !entry_is_zero(gram_.at(i, i)))
          throw InvalidInput("alternating Gram matrix must have zero diagonal");
      }
    }
  if (n > 0) linalg::det(gram_);  // throws SingularMatrix when degenerate
  if (kind_ == FormKind::Alternating && n % 2 != 0)
    throw InvalidInput("non-degenerate alternating form needs even dimension");
}

Scalar BilinearSpace::eval_b(const Vector& x, const Vector& y) const {
  if (x.size() != dim() || y.size() != dim()) throw InvalidInput("vector dimension mismatch");
  return dot(linalg::mul_row(x, gram_), y);
}

Scalar BilinearSpace::eval_q(const Vector& x) const {
  if (kind_ == FormKind::Alternating) return Scalar::zero(ctx());
  return eval_b(x, x) / Scalar::from_integer(2, ctx());
}

BilinearSpace BilinearSpace::restricted(const Matrix& rows) const {
  Matrix sub = rows * gram_ * rows.transpose();
  return BilinearSpace(kind_, std::move(sub));
}

// --- diagonalization -----------------------------------------------------------

Diagonalization diagonalize(const BilinearSpace& s) {
  if (s.kind() != FormKind::Quadratic)
    throw InvalidInput("diagonalization applies to quadratic spaces");
  const CtxPtr& ctx = s.ctx();
  std::vector<Vector> work;
  for (std::size_t i = 0; i < s.dim(); ++i) work.push_back(Vector::unit(s.dim(), i, ctx));
  std::vector<Vector> basis;
  std::vector<Scalar> qvals;
  while (!work.empty()) {
    // Candidate with minimal valuation of b(v,v): current vectors first,
    // then pairwise sums (which repair an all-zero diagonal at odd p).
    std::optional<Vector> best;
    long best_val = Scalar::kInfVal;
    auto consider = [&](const Vector& v) {
      Scalar n = s.eval_b(v, v);
      if (n.is_zeroish()) return;
      if (n.valuation() >= zero_floor(ctx)) return;
      if (n.valuation() < best_val) {
        best_val = n.valuation();
        best = v;
      }
    };
    for (const auto& v : work) consider(v);
    for (std::size_t i = 0; i < work.size() && best_val > -zero_floor(ctx); ++i)
      for (std::size_t j = i + 1; j < work.size(); ++j) consider(work[i] + work[j]);
    if (!best)
      throw PrecisionExhausted("no certified diagonalization pivot (degenerate block?)");
    Vector v = *best;
    Scalar nv = s.eval_b(v, v);
    std::vector<Vector> next;
    for (const auto& w : work) {
      Vector w2 = w - v.scaled(s.eval_b(w, v) / nv);
      next.push_back(std::move(w2));
    }
    // Keep an independent spanning subset of the projections.
    if (!next.empty()) {
      linalg::Echelon ech = linalg::hermite_echelon(Matrix::from_rows(next));
      std::vector<Vector> kept = ech.basis.row_list();
      if (kept.size() != work.size() - 1)
        throw PrecisionExhausted("projection rank drop during diagonalization");
      work = std::move(kept);
    }
    basis.push_back(v);
    qvals.push_back(s.eval_q(v));
  }
  return Diagonalization{Matrix::from_rows(basis), std::move(qvals)};
}

// --- anisotropy decision ---------------------------------------------------------

namespace {

struct DiagData {
  std::vector<Scalar> q;  // diagonal Q-values
  Matrix basis;
};

bool anisotropic_by_invariants(const BilinearSpace& s, const std::vector<Scalar>& a,
                               AnisotropicCertificate* cert) {
  const CtxPtr& ctx = s.ctx();
  const std::size_t n = a.size();
  auto record = [&](const std::string& why, std::vector<std::pair<std::string, long>> data) {
    if (cert) {
      cert->reason = why;
      cert->data = std::move(data);
    }
  };
  if (n == 0) {
    record("zero-dimensional space", {});
    return true;
  }
  if (n == 1) {
    record("rank 1 with nonzero form", {{"val_q", a[0].valuation()}});
    return true;
  }
  if (n == 2) {
    Scalar d = -(a[0] * a[1]);
    if (!padic::is_square(d)) {
      record("binary form with -disc a non-square",
             {{"val_disc", d.valuation()}, {"legendre", -1}});
      return true;
    }
    return false;
  }
  if (n == 3) {
    int h = padic::hilbert_symbol(-(a[0] * a[2]), -(a[1] * a[2]));
    if (h == -1) {
      record("ternary Hilbert criterion", {{"hilbert", h}});
      return true;
    }
    return false;
  }
  if (n == 4) {
    Scalar d = a[0] * a[1] * a[2] * a[3];
    if (!padic::is_square(d)) return false;
    int eps = 1;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) eps *= padic::hilbert_symbol(a[i], a[j]);
    int ref = padic::hilbert_symbol(-Scalar::one(ctx), -Scalar::one(ctx));
    if (eps != ref) {
      record("quaternary: square discriminant with deviant Hasse invariant",
             {{"hasse", eps}, {"hasse_minus_one", ref}});
      return true;
    }
    return false;
  }
  return false;  // dim >= 5 always isotropic over Q_p
}

}  // namespace

bool is_anisotropic(const BilinearSpace& s) {
  if (s.kind() == FormKind::Alternating) return s.dim() == 0;
  if (s.dim() == 0) return true;
  if (s.dim() >= 5) return false;
  Diagonalization d = diagonalize(s);
  return anisotropic_by_invariants(s, d.q_values, nullptr);
}

// --- isotropic vector construction ------------------------------------------------

Scalar hensel_root_quadratic(const Scalar& q0, const Scalar& b1, const Scalar& c2,
                             const Scalar& t0) {
  const CtxPtr& ctx = b1.ctx();
  Scalar t = t0;
  for (int iter = 0; iter < 200; ++iter) {
    Scalar f = q0 + b1 * t + c2 * t * t;
    if (f.is_zeroish()) {
      if (f.val_lower_bound() < zero_floor(ctx) && !f.is_exact_zero()) {
        if (getenv("HB_TRAP")) {
          fprintf(stderr, "STALL iter=%d\n q0=%s\n b1=%s\n c2=%s\n t=%s\n f=%s\n", iter,
                  q0.to_string(6).c_str(), b1.to_string(6).c_str(), c2.to_string(6).c_str(),
                  t.to_string(6).c_str(), f.to_string(6).c_str());
          abort();
        }
        throw PrecisionExhausted("quadratic root stalled below floor");
      }
      return t;
    }
    Scalar fp = b1 + (c2 + c2) * t;
    t = t - f / fp;
  }
  throw PrecisionExhausted("quadratic Hensel iteration did not converge");
}

namespace {

// Constructs an exactly isotropic vector for a diagonalized quadratic space
// known to be isotropic.  Coordinates are indices into diag.q / diag.basis.
Vector construct_isotropic(const BilinearSpace& s, const Diagonalization& diag) {
  const CtxPtr& ctx = s.ctx();
  const std::int64_t p = ctx->p();
  const std::size_t n = diag.q_values.size();
  // Normalize: scale each basis vector so val Q is 0 or 1.
  std::vector<Vector> t;
  std::vector<Scalar> a;
  for (std::size_t i = 0; i < n; ++i) {
    long v = diag.q_values[i].valuation();
    long shiftv = -(v >= 0 ? v / 2 : (v - 1) / 2);  // floor division
    t.push_back(diag.basis.row(i).shifted(shiftv));
    a.push_back(diag.q_values[i].shift(2 * shiftv));
  }
  std::vector<std::size_t> part[2];
  for (std::size_t i = 0; i < n; ++i)
    part[static_cast<std::size_t>(a[i].valuation())].push_back(i);

  // A pair inside one parity class with -a_i/a_j square gives a direct root.
  for (const auto& cls : part)
    for (std::size_t x = 0; x < cls.size(); ++x)
      for (std::size_t y = x + 1; y < cls.size(); ++y) {
        std::size_t i = cls[x], j = cls[y];
        Scalar ratio = -(a[i] / a[j]);
        if (!padic::is_square(ratio)) continue;
        Scalar srt = padic::sqrt(ratio);
        Vector vec = t[i] + t[j].scaled(srt);
        return vec;
      }

  // A class with >= 3 members always has a nontrivial zero mod p; lift it.
  for (const auto& cls : part) {
    if (cls.size() < 3) continue;
    std::size_t i1 = cls[0], i2 = cls[1], i3 = cls[2];
    long alpha = a[i1].valuation();
    std::int64_t u1 = static_cast<std::int64_t>(a[i1].shift(-alpha).unit_mod(1));
    std::int64_t u2 = static_cast<std::int64_t>(a[i2].shift(-alpha).unit_mod(1));
    std::int64_t u3 = static_cast<std::int64_t>(a[i3].shift(-alpha).unit_mod(1));
    for (std::int64_t c2 = 0; c2 < p; ++c2)
      for (std::int64_t c3 = 0; c3 < p; ++c3) {
        if (c2 == 0 && c3 == 0) continue;
        std::int64_t val = (u1 + u2 * c2 * c2 + u3 * c3 * c3) % p;
        if (val % p != 0) continue;
        // x0 = t1 + c2 t2 + c3 t3; Hensel along the first coordinate.
        Vector x0 = t[i1] + t[i2].scaled(Scalar::from_integer(c2, ctx)) +
                    t[i3].scaled(Scalar::from_integer(c3, ctx));
        Scalar q0 = s.eval_q(x0);
        Scalar b1 = s.eval_b(x0, t[i1]);
        Scalar cc = a[i1];
        Scalar tau = hensel_root_quadratic(q0, b1, cc, Scalar::zero(ctx));
        return x0 + t[i1].scaled(tau);
      }
    // First coordinate might be forced zero mod p; sweep (0,1,c).
    for (std::int64_t c3 = 0; c3 < p; ++c3) {
      std::int64_t val = (u2 + u3 * c3 * c3) % p;
      if (val % p != 0) continue;
      Vector x0 = t[i2] + t[i3].scaled(Scalar::from_integer(c3, ctx));
      Scalar q0 = s.eval_q(x0);
      Scalar b1 = s.eval_b(x0, t[i2]);
      Scalar tau = hensel_root_quadratic(q0, b1, a[i2], Scalar::zero(ctx));
      return x0 + t[i2].scaled(tau);
    }
  }
  throw SearchExhausted("isotropic space yielded no constructive witness");
}

}  // namespace

IsotropicSearch find_isotropic(const BilinearSpace& s) {
  IsotropicSearch out;
  const CtxPtr& ctx = s.ctx();
  if (s.kind() == FormKind::Alternating) {
    if (s.dim() == 0) {
      out.certificate = AnisotropicCertificate{"zero-dimensional space", {}};
      return out;
    }
    out.vec = Vector::unit(s.dim(), 0, ctx);
    return out;
  }
  if (s.dim() == 0) {
    out.certificate = AnisotropicCertificate{"zero-dimensional space", {}};
    return out;
  }
  Diagonalization d = diagonalize(s);
  AnisotropicCertificate cert;
  if (s.dim() <= 4 && anisotropic_by_invariants(s, d.q_values, &cert)) {
    out.certificate = std::move(cert);
    return out;
  }
  Vector x = construct_isotropic(s, d);
  x = x.shifted(-x.min_valuation());  // primitive: some unit coordinate
  Scalar q = s.eval_q(x);
  if (!q.is_exact_zero() && q.val_lower_bound() < zero_floor(ctx))
    throw PrecisionExhausted("constructed isotropic vector is not exact");
  return IsotropicSearch{std::move(x), std::nullopt};
}

// --- Witt decomposition -------------------------------------------------------------

WittDecomposition witt_decompose(const BilinearSpace& s) {
  const CtxPtr& ctx = s.ctx();
  WittDecomposition out;
  Matrix work = Matrix::identity(s.dim(), ctx);
  while (work.rows() > 0) {
    BilinearSpace sub = s.restricted(work);
    IsotropicSearch found = find_isotropic(sub);
    if (!found.found()) break;
    Vector e = linalg::mul_row(*found.vec, work);
    // Partner with unit pairing: minimal-valuation pairing among the rows.
    std::optional<std::size_t> best;
    long best_val = Scalar::kInfVal;
    for (std::size_t i = 0; i < work.rows(); ++i) {
      Scalar c = s.eval_b(e, work.row(i));
      if (c.is_zeroish()) continue;
      if (c.valuation() < best_val) {
        best_val = c.valuation();
        best = i;
      }
    }
    if (!best) throw PrecisionExhausted("isotropic vector pairs with nothing certified");
    Vector y = work.row(*best).scaled(s.eval_b(e, work.row(*best)).inverse());
    Vector f = s.kind() == FormKind::Quadratic ? y - e.scaled(s.eval_q(y)) : y;
    // Project the working basis onto the orthogonal complement of (e,f).
    std::vector<Vector> next;
    for (std::size_t i = 0; i < work.rows(); ++i) {
      Vector w = work.row(i);
      Scalar be = s.eval_b(w, e);
      Scalar bf = s.eval_b(w, f);
      Vector w2 = s.kind() == FormKind::Quadratic ? w - e.scaled(bf) - f.scaled(be)
                                                  : w - e.scaled(bf) + f.scaled(be);
      next.push_back(std::move(w2));
    }
    linalg::Echelon ech = linalg::hermite_echelon(Matrix::from_rows(next));
    if (ech.basis.rows() != work.rows() - 2)
      throw PrecisionExhausted("hyperbolic split did not reduce dimension by 2");
    work = ech.basis;
    out.pairs.emplace_back(std::move(e), std::move(f));
  }
  out.kernel_basis = work.row_list();
  return out;
}

std::size_t witt_index(const BilinearSpace& s) { return witt_decompose(s).witt_index(); }

}  // namespace hyperbasis::space
