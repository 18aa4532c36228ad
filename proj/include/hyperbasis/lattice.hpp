#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "hyperbasis/space.hpp"

namespace hyperbasis::lattice {

using linalg::Echelon;
using linalg::Matrix;
using linalg::Vector;
using padic::CtxPtr;
using padic::Scalar;
using space::BilinearSpace;
using space::FormKind;

using SpacePtr = std::shared_ptr<const BilinearSpace>;

/// A finitely generated Z_p-module on (a subspace of) V, stored as the
/// canonical Hermite basis of its row span.  `scale_exponent` means the
/// forms in force are b * p^t and Q * p^t; user-level lattices have t = 0
/// and only the modified dual changes it.
class Lattice {
 public:
  Lattice(SpacePtr space, const Matrix& basis_rows, long scale_exponent = 0);
  static Lattice standard(SpacePtr space);
  static Lattice from_rows(SpacePtr space, const std::vector<Vector>& rows,
                           long scale_exponent = 0);

  const SpacePtr& space() const { return space_; }
  const Matrix& basis() const { return ech_.basis; }
  const Echelon& echelon() const { return ech_; }
  long scale_exponent() const { return scale_; }
  std::size_t rank() const { return ech_.basis.rows(); }
  std::size_t dim() const { return space_->dim(); }
  bool full_rank() const { return rank() == dim(); }
  const CtxPtr& ctx() const { return space_->ctx(); }

  /// Scaled form values b_t = p^t b, Q_t = p^t Q.
  Scalar b(const Vector& x, const Vector& y) const;
  Scalar q(const Vector& x) const;
  /// Gram matrix of the basis under the scaled form.
  Matrix gram() const;

  Lattice with_scale(long t) const;

 private:
  SpacePtr space_;
  Echelon ech_;
  long scale_;
};

bool spaces_compatible(const BilinearSpace& a, const BilinearSpace& b);

// --- membership and comparisons (same space, same scale) ---------------------

bool member(const Vector& v, const Lattice& l);
bool includes(const Lattice& outer, const Lattice& inner);
bool lattice_equal(const Lattice& a, const Lattice& b);
/// Span comparison that ignores the scale exponent (used where the paper
/// identifies (p^-1 L, p^2 Q) with (L, Q)).
bool equal_span(const Lattice& a, const Lattice& b);

Lattice scaled_lattice(const Lattice& l, long k);  // p^k L, same scale exponent
Lattice sum(const Lattice& a, const Lattice& b);
Lattice intersect(const Lattice& a, const Lattice& b);

/// Smallest k >= 0 with p^k * inner_scaled... precisely: minimal k >= 0 such
/// that p^k A is contained in B.  Throws InvalidInput when no such k exists
/// (different spans).
long containment_exponent(const Lattice& a, const Lattice& b);

// --- duals --------------------------------------------------------------------

Lattice dual(const Lattice& l);
bool double_dual_check(const Lattice& l);

/// The modified dual: {x in L# : p Q_t(x) in R} carrying the forms scaled by
/// one more power of p (scale_exponent t+1).  Requires an APTE lattice.
Lattice modified_dual(const Lattice& l);

// --- predicates ------------------------------------------------------------------

struct PredicateRecord {
  bool integral = false;
  bool even = false;
  bool totally_even = false;
  bool p_elementary = false;
};

PredicateRecord predicates(const Lattice& l);
bool pr_modular(const Lattice& l, long r);
bool pr_maximal(const Lattice& l, long r);

/// A p^r-maximal lattice on the whole space (greedy overlattice saturation;
/// unique when the space is anisotropic).
Lattice maximal_lattice(const SpacePtr& s, long r);
/// Same, on the subspace spanned by the given rows, under scale t.
Lattice maximal_lattice_on_span(const SpacePtr& s, const Matrix& span_rows, long scale, long r);

// --- APTE structure -----------------------------------------------------------------

struct APTEDecomposition {
  std::vector<std::pair<Vector, Vector>> unimodular_pairs;  // b_t(e,f) = 1
  std::vector<std::pair<Vector, Vector>> p_modular_pairs;   // b_t(e,f) = p
  Matrix an_basis;                                          // rows, may be empty
  Matrix witness;                                           // unimodular change of basis
  std::size_t pair_count() const {
    return unimodular_pairs.size() + p_modular_pairs.size();
  }
};

APTEDecomposition apte_decompose(const Lattice& l);

/// Splits off the hyperbolic plane Re+Rf (b(e,f) a unit or p times a unit,
/// normalized internally) and returns (plane, orthogonal complement).
std::pair<Lattice, Lattice> split_hyperbolic(const Lattice& l, const Vector& e, const Vector& f);

/// The sublattice generated by all isotropic vectors of an APTE lattice.
Lattice isotropic_sublattice(const Lattice& l);

/// Checks {z in p*S# : Q(z) in R} is contained in L, where S is the
/// sublattice generated by the vectors of L with Q-valuation >= 1.
/// A structural test hook; expected true on every APTE lattice.
bool even_sublattice_dual_bound(const Lattice& l);

/// One extracted hyperbolic pair: exactly isotropic e, f in L with
/// b_t(e, f) = p^modularity (modularity 0 or 1) whose plane splits L.
struct HyperbolicPair {
  Vector e;
  Vector f;
  long modularity = 0;
};

/// Finds a unimodular hyperbolic pair in L, or nullopt when the residue
/// form certifies none exists.
std::optional<HyperbolicPair> find_unimodular_pair(const Lattice& l);

}  // namespace hyperbasis::lattice
