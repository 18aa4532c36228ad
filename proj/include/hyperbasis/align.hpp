#pragma once

#include <array>
#include <string>
#include <vector>

#include "hyperbasis/chains.hpp"

namespace hyperbasis::align {

using chains::LatticeChain;
using lattice::Lattice;
using lattice::SpacePtr;
using linalg::Matrix;
using linalg::Vector;
using padic::CtxPtr;
using padic::Scalar;

/// Hyperbolic pairs plus an anisotropic kernel: b(e_i,f_j) = delta_ij, all
/// e, f isotropic, kernel orthogonal to every pair.
struct HyperbolicBasis {
  std::vector<Vector> e;
  std::vector<Vector> f;
  Matrix kernel_basis;
  std::size_t witt_index() const { return e.size(); }
};

/// Basis adapted to a maximal totally isotropic submodule X: the e_i span
/// X, the f_i span a totally isotropic complement partner, and
/// b(e_i, f_j) = p^{pairing_i} delta_ij with pairing in {0, 1}.
struct AdaptedBasis {
  std::vector<Vector> e;
  std::vector<Vector> f;
  std::vector<long> pairing;
  Matrix kernel_basis;
};

/// Common basis for two chains plus the exponent tables of the member
/// reconstructions: member j of chain nu is the span of p^{r[nu][j][i]} e_i
/// and p^{s[nu][j][i]} f_i plus the kernel.
struct ChainAlignment {
  HyperbolicBasis basis;
  // Indexed [nu][member j][pair i], nu in {0, 1}.
  std::array<std::vector<std::vector<long>>, 2> r;
  std::array<std::vector<std::vector<long>>, 2> s;
  std::vector<std::string> trace;
};

/// The maximal totally isotropic sublattice spanned by the e-vectors of the
/// APTE decomposition.
Lattice max_isotropic(const Lattice& l);

AdaptedBasis adapt_to_isotropic(const Lattice& l, const Lattice& x);

/// An isometry of (L, b, Q) carrying X1 onto X2 (row action), certified
/// before being returned.
Matrix isometry_between(const Lattice& l, const Lattice& x1, const Lattice& x2);

ChainAlignment common_basis(const LatticeChain& c1, const LatticeChain& c2);

/// Exactly isotropic primitive vectors of an APTE lattice: the block
/// generators plus Hensel-corrected two-generator combinations.  The finite
/// candidate pool used by common_basis.
std::vector<Vector> isotropic_candidates(const Lattice& l, bool deep);

}  // namespace hyperbasis::align
