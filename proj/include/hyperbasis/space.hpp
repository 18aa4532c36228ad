#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hyperbasis/linalg.hpp"

namespace hyperbasis::space {

using linalg::Matrix;
using linalg::Vector;
using padic::CtxPtr;
using padic::Scalar;

enum class FormKind { Quadratic, Alternating };

/// The ambient space (V, b, Q).  Quadratic kind requires odd p and carries
/// Q(x) = b(x,x)/2; alternating kind has Q identically zero and works at any
/// p.  The Gram matrix is that of b in the standard coordinate basis and
/// must be non-degenerate.
class BilinearSpace {
 public:
  BilinearSpace(FormKind kind, Matrix gram);

  FormKind kind() const { return kind_; }
  std::size_t dim() const { return gram_.rows(); }
  const Matrix& gram() const { return gram_; }
  const CtxPtr& ctx() const { return gram_.ctx(); }

  Scalar eval_b(const Vector& x, const Vector& y) const;
  Scalar eval_q(const Vector& x) const;

  /// The space spanned by the given rows, with the restricted form.
  BilinearSpace restricted(const Matrix& rows) const;

 private:
  FormKind kind_;
  Matrix gram_;
};

/// Why a space has no isotropic vector: the deciding invariant plus the
/// numeric data it used.
struct AnisotropicCertificate {
  std::string reason;
  std::vector<std::pair<std::string, long>> data;
};

struct IsotropicSearch {
  std::optional<Vector> vec;
  std::optional<AnisotropicCertificate> certificate;
  bool found() const { return vec.has_value(); }
};

/// Orthogonal basis of a quadratic space: rows of `basis` are pairwise
/// b-orthogonal and `q_values[i]` = Q(basis.row(i)).
struct Diagonalization {
  Matrix basis;
  std::vector<Scalar> q_values;
};

Diagonalization diagonalize(const BilinearSpace& s);

/// Decided by invariants for dim <= 4 (discriminant and Hilbert symbols),
/// automatically false for dim >= 5; alternating spaces are anisotropic only
/// in dimension 0.
bool is_anisotropic(const BilinearSpace& s);

/// Either an exactly isotropic vector (primitive, representative-exact
/// Q(x) = 0) or an anisotropy certificate.
IsotropicSearch find_isotropic(const BilinearSpace& s);

struct WittDecomposition {
  std::vector<std::pair<Vector, Vector>> pairs;  // (e_i, f_i), b(e_i,f_i)=1
  std::vector<Vector> kernel_basis;              // anisotropic complement
  std::size_t witt_index() const { return pairs.size(); }
};

WittDecomposition witt_decompose(const BilinearSpace& s);

std::size_t witt_index(const BilinearSpace& s);

/// Finds an exact root of q0 + b1*t + c2*t^2 starting from a simple
/// approximate root t0 (Newton; val f(t0) > 2 val f'(t0) required).
Scalar hensel_root_quadratic(const Scalar& q0, const Scalar& b1, const Scalar& c2,
                             const Scalar& t0);

}  // namespace hyperbasis::space
