#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperbasis/lattice.hpp"

namespace hyperbasis::chains {

using lattice::Lattice;
using lattice::SpacePtr;
using linalg::Matrix;
using linalg::Vector;
using padic::CtxPtr;
using padic::Scalar;
using space::BilinearSpace;
using space::FormKind;

/// Deterministic, platform-independent PRNG (splitmix64) so seeded runs
/// reproduce byte-for-byte everywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  /// Uniform-ish integer in [lo, hi].
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

/// The descending chain Lambda^(0) > ... > Lambda^(n): all members on the
/// same space at scale 0, spanning a common subspace.
class LatticeChain {
 public:
  explicit LatticeChain(std::vector<Lattice> members);

  std::size_t length() const { return members_.size(); }
  std::size_t steps() const { return members_.size() - 1; }
  const Lattice& member(std::size_t j) const { return members_[j]; }
  const Lattice& max_member() const { return members_.front(); }
  const Lattice& min_member() const { return members_.back(); }
  const SpacePtr& space() const { return members_.front().space(); }
  const std::vector<Lattice>& members() const { return members_; }

 private:
  std::vector<Lattice> members_;
};

struct ValidationReport {
  struct Check {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::vector<Check> checks;
  bool valid() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  std::string first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return c.name + (c.detail.empty() ? "" : ": " + c.detail);
    return "";
  }
};

/// Checks every chain invariant: 0-maximal head, strict index-p descent,
/// APTE members with exactly j p-modular planes at step j, matching length,
/// and p * max inside min.
ValidationReport validate_chain(const LatticeChain& c);

/// The chain with member j = span(e_i, i<=j scaled by p on the f side) as
/// read off a Witt decomposition, with the unique maximal lattice on the
/// anisotropic kernel.
LatticeChain standard_chain(const space::WittDecomposition& w, const SpacePtr& s);

bool is_isometry(const BilinearSpace& s, const Matrix& g);

/// Applies the isometry g (row action x -> x*g) to every member.
LatticeChain transform_chain(const LatticeChain& c, const Matrix& g);

/// Seeded product of `steps` elementary isometries: transvections or
/// reflections, Eichler transformations, hyperbolic pair scalings and
/// swaps.  The result is certified before being returned.
Matrix random_isometry(const SpacePtr& s, std::uint64_t seed, int steps);

}  // namespace hyperbasis::chains
