#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "holonomy/numerics.hpp"

namespace holonomy {

/// A k-dimensional subspace of C^N, stored as an N x k orthonormal
/// basis. A degenerate projective measurement outcome is identified
/// with its +1 eigenspace, i.e. with one of these.
class Subspace {
 public:
  /// Takes a matrix whose columns are already orthonormal (checked).
  explicit Subspace(ComplexMatrix basis, const TolerancePolicy& policy = {});

  /// Orthonormalizes arbitrary spanning vectors first.
  static Subspace from_vectors(std::span<const StateVector> vectors,
                               const TolerancePolicy& policy = {});
  static Subspace from_vectors(std::initializer_list<StateVector> vectors,
                               const TolerancePolicy& policy = {});

  /// span{e_0, ..., e_{k-1}} inside C^ambient.
  static Subspace standard(std::size_t ambient, std::size_t k);

  std::size_t ambient_dim() const { return basis_.rows(); }
  std::size_t rank() const { return basis_.cols(); }
  const ComplexMatrix& basis() const { return basis_; }

  /// True when the state has no weight outside the subspace beyond tol.
  bool contains(const StateVector& state, double tol = 1e-10) const;

 private:
  ComplexMatrix basis_;
};

/// P = basis * basis^dagger.
ComplexMatrix projector_matrix(const Subspace& s);

/// Orthogonal complement; throws FullSpace when rank = ambient_dim.
Subspace complement(const Subspace& s, const TolerancePolicy& policy = {});

/// True when the two subspaces have equal projectors within tol.
bool same_span(const Subspace& a, const Subspace& b, double tol = 1e-10);

/// Principal angles in ascending order, length min(rank0, rank1);
/// theta_j = arccos of the singular values of basis0^dagger basis1.
std::vector<double> principal_angles(const Subspace& s0, const Subspace& s1);

/// Diagnostics for whether projecting source onto target acts as a
/// scaled isometry (flat overlap spectrum, no shared and no orthogonal
/// directions).
struct IsometryReport {
  bool is_isometry = false;
  double scale = 0.0;                   ///< common singular value (mean when not flat)
  std::vector<double> principal_angles; ///< ascending
  std::size_t shared_dim = 0;           ///< number of zero angles
  std::size_t required_min_ambient = 0; ///< 2k necessity bound
  bool trivial_identity = false;        ///< source and target coincide
  std::string reason;                   ///< empty when is_isometry
};

IsometryReport isometry_report(const Subspace& source, const Subspace& target,
                               const TolerancePolicy& policy = {});

}  // namespace holonomy
