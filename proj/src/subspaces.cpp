#include "holonomy/subspaces.hpp"

#include <algorithm>
#include <cmath>

namespace holonomy {

Subspace::Subspace(ComplexMatrix basis, const TolerancePolicy& policy)
    : basis_(std::move(basis)) {
  policy.validate();
  if (basis_.cols() > basis_.rows()) {
    throw DimensionMismatch("subspace rank cannot exceed ambient dimension");
  }
  const ComplexMatrix gram = basis_.adjoint() * basis_;
  if (max_abs_diff(gram, ComplexMatrix::identity(basis_.cols())) > policy.tol_ortho) {
    throw Error("subspace basis columns are not orthonormal");
  }
}

Subspace Subspace::from_vectors(std::span<const StateVector> vectors,
                                const TolerancePolicy& policy) {
  return Subspace(orthonormalize(vectors, policy), policy);
}

Subspace Subspace::from_vectors(std::initializer_list<StateVector> vectors,
                                const TolerancePolicy& policy) {
  return from_vectors(std::span<const StateVector>(vectors.begin(), vectors.size()), policy);
}

Subspace Subspace::standard(std::size_t ambient, std::size_t k) {
  if (k == 0 || k > ambient) throw DimensionMismatch("rank must lie in 1..ambient");
  ComplexMatrix b(ambient, k);
  for (std::size_t j = 0; j < k; ++j) b(j, j) = 1.0;
  return Subspace(std::move(b));
}

bool Subspace::contains(const StateVector& state, double tol) const {
  if (state.dim() != ambient_dim()) throw DimensionMismatch("state/subspace dimension mismatch");
  // Residual (I - P)|psi> computed without forming P.
  std::vector<Complex> coeffs(rank(), Complex{0.0, 0.0});
  for (std::size_t j = 0; j < rank(); ++j)
    for (std::size_t i = 0; i < ambient_dim(); ++i)
      coeffs[j] += std::conj(basis_(i, j)) * state[i];
  double residual = 0.0;
  for (std::size_t i = 0; i < ambient_dim(); ++i) {
    Complex r = state[i];
    for (std::size_t j = 0; j < rank(); ++j) r -= basis_(i, j) * coeffs[j];
    residual += std::norm(r);
  }
  return std::sqrt(residual) <= tol * std::max(1.0, state.norm());
}

ComplexMatrix projector_matrix(const Subspace& s) { return s.basis() * s.basis().adjoint(); }

Subspace complement(const Subspace& s, const TolerancePolicy& policy) {
  const std::size_t n = s.ambient_dim();
  const std::size_t k = s.rank();
  if (k == n) throw FullSpace("the full space has no orthogonal complement");
  // Null space of P = I - P's range; take the singular directions of
  // the basis padded against the standard basis.
  ComplexMatrix p = projector_matrix(s);
  ComplexMatrix q = ComplexMatrix::identity(n) - p;
  SvdResult r = svd(q);
  ComplexMatrix b(n, n - k);
  for (std::size_t j = 0; j < n - k; ++j) b.set_column(j, r.left.column(j));
  return Subspace(std::move(b), policy);
}

bool same_span(const Subspace& a, const Subspace& b, double tol) {
  if (a.ambient_dim() != b.ambient_dim()) return false;
  if (a.rank() != b.rank()) return false;
  return max_abs_diff(projector_matrix(a), projector_matrix(b)) <= tol;
}

std::vector<double> principal_angles(const Subspace& s0, const Subspace& s1) {
  if (s0.ambient_dim() != s1.ambient_dim()) {
    throw DimensionMismatch("principal angles require a shared ambient space");
  }
  SvdResult r = svd(s0.basis().adjoint() * s1.basis());
  std::vector<double> angles;
  angles.reserve(r.singular_values.size());
  // Singular values descend, so angles come out ascending.
  for (double sv : r.singular_values) angles.push_back(std::acos(std::clamp(sv, 0.0, 1.0)));
  return angles;
}

IsometryReport isometry_report(const Subspace& source, const Subspace& target,
                               const TolerancePolicy& policy) {
  policy.validate();
  if (source.ambient_dim() != target.ambient_dim()) {
    throw DimensionMismatch("isometry report requires a shared ambient space");
  }

  IsometryReport report;
  report.required_min_ambient = 2 * source.rank();

  SvdResult overlap = svd(target.basis().adjoint() * source.basis());
  std::vector<double> sv = overlap.singular_values;
  for (double& v : sv) v = std::clamp(v, 0.0, 1.0);

  report.principal_angles.reserve(sv.size());
  for (double v : sv) report.principal_angles.push_back(std::acos(v));

  double total = 0.0;
  for (double v : sv) {
    if (v >= 1.0 - policy.tol_flat) ++report.shared_dim;
    total += v;
  }
  report.scale = total / static_cast<double>(sv.size());

  const double spread = sv.front() - sv.back();
  const bool flat = spread <= policy.tol_flat;
  const bool has_orthogonal = sv.back() <= policy.tol_flat;
  report.trivial_identity =
      source.rank() == target.rank() && report.shared_dim == source.rank();

  if (source.rank() != target.rank()) {
    report.reason = "rank mismatch";
  } else if (source.ambient_dim() < report.required_min_ambient) {
    report.reason = "ambient < 2k";
  } else if (report.trivial_identity) {
    report.reason = "trivial identity projection";
  } else if (report.shared_dim > 0) {
    report.reason = "shared directions (zero principal angle)";
  } else if (has_orthogonal) {
    report.reason = "orthogonal directions (principal angle pi/2)";
  } else if (!flat) {
    report.reason = "unequal principal angles";
  } else {
    report.is_isometry = true;
  }
  return report;
}

}  // namespace holonomy
