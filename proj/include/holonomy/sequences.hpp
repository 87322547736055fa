#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "holonomy/subspaces.hpp"

namespace holonomy {

/// Ordered list of measurement subspaces; the cumulative operator is
/// the temporal product of their projectors.
class ProjectionSequence {
 public:
  explicit ProjectionSequence(std::vector<Subspace> steps, const TolerancePolicy& policy = {});

  std::size_t ambient_dim() const { return steps_.front().ambient_dim(); }
  const std::vector<Subspace>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }
  bool cyclic() const { return cyclic_; }

 private:
  std::vector<Subspace> steps_;
  bool cyclic_;
};

/// Parameters of a single-phase projection loop: logical dimension k
/// plus one auxiliary level, phase phi written onto component m
/// (1-based), each of the four great-circle arcs subdivided into
/// `refinement` equal geodesic steps.
struct PhaseLoopSpec {
  std::size_t k = 1;
  std::size_t m = 1;
  double phi = 0.0;
  std::size_t refinement = 1;
};

/// Diagonal Kraus filter on the logical components; entries have
/// magnitude in (0, 1].
struct FilterOperator {
  std::vector<Complex> diagonal;
};

using BlochVector = std::array<double, 3>;

/// Measure the state against the subspace projector: returns the
/// renormalized conditional state and the outcome probability.
/// Throws OrthogonalOutcome when the probability is below tol_norm^2.
std::pair<StateVector, double> apply_projection(const StateVector& state, const Subspace& s,
                                                const TolerancePolicy& policy = {});

/// Temporal product of the sequence's projectors (last step leftmost).
ComplexMatrix cumulative_operator(const ProjectionSequence& seq);

/// <psi| Gamma^dagger Gamma |psi> = squared norm of the conditioned,
/// unnormalized final state.
double survival_probability(const ComplexMatrix& gamma, const StateVector& state);

/// The loop states |psi_m^l>, l = 0..4n, first = last = |psi_m>, in
/// dimension k+1. The return arcs carry e^{-i phi} on the auxiliary
/// component so that the cyclic overlap product has argument +phi.
std::vector<StateVector> phase_loop_states(const PhaseLoopSpec& spec);

/// Cyclic projection sequence for a PhaseLoopSpec: step l projects onto
/// the k-dimensional span of the fixed components plus |psi_m^l>.
ProjectionSequence build_phase_loop(const PhaseLoopSpec& spec);

/// Closed form for the loop amplitude magnitude cos(pi/(4n))^{4n},
/// evaluated via the half-angle form ((1 + cos(pi/(2n)))/2)^{2n} so
/// that refinement 1 yields exactly 0.25.
double phase_loop_scale(std::size_t refinement);

/// Cyclically ordered product of overlaps <psi^{l+1}|psi^l> around the
/// loop (first state = last state); equals the trace of the temporal
/// projector product and is invariant under regauging intermediates.
Complex bargmann_invariant(std::span<const StateVector> loop, const TolerancePolicy& policy = {});

/// Signed solid angle of a closed geodesic polygon on the unit sphere,
/// positive for counterclockwise traversal viewed from outside.
/// Accepts the closing vertex repeated or omitted.
double solid_angle(std::span<const BlochVector> loop);

/// Bloch vector of a two-level state (a, b):
/// (2 Re(conj(a) b), -2 Im(conj(a) b), |a|^2 - |b|^2).
/// This pairing makes arg(bargmann_invariant) = solid_angle / 2.
BlochVector bloch_from_state(const StateVector& state);

/// Inverse of bloch_from_state (up to global phase):
/// (cos(theta/2), e^{-i phi} sin(theta/2)).
StateVector state_from_bloch(const BlochVector& r);

/// Diagonal filter d_m = min|t| / |t_m| equalizing all magnitudes to
/// the smallest one.
FilterOperator equalization_filter(std::span<const Complex> t_values);

/// Applies the filter to the leading diagonal block of gamma (rows
/// beyond the filter length, e.g. the auxiliary level, pass through).
ComplexMatrix apply_filter(const FilterOperator& filter, const ComplexMatrix& gamma);

/// Runs one phase loop per logical component (phases may be zero) and
/// returns the composite cumulative operator together with the common
/// closed-form magnitude; gamma restricted to the logical block equals
/// scale * diag(e^{i phi_m}).
std::pair<ComplexMatrix, double> compose_diag_unitary(std::span<const double> phases,
                                                      std::size_t refinement);

}  // namespace holonomy
