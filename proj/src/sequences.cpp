#include "holonomy/sequences.hpp"

#include <algorithm>
#include <cmath>

namespace holonomy {

namespace {

constexpr double kPi = 3.14159265358979323846;

double dot3(const BlochVector& a, const BlochVector& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

BlochVector cross3(const BlochVector& a, const BlochVector& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm3(const BlochVector& a) { return std::sqrt(dot3(a, a)); }

BlochVector normalized3(const BlochVector& a) {
  const double n = norm3(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

// Van Oosterom-Strackee solid angle of the spherical triangle (a,b,c),
// positive when the vertices run counterclockwise seen from outside.
double triangle_solid_angle(const BlochVector& a, const BlochVector& b, const BlochVector& c) {
  const double det = dot3(a, cross3(b, c));
  const double denom = 1.0 + dot3(a, b) + dot3(b, c) + dot3(c, a);
  return 2.0 * std::atan2(det, denom);
}

bool triangle_well_posed(const BlochVector& a, const BlochVector& b, const BlochVector& c) {
  const double det = dot3(a, cross3(b, c));
  const double denom = 1.0 + dot3(a, b) + dot3(b, c) + dot3(c, a);
  return std::abs(det) > 1e-12 || denom > 1e-12;
}

}  // namespace

ProjectionSequence::ProjectionSequence(std::vector<Subspace> steps, const TolerancePolicy& policy)
    : steps_(std::move(steps)), cyclic_(false) {
  policy.validate();
  if (steps_.empty()) throw Error("projection sequence must contain at least one step");
  const std::size_t n = steps_.front().ambient_dim();
  for (const Subspace& s : steps_) {
    if (s.ambient_dim() != n) {
      throw DimensionMismatch("all sequence steps must share one ambient dimension");
    }
  }
  cyclic_ = steps_.size() > 1 && same_span(steps_.front(), steps_.back(), policy.tol_ortho);
}

std::pair<StateVector, double> apply_projection(const StateVector& state, const Subspace& s,
                                                const TolerancePolicy& policy) {
  policy.validate();
  if (state.dim() != s.ambient_dim()) {
    throw DimensionMismatch("state and subspace dimensions differ");
  }
  if (!state.is_normalized(policy.tol_norm)) {
    throw Error("apply_projection expects a normalized state");
  }
  const ComplexMatrix& b = s.basis();
  std::vector<Complex> coeffs(s.rank(), Complex{0.0, 0.0});
  for (std::size_t j = 0; j < s.rank(); ++j)
    for (std::size_t i = 0; i < state.dim(); ++i) coeffs[j] += std::conj(b(i, j)) * state[i];
  double probability = 0.0;
  for (const Complex& c : coeffs) probability += std::norm(c);
  if (probability < policy.tol_norm * policy.tol_norm) {
    throw OrthogonalOutcome("state is orthogonal to the measured subspace");
  }
  const double inv = 1.0 / std::sqrt(probability);
  std::vector<Complex> amps(state.dim(), Complex{0.0, 0.0});
  for (std::size_t i = 0; i < state.dim(); ++i)
    for (std::size_t j = 0; j < s.rank(); ++j) amps[i] += b(i, j) * coeffs[j] * inv;
  return {StateVector(std::move(amps)), std::min(probability, 1.0)};
}

ComplexMatrix cumulative_operator(const ProjectionSequence& seq) {
  ComplexMatrix gamma = projector_matrix(seq.steps().front());
  for (std::size_t l = 1; l < seq.size(); ++l) {
    gamma = projector_matrix(seq.steps()[l]) * gamma;
  }
  return gamma;
}

double survival_probability(const ComplexMatrix& gamma, const StateVector& state) {
  if (gamma.cols() != state.dim()) throw DimensionMismatch("operator/state dimension mismatch");
  const StateVector conditioned = gamma * state;
  return conditioned.norm() * conditioned.norm();
}

std::vector<StateVector> phase_loop_states(const PhaseLoopSpec& spec) {
  if (spec.k < 1) throw BadIndex("phase loop requires k >= 1");
  if (spec.m < 1 || spec.m > spec.k) throw BadIndex("phase loop component m must lie in 1..k");
  if (spec.refinement < 1) throw BadIndex("refinement must be >= 1");

  const std::size_t dim = spec.k + 1;
  const std::size_t mu = spec.m - 1;  // logical component carrying the phase
  const std::size_t aux = spec.k;     // auxiliary level
  const std::size_t n = spec.refinement;
  const Complex ret_phase = std::polar(1.0, -spec.phi);

  // Polar angle runs 0 -> pi along the prime meridian, then back
  // pi -> 0 along the meridian at longitude phi. In amplitudes:
  // cos(theta/2)|psi_m> + e^{-i phi}a sin(theta/2)|psi_a>.
  auto loop_state = [&](double theta, bool return_arc) {
    std::vector<Complex> amps(dim, Complex{0.0, 0.0});
    amps[mu] = std::cos(theta / 2.0);
    amps[aux] = (return_arc ? ret_phase : Complex{1.0, 0.0}) * std::sin(theta / 2.0);
    return StateVector(std::move(amps));
  };

  std::vector<StateVector> states;
  states.reserve(4 * n + 1);
  for (std::size_t l = 0; l <= 2 * n; ++l) {
    states.push_back(loop_state(kPi * static_cast<double>(l) / (2.0 * n), false));
  }
  for (std::size_t l = 1; l <= 2 * n; ++l) {
    states.push_back(loop_state(kPi * (1.0 - static_cast<double>(l) / (2.0 * n)), true));
  }
  return states;
}

ProjectionSequence build_phase_loop(const PhaseLoopSpec& spec) {
  const std::vector<StateVector> states = phase_loop_states(spec);
  const std::size_t dim = spec.k + 1;
  const std::size_t mu = spec.m - 1;

  std::vector<Subspace> steps;
  steps.reserve(states.size());
  for (const StateVector& psi : states) {
    ComplexMatrix basis(dim, spec.k);
    std::size_t col = 0;
    for (std::size_t j = 0; j < spec.k; ++j) {
      if (j == mu) {
        for (std::size_t i = 0; i < dim; ++i) basis(i, col) = psi[i];
      } else {
        basis(j, col) = 1.0;
      }
      ++col;
    }
    steps.emplace_back(std::move(basis));
  }
  return ProjectionSequence(std::move(steps));
}

double phase_loop_scale(std::size_t refinement) {
  if (refinement < 1) throw BadIndex("refinement must be >= 1");
  const double n = static_cast<double>(refinement);
  const double half = (1.0 + std::cos(kPi / (2.0 * n))) / 2.0;  // cos^2(pi/(4n))
  return std::pow(half, 2.0 * n);
}

Complex bargmann_invariant(std::span<const StateVector> loop, const TolerancePolicy& policy) {
  policy.validate();
  if (loop.size() < 3) throw DegenerateLoop("a loop needs at least three states");
  const std::size_t dim = loop.front().dim();
  for (const StateVector& s : loop) {
    if (s.dim() != dim) throw DimensionMismatch("loop states differ in dimension");
    if (!s.is_normalized(policy.tol_norm)) throw Error("loop states must be normalized");
  }
  Complex product{1.0, 0.0};
  // Closing factor <psi^0|psi^N> included; it is 1 when the loop is
  // closed exactly, and validates closure otherwise.
  for (std::size_t l = 0; l + 1 < loop.size(); ++l) {
    const Complex overlap = inner_product(loop[l + 1], loop[l]);
    if (std::abs(overlap) <= policy.tol_norm) {
      throw DegenerateLoop("consecutive loop states are orthogonal");
    }
    product *= overlap;
  }
  const Complex closing = inner_product(loop.front(), loop.back());
  if (std::abs(std::abs(closing) - 1.0) > 1e-6) {
    throw DegenerateLoop("loop is not closed (first state != last state)");
  }
  return product * closing;
}

double solid_angle(std::span<const BlochVector> loop) {
  if (loop.size() < 2) throw DegeneratePolygon("polygon needs at least two vertices");
  std::vector<BlochVector> verts;
  verts.reserve(loop.size());
  for (const BlochVector& v : loop) {
    const double n = norm3(v);
    if (std::abs(n - 1.0) > 1e-6) throw DegeneratePolygon("vertices must lie on the unit sphere");
    verts.push_back(normalized3(v));
  }
  // Drop an explicit closing vertex.
  if (norm3({verts.front()[0] - verts.back()[0], verts.front()[1] - verts.back()[1],
             verts.front()[2] - verts.back()[2]}) < 1e-9) {
    verts.pop_back();
  }
  if (verts.size() < 3) return 0.0;
  const std::size_t n = verts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const BlochVector& a = verts[i];
    const BlochVector& b = verts[(i + 1) % n];
    if (dot3(a, b) < -1.0 + 1e-9) {
      throw DegeneratePolygon("consecutive vertices are antipodal; geodesic is ambiguous");
    }
  }

  // Fan decomposition from an apex for which every triangle has a
  // well-posed Van Oosterom-Strackee evaluation.
  std::vector<BlochVector> candidates;
  BlochVector mean{0.0, 0.0, 0.0};
  for (const BlochVector& v : verts)
    for (int c = 0; c < 3; ++c) mean[c] += v[c];
  if (norm3(mean) > 1e-9) candidates.push_back(normalized3(mean));
  BlochVector edge_mean{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    BlochVector mid{verts[i][0] + verts[(i + 1) % n][0], verts[i][1] + verts[(i + 1) % n][1],
                    verts[i][2] + verts[(i + 1) % n][2]};
    if (norm3(mid) > 1e-9) {
      mid = normalized3(mid);
      for (int c = 0; c < 3; ++c) edge_mean[c] += mid[c];
    }
  }
  if (norm3(edge_mean) > 1e-9) candidates.push_back(normalized3(edge_mean));
  for (const BlochVector& v : verts) candidates.push_back(v);
  candidates.push_back({0.0, 0.0, 1.0});
  candidates.push_back({1.0, 0.0, 0.0});
  candidates.push_back({0.0, 1.0, 0.0});
  candidates.push_back(normalized3({1.0, 1.0, 1.0}));

  for (const BlochVector& apex : candidates) {
    bool ok = true;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const BlochVector& b = verts[i];
      const BlochVector& c = verts[(i + 1) % n];
      if (!triangle_well_posed(apex, b, c)) {
        ok = false;
        break;
      }
      total += triangle_solid_angle(apex, b, c);
    }
    if (ok) return total;
  }
  throw DegeneratePolygon("no stable fan decomposition found for the polygon");
}

BlochVector bloch_from_state(const StateVector& state) {
  if (state.dim() != 2) throw DimensionMismatch("Bloch vector requires a two-level state");
  if (!state.is_normalized(1e-9)) throw Error("Bloch vector requires a normalized state");
  const Complex a = state[0], b = state[1];
  const Complex ab = std::conj(a) * b;
  return {2.0 * ab.real(), -2.0 * ab.imag(), std::norm(a) - std::norm(b)};
}

StateVector state_from_bloch(const BlochVector& r) {
  if (std::abs(norm3(r) - 1.0) > 1e-6) throw Error("Bloch vector must have unit length");
  const BlochVector u = normalized3(r);
  const double theta = std::acos(std::clamp(u[2], -1.0, 1.0));
  const double phi = std::atan2(u[1], u[0]);
  return StateVector(
      {Complex{std::cos(theta / 2.0), 0.0}, std::polar(std::sin(theta / 2.0), -phi)});
}

FilterOperator equalization_filter(std::span<const Complex> t_values) {
  if (t_values.empty()) throw ZeroAmplitude("filter requires at least one amplitude");
  double min_mag = std::abs(t_values.front());
  for (const Complex& t : t_values) min_mag = std::min(min_mag, std::abs(t));
  if (min_mag <= 0.0) throw ZeroAmplitude("cannot equalize a vanishing amplitude");
  FilterOperator f;
  f.diagonal.reserve(t_values.size());
  for (const Complex& t : t_values) f.diagonal.emplace_back(min_mag / std::abs(t), 0.0);
  return f;
}

ComplexMatrix apply_filter(const FilterOperator& filter, const ComplexMatrix& gamma) {
  if (filter.diagonal.size() > gamma.rows()) {
    throw DimensionMismatch("filter has more entries than the operator has rows");
  }
  for (const Complex& d : filter.diagonal) {
    const double mag = std::abs(d);
    if (mag <= 0.0 || mag > 1.0 + 1e-12) {
      throw Error("filter magnitudes must lie in (0, 1]");
    }
  }
  ComplexMatrix out = gamma;
  for (std::size_t i = 0; i < filter.diagonal.size(); ++i)
    for (std::size_t j = 0; j < gamma.cols(); ++j) out(i, j) = filter.diagonal[i] * out(i, j);
  return out;
}

std::pair<ComplexMatrix, double> compose_diag_unitary(std::span<const double> phases,
                                                      std::size_t refinement) {
  if (phases.empty()) throw BadIndex("compose requires at least one phase");
  const std::size_t k = phases.size();
  ComplexMatrix gamma = ComplexMatrix::identity(k + 1);
  for (std::size_t m = 1; m <= k; ++m) {
    PhaseLoopSpec spec{k, m, phases[m - 1], refinement};
    gamma = cumulative_operator(build_phase_loop(spec)) * gamma;
  }
  return {std::move(gamma), phase_loop_scale(refinement)};
}

}  // namespace holonomy
