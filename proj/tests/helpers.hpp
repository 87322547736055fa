#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "holonomy/subspaces.hpp"

namespace holonomy::testing {

inline StateVector random_state(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<Complex> amps(dim);
  for (Complex& a : amps) a = Complex{dist(gen), dist(gen)};
  return StateVector(std::move(amps)).normalized();
}

inline Subspace random_subspace(std::mt19937_64& gen, std::size_t n, std::size_t k) {
  std::vector<StateVector> vs;
  vs.reserve(k);
  for (std::size_t j = 0; j < k; ++j) vs.push_back(random_state(gen, n));
  return Subspace::from_vectors(vs);
}

inline ComplexMatrix random_unitary(std::mt19937_64& gen, std::size_t n) {
  std::vector<StateVector> vs;
  vs.reserve(n);
  for (std::size_t j = 0; j < n; ++j) vs.push_back(random_state(gen, n));
  return orthonormalize(vs, {}, RankMode::require_full);
}

/// The two-outcome qubit measurement target from the dimension-4
/// example: span{cos(t)|0> + e^{i a} sin(t)|2>, cos(t)|1> + e^{i b} sin(t)|3>}.
inline Subspace tilted_qubit_subspace(double theta, double phase_a = 0.0,
                                      double phase_b = 0.0) {
  const double c = std::cos(theta), s = std::sin(theta);
  const Complex ea = std::polar(1.0, phase_a), eb = std::polar(1.0, phase_b);
  ComplexMatrix basis(4, 2);
  basis(0, 0) = c;
  basis(2, 0) = ea * s;
  basis(1, 1) = c;
  basis(3, 1) = eb * s;
  return Subspace(std::move(basis));
}

/// Pair of k-dim subspaces of C^n (n >= 2k) with prescribed principal
/// angles, conjugated by a random unitary so nothing is axis-aligned.
inline std::pair<Subspace, Subspace> angled_pair(std::mt19937_64& gen, std::size_t n,
                                                 const std::vector<double>& thetas) {
  const std::size_t k = thetas.size();
  ComplexMatrix source(n, k), target(n, k);
  for (std::size_t j = 0; j < k; ++j) {
    source(j, j) = 1.0;
    target(j, j) = std::cos(thetas[j]);
    target(j + k, j) = std::sin(thetas[j]);
  }
  ComplexMatrix q = random_unitary(gen, n);
  return {Subspace(q * source), Subspace(q * target)};
}

}  // namespace holonomy::testing
