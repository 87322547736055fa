#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "holonomy/errors.hpp"

namespace holonomy {

using Complex = std::complex<double>;

/// Global tolerance knobs shared by all modules.
struct TolerancePolicy {
  double tol_norm = 1e-10;   ///< norm / probability comparisons
  double tol_ortho = 1e-10;  ///< orthonormality and rank decisions
  double tol_flat = 1e-8;    ///< singular-value spread (isometry flatness)
  double tol_phase = 1e-9;   ///< phase and unitary-equality comparisons

  /// All tolerances must be strictly positive and < 1e-3.
  void validate() const;
};

/// Dense complex matrix, row-major. Sizes here are tiny (ambient
/// dimensions of a handful), so everything is plain loops over
/// contiguous storage.
class ComplexMatrix {
 public:
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> entries);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix from_rows(std::initializer_list<std::initializer_list<Complex>> rows);
  static ComplexMatrix from_columns(const std::vector<std::vector<Complex>>& columns);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Complex& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const {
    return entries_[i * cols_ + j];
  }

  const std::vector<Complex>& entries() const { return entries_; }

  ComplexMatrix adjoint() const;
  ComplexMatrix operator*(const ComplexMatrix& rhs) const;
  ComplexMatrix operator+(const ComplexMatrix& rhs) const;
  ComplexMatrix operator-(const ComplexMatrix& rhs) const;
  ComplexMatrix operator*(Complex scalar) const;

  std::vector<Complex> column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const Complex> values);

  /// Largest entry magnitude (max norm).
  double max_abs() const;
  double frobenius_norm() const;
  bool is_finite() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Complex> entries_;
};

/// max |a_ij - b_ij|; throws DimensionMismatch on shape disagreement.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

/// State vector with cached Euclidean norm. Amplitudes are immutable
/// after construction; "normalized" is a property, not an invariant,
/// so unnormalized intermediates (e.g. projected states before
/// renormalization) are representable.
class StateVector {
 public:
  explicit StateVector(std::vector<Complex> amplitudes);

  static StateVector basis_state(std::size_t dim, std::size_t index);

  std::size_t dim() const { return amplitudes_.size(); }
  const std::vector<Complex>& amplitudes() const { return amplitudes_; }
  const Complex& operator[](std::size_t i) const { return amplitudes_[i]; }

  double norm() const { return norm_; }
  bool is_normalized(double tol = 1e-10) const;
  StateVector normalized() const;

 private:
  std::vector<Complex> amplitudes_;
  double norm_;
};

/// <a|b>, conjugate-linear in the first argument.
Complex inner_product(const StateVector& a, const StateVector& b);

StateVector operator*(const ComplexMatrix& m, const StateVector& v);

/// Controls how orthonormalize treats linearly dependent inputs.
enum class RankMode {
  drop_dependent,  ///< silently skip dependent directions
  require_full,    ///< throw RankDeficient when rank < input count
};

/// Gram-Schmidt (with reorthogonalization) of the input vectors.
/// Returns an N x r matrix with orthonormal columns spanning the same
/// space; column order follows the first appearance of each
/// independent direction. A vector whose residual norm falls below
/// tol_ortho times its original norm counts as dependent.
ComplexMatrix orthonormalize(std::span<const StateVector> vectors,
                             const TolerancePolicy& policy = {},
                             RankMode mode = RankMode::drop_dependent);

struct SvdResult {
  ComplexMatrix left;                   ///< orthonormal columns
  std::vector<double> singular_values;  ///< descending, nonnegative
  ComplexMatrix right;                  ///< orthonormal columns
};

/// Thin SVD, m = left * diag(singular_values) * right^dagger.
///
/// One-sided Jacobi on the columns; matrices in this library are at
/// most ~8x8, so simplicity and accuracy beat asymptotics. Throws
/// ConvergenceFailure if the sweep budget is exhausted.
SvdResult svd(const ComplexMatrix& m);

}  // namespace holonomy
