#include "holonomy/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace holonomy {

namespace {

constexpr double kJacobiTol = 1e-14;
constexpr int kJacobiMaxSweeps = 100;

}  // namespace

void TolerancePolicy::validate() const {
  for (double t : {tol_norm, tol_ortho, tol_flat, tol_phase}) {
    if (!(t > 0.0) || !(t < 1e-3)) {
      throw Error("tolerance values must lie strictly inside (0, 1e-3)");
    }
  }
}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), entries_(rows * cols, Complex{0.0, 0.0}) {
  if (rows == 0 || cols == 0) {
    throw DimensionMismatch("matrix dimensions must be at least 1x1");
  }
}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows == 0 || cols == 0) {
    throw DimensionMismatch("matrix dimensions must be at least 1x1");
  }
  if (entries_.size() != rows * cols) {
    throw DimensionMismatch("entry count does not match rows*cols");
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::from_rows(
    std::initializer_list<std::initializer_list<Complex>> rows) {
  const std::size_t r = rows.size();
  if (r == 0) throw DimensionMismatch("matrix dimensions must be at least 1x1");
  const std::size_t c = rows.begin()->size();
  ComplexMatrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionMismatch("ragged row lengths");
    std::size_t j = 0;
    for (const Complex& v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

ComplexMatrix ComplexMatrix::from_columns(const std::vector<std::vector<Complex>>& columns) {
  const std::size_t c = columns.size();
  if (c == 0) throw DimensionMismatch("matrix dimensions must be at least 1x1");
  const std::size_t r = columns.front().size();
  ComplexMatrix m(r, c);
  for (std::size_t j = 0; j < c; ++j) {
    if (columns[j].size() != r) throw DimensionMismatch("ragged column lengths");
    for (std::size_t i = 0; i < r; ++i) m(i, j) = columns[j][i];
  }
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
  return out;
}

ComplexMatrix ComplexMatrix::operator*(const ComplexMatrix& rhs) const {
  if (cols_ != rhs.rows_) throw DimensionMismatch("matrix product shape mismatch");
  ComplexMatrix out(rows_, rhs.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const Complex a = (*this)(i, k);
      if (a == Complex{0.0, 0.0}) continue;
      for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += a * rhs(k, j);
    }
  }
  return out;
}

ComplexMatrix ComplexMatrix::operator+(const ComplexMatrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_) {
    throw DimensionMismatch("matrix sum shape mismatch");
  }
  ComplexMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < entries_.size(); ++i) out.entries_[i] = entries_[i] + rhs.entries_[i];
  return out;
}

ComplexMatrix ComplexMatrix::operator-(const ComplexMatrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_) {
    throw DimensionMismatch("matrix difference shape mismatch");
  }
  ComplexMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < entries_.size(); ++i) out.entries_[i] = entries_[i] - rhs.entries_[i];
  return out;
}

ComplexMatrix ComplexMatrix::operator*(Complex scalar) const {
  ComplexMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < entries_.size(); ++i) out.entries_[i] = entries_[i] * scalar;
  return out;
}

std::vector<Complex> ComplexMatrix::column(std::size_t j) const {
  if (j >= cols_) throw BadIndex("column index out of range");
  std::vector<Complex> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

void ComplexMatrix::set_column(std::size_t j, std::span<const Complex> values) {
  if (j >= cols_) throw BadIndex("column index out of range");
  if (values.size() != rows_) throw DimensionMismatch("column length mismatch");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
}

double ComplexMatrix::max_abs() const {
  double m = 0.0;
  for (const Complex& v : entries_) m = std::max(m, std::abs(v));
  return m;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const Complex& v : entries_) s += std::norm(v);
  return std::sqrt(s);
}

bool ComplexMatrix::is_finite() const {
  for (const Complex& v : entries_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("max_abs_diff shape mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

StateVector::StateVector(std::vector<Complex> amplitudes)
    : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.empty()) throw DimensionMismatch("state vector must have dimension >= 1");
  double s = 0.0;
  for (const Complex& a : amplitudes_) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      throw Error("state amplitudes must be finite");
    }
    s += std::norm(a);
  }
  norm_ = std::sqrt(s);
}

StateVector StateVector::basis_state(std::size_t dim, std::size_t index) {
  if (index >= dim) throw BadIndex("basis index out of range");
  std::vector<Complex> amps(dim, Complex{0.0, 0.0});
  amps[index] = 1.0;
  return StateVector(std::move(amps));
}

bool StateVector::is_normalized(double tol) const { return std::abs(norm_ - 1.0) <= tol; }

StateVector StateVector::normalized() const {
  if (norm_ == 0.0) throw ZeroAmplitude("cannot normalize the zero vector");
  std::vector<Complex> amps(amplitudes_);
  for (Complex& a : amps) a /= norm_;
  return StateVector(std::move(amps));
}

Complex inner_product(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("inner product dimension mismatch");
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

StateVector operator*(const ComplexMatrix& m, const StateVector& v) {
  if (m.cols() != v.dim()) throw DimensionMismatch("matrix-vector dimension mismatch");
  std::vector<Complex> out(m.rows(), Complex{0.0, 0.0});
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * v[j];
  return StateVector(std::move(out));
}

ComplexMatrix orthonormalize(std::span<const StateVector> vectors,
                             const TolerancePolicy& policy, RankMode mode) {
  policy.validate();
  if (vectors.empty()) throw DimensionMismatch("orthonormalize requires at least one vector");
  const std::size_t n = vectors.front().dim();
  for (const StateVector& v : vectors) {
    if (v.dim() != n) throw DimensionMismatch("orthonormalize inputs differ in dimension");
  }

  std::vector<std::vector<Complex>> basis;
  basis.reserve(vectors.size());
  for (const StateVector& v : vectors) {
    std::vector<Complex> w(v.amplitudes());
    const double original_norm = v.norm();
    // Modified Gram-Schmidt with one reorthogonalization pass keeps
    // the basis orthonormal to machine precision even for nearly
    // dependent inputs.
    for (int pass = 0; pass < 2; ++pass) {
      for (const std::vector<Complex>& q : basis) {
        Complex coeff{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) coeff += std::conj(q[i]) * w[i];
        for (std::size_t i = 0; i < n; ++i) w[i] -= coeff * q[i];
      }
    }
    double residual = 0.0;
    for (const Complex& a : w) residual += std::norm(a);
    residual = std::sqrt(residual);
    if (residual <= policy.tol_ortho * std::max(original_norm, 1e-300)) {
      if (mode == RankMode::require_full) {
        throw RankDeficient("input vectors are linearly dependent");
      }
      continue;
    }
    for (Complex& a : w) a /= residual;
    basis.push_back(std::move(w));
  }
  if (basis.empty()) throw RankDeficient("all input vectors are numerically zero");
  return ComplexMatrix::from_columns(basis);
}

namespace {

// One-sided Jacobi on the columns of w, accumulating the applied
// rotations into v. On return the columns of w are mutually orthogonal
// and w = m * v.
void jacobi_orthogonalize_columns(ComplexMatrix& w, ComplexMatrix& v) {
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    bool converged = true;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double app = 0.0, aqq = 0.0;
        Complex apq{0.0, 0.0};
        for (std::size_t i = 0; i < rows; ++i) {
          const Complex wp = w(i, p), wq = w(i, q);
          app += std::norm(wp);
          aqq += std::norm(wq);
          apq += std::conj(wp) * wq;
        }
        const double off = std::abs(apq);
        if (off <= kJacobiTol * std::sqrt(app * aqq) || off == 0.0) continue;
        converged = false;

        // Rotate in the (p, q) plane after absorbing the phase of the
        // off-diagonal Gram entry into column q.
        const Complex phase = std::conj(apq) / off;
        const double tau = (aqq - app) / (2.0 * off);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * cs;
        for (std::size_t i = 0; i < rows; ++i) {
          const Complex wp = w(i, p);
          const Complex wq = phase * w(i, q);
          w(i, p) = cs * wp - sn * wq;
          w(i, q) = sn * wp + cs * wq;
        }
        for (std::size_t i = 0; i < cols; ++i) {
          const Complex vp = v(i, p);
          const Complex vq = phase * v(i, q);
          v(i, p) = cs * vp - sn * vq;
          v(i, q) = sn * vp + cs * vq;
        }
      }
    }
    if (converged) return;
  }
  throw ConvergenceFailure("Jacobi SVD did not converge within the sweep budget");
}

// Extends the orthonormal set held in the flagged columns of u to all
// columns. For each missing column the standard basis vector with the
// largest residual against the current set is orthogonalized in; that
// residual norm is at least sqrt((rows - filled)/rows), so this cannot
// fail while filled < rows.
void complete_orthonormal_columns(ComplexMatrix& u, std::vector<bool> filled) {
  const std::size_t rows = u.rows();
  const std::size_t cols = u.cols();
  auto residual_of_probe = [&](std::size_t probe) {
    std::vector<Complex> w(rows, Complex{0.0, 0.0});
    w[probe] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < cols; ++k) {
        if (!filled[k]) continue;
        Complex coeff{0.0, 0.0};
        for (std::size_t i = 0; i < rows; ++i) coeff += std::conj(u(i, k)) * w[i];
        for (std::size_t i = 0; i < rows; ++i) w[i] -= coeff * u(i, k);
      }
    }
    return w;
  };
  for (std::size_t j = 0; j < cols; ++j) {
    if (filled[j]) continue;
    std::vector<Complex> best;
    double best_norm = -1.0;
    for (std::size_t probe = 0; probe < rows; ++probe) {
      std::vector<Complex> w = residual_of_probe(probe);
      double nrm = 0.0;
      for (const Complex& a : w) nrm += std::norm(a);
      nrm = std::sqrt(nrm);
      if (nrm > best_norm) {
        best_norm = nrm;
        best = std::move(w);
      }
    }
    if (best_norm < 1e-8) throw RankDeficient("orthonormal completion exhausted the basis");
    for (Complex& a : best) a /= best_norm;
    u.set_column(j, best);
    filled[j] = true;
  }
}

}  // namespace

SvdResult svd(const ComplexMatrix& m) {
  if (!m.is_finite()) throw Error("svd input must be finite");
  if (m.rows() < m.cols()) {
    SvdResult r = svd(m.adjoint());
    return SvdResult{std::move(r.right), std::move(r.singular_values), std::move(r.left)};
  }

  ComplexMatrix w = m;
  ComplexMatrix v = ComplexMatrix::identity(m.cols());
  jacobi_orthogonalize_columns(w, v);

  const std::size_t cols = m.cols();
  std::vector<double> sigma(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) s += std::norm(w(i, j));
    sigma[j] = std::sqrt(s);
  }

  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  const double sigma_max = sigma.empty() ? 0.0 : sigma[order.front()];
  const double zero_cut = sigma_max * 1e-14;

  ComplexMatrix left(m.rows(), cols);
  ComplexMatrix right(cols, cols);
  std::vector<double> values(cols);
  std::vector<bool> filled(cols, false);
  for (std::size_t j = 0; j < cols; ++j) {
    const std::size_t src = order[j];
    values[j] = sigma[src];
    right.set_column(j, v.column(src));
    if (sigma[src] > zero_cut) {
      std::vector<Complex> col = w.column(src);
      for (Complex& a : col) a /= sigma[src];
      left.set_column(j, col);
      filled[j] = true;
    } else {
      values[j] = 0.0;
    }
  }
  complete_orthonormal_columns(left, filled);
  return SvdResult{std::move(left), std::move(values), std::move(right)};
}

}  // namespace holonomy
