#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "epifilter/errors.hpp"

namespace epifilter {

/// Dense row-major matrix of doubles. Deliberately small: the library only
/// needs window-sized (tau x tau) weights and 4 x N ensembles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix scaled_identity(std::size_t n, double s) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = s;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

  bool finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double trace() const {
    double t = 0.0;
    std::size_t n = rows_ < cols_ ? rows_ : cols_;
    for (std::size_t i = 0; i < n; ++i) t += (*this)(i, i);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
  }

  double max_asymmetry() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j)
        m = std::max(m, std::fabs((*this)(i, j) - (*this)(j, i)));
    return m;
  }

  /// this * transpose(this), an rows x rows symmetric PSD matrix.
  Matrix times_transpose() const {
    Matrix out(rows_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i; j < rows_; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < cols_; ++k) s += (*this)(i, k) * (*this)(j, k);
        out(i, j) = s;
        out(j, i) = s;
      }
    return out;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// Cholesky factor L (lower) of a symmetric positive definite matrix.
/// Throws NumericalError when the matrix is not positive definite.
inline Matrix cholesky(const Matrix& a, const std::string& what = "matrix") {
  if (a.rows() != a.cols()) throw InvalidInputError(what + " is not square");
  std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw NumericalError(what + " is not positive definite (pivot " + std::to_string(j) +
                           " = " + std::to_string(diag) + ")");
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

/// Squared Mahalanobis form r' * inv(A) * r computed via the Cholesky
/// factorization of A (A must be SPD).
inline double mahalanobis_squared(std::span<const double> r, const Matrix& a,
                                  const std::string& what = "weight matrix") {
  if (a.rows() != r.size())
    throw InvalidInputError(what + " dimension " + std::to_string(a.rows()) +
                            " does not match residual length " + std::to_string(r.size()));
  Matrix l = cholesky(a, what);
  std::size_t n = r.size();
  // forward-solve L z = r, then |z|^2 = r' inv(A) r.
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = r[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * z[k];
    z[i] = s / l(i, i);
  }
  double out = 0.0;
  for (double v : z) out += v * v;
  return out;
}

}  // namespace epifilter
