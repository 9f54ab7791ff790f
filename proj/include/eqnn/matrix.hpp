#pragma once

// Dense row-major real matrices and the small amount of linear algebra the
// rest of the library needs: products, Kronecker lifts, determinants,
// Gram-Schmidt and a rank-revealing nullspace.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eqnn/error.hpp"

namespace eqnn {

using Vector = std::vector<double>;

inline constexpr double kDefaultTol = 1e-9;

class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw Error("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                  std::to_string(rows_ * cols_));
    }
    for (double x : data_) {
      if (!std::isfinite(x)) throw Error("matrix entries must be finite");
    }
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw Error("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    for (double x : data_) {
      if (!std::isfinite(x)) throw Error("matrix entries must be finite");
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  // Column matrix holding v.
  static Matrix column(std::span<const double> v) {
    return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vector col(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  void set_col(std::size_t j, std::span<const double> v) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    std::swap_ranges(row(a).begin(), row(a).end(), row(b).begin());
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// Zero entries of `a` are skipped, so products of permutation-like matrices
// cost O(n^2) rather than O(n^3).
inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error("matrix product shape mismatch: " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

inline Vector operator*(const Matrix& a, std::span<const double> v) {
  if (a.cols() != v.size()) throw Error("matrix-vector shape mismatch");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    double s = 0.0;
    for (std::size_t k = 0; k < ai.size(); ++k) s += ai[k] * v[k];
    out[i] = s;
  }
  return out;
}

inline Vector operator*(const Matrix& a, const Vector& v) { return a * std::span<const double>(v); }

inline Matrix operator+(Matrix a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("matrix sum shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
  return a;
}

inline Matrix operator-(Matrix a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("matrix difference shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] -= b.data()[i];
  return a;
}

inline Matrix operator*(double s, Matrix a) {
  for (double& x : a.data()) x *= s;
  return a;
}

// Kronecker product a ⊗ b.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q) k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
    }
  return k;
}

inline Matrix block_diag(const std::vector<Matrix>& blocks) {
  std::size_t r = 0, c = 0;
  for (const auto& b : blocks) {
    r += b.rows();
    c += b.cols();
  }
  Matrix out(r, c);
  std::size_t r0 = 0, c0 = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) out(r0 + i, c0 + j) = b(i, j);
    r0 += b.rows();
    c0 += b.cols();
  }
  return out;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs(const Matrix& a) { return max_abs(a.data()); }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("size mismatch in max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("shape mismatch in max_abs_diff");
  return max_abs_diff(a.data(), b.data());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Entrywise (Frobenius) inner product.
inline double frobenius_dot(const Matrix& a, const Matrix& b) { return dot(a.data(), b.data()); }

inline double frobenius_norm(const Matrix& a) { return std::sqrt(frobenius_dot(a, a)); }

inline double trace(const Matrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// LU with partial pivoting.
inline double determinant(Matrix a) {
  if (a.rows() != a.cols()) throw Error("determinant of a non-square matrix");
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (a(p, c) == 0.0) return 0.0;
    if (p != c) {
      a.swap_rows(p, c);
      det = -det;
    }
    const double piv = a(c, c);
    det *= piv;
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / piv;
      if (f == 0.0) continue;
      for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
    }
  }
  return det;
}

// Gauss-Jordan inverse; throws on a (numerically) singular matrix.
inline Matrix inverse(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error("inverse of a non-square matrix");
  const std::size_t n = m.rows();
  Matrix a = m;
  Matrix inv = Matrix::identity(n);
  const double scale = std::max(max_abs(m), 1.0);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (std::abs(a(p, c)) <= 1e-14 * scale) throw Error("matrix is singular");
    a.swap_rows(p, c);
    inv.swap_rows(p, c);
    const double piv = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= piv;
      inv(c, j) /= piv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

/// Orthonormalizes the columns of `v` by modified Gram-Schmidt in column
/// order, with one re-orthogonalization pass per column. A column whose
/// residual falls below 1e-12 of its initial norm is dropped, so the result
/// spans the same space with (rows x rank) shape. An all-zero input yields a
/// rows x 0 matrix.
inline Matrix orthonormalize(const Matrix& v) {
  const std::size_t n = v.rows();
  std::vector<Vector> kept;
  for (std::size_t j = 0; j < v.cols(); ++j) {
    Vector c = v.col(j);
    const double initial = std::sqrt(dot(c, c));
    if (initial == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : kept) {
        const double p = dot(q, c);
        for (std::size_t i = 0; i < n; ++i) c[i] -= p * q[i];
      }
    }
    const double residual = std::sqrt(dot(c, c));
    if (residual < 1e-12 * initial) continue;
    for (double& x : c) x /= residual;
    kept.push_back(std::move(c));
  }
  Matrix q(n, kept.size());
  for (std::size_t j = 0; j < kept.size(); ++j) q.set_col(j, kept[j]);
  return q;
}

/// Orthonormal basis (cols x d) of the numerical nullspace of `m`.
///
/// Gauss-Jordan elimination with partial pivoting; a candidate pivot is
/// accepted only if its magnitude exceeds tol * max|m_ij|. Each free column
/// contributes one back-substituted vector and the set is orthonormalized.
inline Matrix nullspace(const Matrix& m, double tol = kDefaultTol) {
  if (!(tol > 0.0)) throw Error("nullspace tolerance must be positive");
  if (m.empty()) throw Error("nullspace of an empty matrix");
  if (!all_finite(m.data())) throw Error("nullspace input contains NaN or Inf");

  const std::size_t rows = m.rows(), cols = m.cols();
  Matrix r = m;
  const double threshold = tol * max_abs(m);
  std::vector<std::size_t> pivot_cols;
  std::vector<bool> is_pivot(cols, false);

  std::size_t row = 0;
  for (std::size_t c = 0; c < cols && row < rows; ++c) {
    std::size_t p = row;
    for (std::size_t i = row + 1; i < rows; ++i)
      if (std::abs(r(i, c)) > std::abs(r(p, c))) p = i;
    if (!(std::abs(r(p, c)) > threshold)) continue;
    r.swap_rows(p, row);
    const double piv = r(row, c);
    auto pr = r.row(row);
    for (std::size_t j = c; j < cols; ++j) pr[j] /= piv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == row) continue;
      const double f = r(i, c);
      if (f == 0.0) continue;
      auto ri = r.row(i);
      for (std::size_t j = c; j < cols; ++j) ri[j] -= f * pr[j];
    }
    pivot_cols.push_back(c);
    is_pivot[c] = true;
    ++row;
  }

  Matrix basis(cols, cols - pivot_cols.size());
  std::size_t k = 0;
  for (std::size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    basis(f, k) = 1.0;
    for (std::size_t i = 0; i < pivot_cols.size(); ++i) basis(pivot_cols[i], k) = -r(i, f);
    ++k;
  }
  return orthonormalize(basis);
}

// Orthogonal projector Q Q^T onto the span of orthonormal columns Q.
inline Matrix projector(const Matrix& q) { return q * transpose(q); }

}  // namespace eqnn
