#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <utility>
#include <vector>

#include "laconv/errors.hpp"

namespace laconv {

/// Point in the plane.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

/// Dense row-major matrix of doubles. Sized for the small (2x2, 3x3) group
/// matrices used throughout; no attempt at cache blocking.
class Mat {
public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {}
  Mat(int rows, int cols, std::initializer_list<double> vals) : Mat(rows, cols) {
    std::size_t k = 0;
    for (double v : vals) data_[k++] = v;
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend Mat operator+(const Mat& a, const Mat& b) {
    check_same_shape(a, b);
    Mat r = a;
    for (std::size_t i = 0; i < r.data_.size(); ++i) r.data_[i] += b.data_[i];
    return r;
  }

  friend Mat operator-(const Mat& a, const Mat& b) {
    check_same_shape(a, b);
    Mat r = a;
    for (std::size_t i = 0; i < r.data_.size(); ++i) r.data_[i] -= b.data_[i];
    return r;
  }

  friend Mat operator*(double s, const Mat& a) {
    Mat r = a;
    for (double& v : r.data_) v *= s;
    return r;
  }

  friend Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols_ != b.rows_) throw ShapeError("matrix product: inner dimensions differ");
    Mat r(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        for (int j = 0; j < b.cols_; ++j) r(i, j) += aik * b(k, j);
      }
    return r;
  }

  Mat transpose() const {
    Mat r(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  /// Induced 1-norm (max absolute column sum).
  double norm_one() const {
    double best = 0.0;
    for (int j = 0; j < cols_; ++j) {
      double s = 0.0;
      for (int i = 0; i < rows_; ++i) s += std::fabs((*this)(i, j));
      if (s > best) best = s;
    }
    return best;
  }

  double norm_fro() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double max_abs() const {
    double best = 0.0;
    for (double v : data_) best = std::max(best, std::fabs(v));
    return best;
  }

  friend double max_abs_diff(const Mat& a, const Mat& b) {
    check_same_shape(a, b);
    double best = 0.0;
    for (std::size_t i = 0; i < a.data_.size(); ++i)
      best = std::max(best, std::fabs(a.data_[i] - b.data_[i]));
    return best;
  }

private:
  static void check_same_shape(const Mat& a, const Mat& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw ShapeError("matrix shapes differ");
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// Matrix exponential by scaling and squaring: halve the argument until its
/// 1-norm is below 0.5, sum the Taylor series through the A^18/18! term, then
/// square back up. Relative error <= 1e-12 for ||A|| <= 10.
inline Mat expm(const Mat& a) {
  if (a.rows() != a.cols()) throw ShapeError("expm: matrix must be square");
  if (!a.finite()) throw InvalidArgumentError("expm: non-finite entries");
  const int n = a.rows();

  int squarings = 0;
  double scale = 1.0;
  double nrm = a.norm_one();
  while (nrm * scale >= 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  Mat x = scale * a;

  Mat result = Mat::identity(n);
  Mat term = Mat::identity(n);
  for (int k = 1; k <= 18; ++k) {
    term = (1.0 / k) * (term * x);
    result = result + term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

/// LU solve with partial pivoting; computes the inverse and a cheap condition
/// estimate cond_1 = ||A||_1 * ||A^-1||_1. Pivot threshold is relative to the
/// largest entry of the pivot column.
inline Mat inverse(const Mat& a, double* condition_out = nullptr) {
  if (a.rows() != a.cols()) throw ShapeError("inverse: matrix must be square");
  const int n = a.rows();
  Mat lu = a;
  Mat inv = Mat::identity(n);

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double colmax = 0.0;
    for (int r = col; r < n; ++r) {
      double v = std::fabs(lu(r, col));
      if (v > std::fabs(lu(pivot, col))) pivot = r;
      colmax = std::max(colmax, v);
    }
    if (std::fabs(lu(pivot, col)) < 1e-12 * std::max(colmax, 1.0))
      throw SingularityError("inverse: pivot below singularity threshold",
                             std::numeric_limits<double>::infinity());
    if (pivot != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(lu(col, j), lu(pivot, j));
        std::swap(inv(col, j), inv(pivot, j));
      }
    }
    const double d = 1.0 / lu(col, col);
    for (int j = 0; j < n; ++j) {
      lu(col, j) *= d;
      inv(col, j) *= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = lu(r, col);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        lu(r, j) -= f * lu(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  if (condition_out) *condition_out = a.norm_one() * inv.norm_one();
  return inv;
}

/// Spectral norm estimated by power iteration on A^T A (fixed 50 iterations,
/// deterministic all-ones start).
inline double spectral_norm(const Mat& a, int iterations = 50) {
  const int n = a.cols();
  if (n == 0 || a.rows() == 0) return 0.0;
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> av(a.rows()), atav(n);
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    for (int i = 0; i < a.rows(); ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += a(i, j) * v[j];
      av[i] = s;
    }
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < a.rows(); ++i) s += a(i, j) * av[i];
      atav[j] = s;
    }
    double nrm = 0.0;
    for (double x : atav) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return 0.0;
    for (int j = 0; j < n; ++j) v[j] = atav[j] / nrm;
    sigma = std::sqrt(nrm);
  }
  return sigma;
}

}  // namespace laconv
