#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcl {

// Dense row-major matrix of doubles. Everything in this project is desk
// scale (a few thousand rows), so there is no sparse storage and no BLAS.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dims");
  }

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

  std::size_t size() const { return data.size(); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline void check_shape(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("shape mismatch: " + what);
}

// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  check_shape(a.cols == b.rows, "matmul");
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int k = 0; k < a.cols; ++k) {
      double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      for (int j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

// C = A^T * B
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_shape(a.rows == b.rows, "matmul_tn");
  Matrix c(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    const double* ak = a.row(k);
    const double* bk = b.row(k);
    for (int i = 0; i < a.cols; ++i) {
      double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = c.row(i);
      for (int j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

// C = A * B^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_shape(a.cols == b.cols, "matmul_nt");
  Matrix c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
  return c;
}

inline void add_inplace(Matrix& a, const Matrix& b, double scale = 1.0) {
  check_shape(a.same_shape(b), "add_inplace");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += scale * b.data[i];
}

inline void scale_inplace(Matrix& a, double s) {
  for (double& v : a.data) v *= s;
}

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

}  // namespace gcl
