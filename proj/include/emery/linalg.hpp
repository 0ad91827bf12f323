#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

namespace emery {

using Cx = std::complex<double>;

// Dense row-major complex matrix. Everything in this engine is tiny
// (2d x 2d with d <= a handful), so no BLAS, no views, no cleverness.
class CMat {
 public:
  CMat() : rows_(0), cols_(0) {}
  CMat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows * cols)) {}

  static CMat identity(int n) {
    CMat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Cx& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * cols_ + j)]; }
  const Cx& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * cols_ + j)]; }

  CMat transpose() const {
    CMat m(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
    return m;
  }

  friend CMat operator*(const CMat& a, const CMat& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("CMat: shape mismatch");
    CMat m(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int k = 0; k < a.cols_; ++k) {
        Cx aik = a(i, k);
        if (aik == Cx(0.0)) continue;
        for (int j = 0; j < b.cols_; ++j) m(i, j) += aik * b(k, j);
      }
    return m;
  }

  friend CMat operator+(const CMat& a, const CMat& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw std::invalid_argument("CMat: shape mismatch");
    CMat m(a.rows_, a.cols_);
    for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] = a.a_[i] + b.a_[i];
    return m;
  }

  friend CMat operator-(const CMat& a, const CMat& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw std::invalid_argument("CMat: shape mismatch");
    CMat m(a.rows_, a.cols_);
    for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] = a.a_[i] - b.a_[i];
    return m;
  }

  friend CMat operator*(Cx s, const CMat& a) {
    CMat m(a.rows_, a.cols_);
    for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] = s * a.a_[i];
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (const Cx& v : a_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int rows_, cols_;
  std::vector<Cx> a_;
};

inline double max_abs_diff(const CMat& a, const CMat& b) { return (a - b).max_abs(); }

// Real symmetric matrix stored as flat row-major vector<double>.
struct RMat {
  int n = 0;
  std::vector<double> a;

  RMat() = default;
  explicit RMat(int n_) : n(n_), a(static_cast<std::size_t>(n_ * n_), 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i * n + j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i * n + j)]; }
};

// Cholesky factor of a PSD matrix; zero (to tolerance) pivots produce zero
// columns so singular covariances (e.g. a real model lifted to 2d) work.
// Throws std::domain_error if the matrix is not PSD.
RMat psd_cholesky(const RMat& a);

}  // namespace emery
