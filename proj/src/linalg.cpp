#include "emery/linalg.hpp"

#include <cmath>

namespace emery {

RMat psd_cholesky(const RMat& a) {
  int n = a.n;
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
  double tol = 1e-12 * std::max(scale, 1.0);

  RMat l(n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -tol) throw std::domain_error("covariance matrix is not positive semidefinite");
    if (d <= tol) {
      // Zero pivot: the whole column must be representable as zero.
      for (int i = j + 1; i < n; ++i) {
        double s = a(i, j);
        for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        if (std::abs(s) > 1e-9 * std::max(scale, 1.0))
          throw std::domain_error("covariance matrix is not positive semidefinite");
      }
      continue;  // l(., j) stays zero
    }
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

}  // namespace emery
