#include "emery/complex_value.hpp"

#include <limits>

namespace emery {

ComplexValue operator+(const ComplexValue& a, const ComplexValue& b) {
  if (a.is_nan() || b.is_nan()) return ComplexValue::nan();
  return ComplexValue(a.re() + b.re(), a.im() + b.im());
}

ComplexValue operator-(const ComplexValue& a, const ComplexValue& b) {
  if (a.is_nan() || b.is_nan()) return ComplexValue::nan();
  return ComplexValue(a.re() - b.re(), a.im() - b.im());
}

ComplexValue operator*(const ComplexValue& a, const ComplexValue& b) {
  if (a.is_nan() || b.is_nan()) return ComplexValue::nan();
  return ComplexValue(a.std() * b.std());
}

ComplexValue operator-(const ComplexValue& a) {
  if (a.is_nan()) return ComplexValue::nan();
  return ComplexValue(-a.re(), -a.im());
}

ComplexValue cv_log(const ComplexValue& z) {
  if (z.is_nan() || z.is_zero()) return ComplexValue::nan();
  double r = std::hypot(z.re(), z.im());
  double arg;
  if (z.im() == 0.0 && z.re() < 0.0) {
    arg = std::acos(-1.0);  // cut approached from above
  } else {
    arg = std::atan2(z.im(), z.re());
  }
  return ComplexValue(std::log(r), arg);
}

ComplexValue cv_exp(const ComplexValue& z) {
  if (z.is_nan()) return ComplexValue::nan();
  return ComplexValue(std::exp(z.std()));
}

namespace {

ComplexValue pow_int(std::complex<double> base, long n) {
  // n >= 0; exact binary powering keeps real inputs exactly real.
  std::complex<double> acc(1.0, 0.0);
  std::complex<double> p = base;
  unsigned long k = static_cast<unsigned long>(n);
  while (k != 0) {
    if (k & 1UL) acc *= p;
    p *= p;
    k >>= 1;
  }
  return ComplexValue(acc);
}

}  // namespace

ComplexValue cv_pow(const ComplexValue& base, const ComplexValue& exponent) {
  if (base.is_nan() || exponent.is_nan()) return ComplexValue::nan();
  if (exponent.is_zero()) return ComplexValue(1.0);
  if (base.is_zero()) {
    if (exponent.is_real() && exponent.re() > 0.0) return ComplexValue(0.0);
    if (!exponent.is_real() && exponent.re() > 0.0) return ComplexValue(0.0);
    return ComplexValue::nan();
  }
  if (exponent.is_small_int()) {
    long n = static_cast<long>(std::nearbyint(exponent.re()));
    if (n >= 0) return pow_int(base.std(), n);
    ComplexValue p = pow_int(base.std(), -n);
    if (p.is_zero()) return ComplexValue::nan();
    return ComplexValue(std::complex<double>(1.0, 0.0) / p.std());
  }
  return cv_exp(exponent * cv_log(base));
}

ComplexValue cv_abs(const ComplexValue& z) {
  if (z.is_nan()) return ComplexValue::nan();
  return ComplexValue(std::hypot(z.re(), z.im()));
}

ComplexValue cv_conj(const ComplexValue& z) {
  if (z.is_nan()) return ComplexValue::nan();
  return ComplexValue(z.re(), -z.im());
}

ComplexValue cv_re(const ComplexValue& z) {
  if (z.is_nan()) return ComplexValue::nan();
  return ComplexValue(z.re());
}

ComplexValue cv_im(const ComplexValue& z) {
  if (z.is_nan()) return ComplexValue::nan();
  return ComplexValue(z.im());
}

ComplexValue cv_sgn(const ComplexValue& z) {
  if (z.is_nan() || z.is_zero()) return ComplexValue::nan();
  double r = std::hypot(z.re(), z.im());
  return ComplexValue(z.re() / r, z.im() / r);
}

double cv_norm(const ComplexValue& z) {
  if (z.is_nan()) return std::numeric_limits<double>::infinity();
  return std::hypot(z.re(), z.im());
}

}  // namespace emery
