#pragma once

#include <cmath>
#include <complex>

namespace emery {

// Complex scalar with an explicit NaN alternative. NaN is a tagged state,
// not a floating-point NaN: it absorbs every arithmetic operation and marks
// values that left the domain of an expression (log at 0, sgn at 0, ...).
class ComplexValue {
 public:
  constexpr ComplexValue() : re_(0.0), im_(0.0), nan_(false) {}
  constexpr ComplexValue(double re, double im = 0.0) : re_(re), im_(im), nan_(false) {}
  ComplexValue(std::complex<double> z) : re_(z.real()), im_(z.imag()), nan_(false) {}

  static constexpr ComplexValue nan() {
    ComplexValue v;
    v.nan_ = true;
    return v;
  }

  bool is_nan() const { return nan_; }
  double re() const { return re_; }
  double im() const { return im_; }

  // Callers must check is_nan() first; a NaN has no std::complex image.
  std::complex<double> std() const { return {re_, im_}; }

  bool is_real() const { return !nan_ && im_ == 0.0; }
  bool is_zero() const { return !nan_ && re_ == 0.0 && im_ == 0.0; }

  // True for real integers of magnitude small enough for exact pow-by-squaring.
  bool is_small_int() const {
    return is_real() && re_ == std::nearbyint(re_) && std::abs(re_) <= 64.0;
  }

  friend bool operator==(const ComplexValue& a, const ComplexValue& b) {
    if (a.nan_ || b.nan_) return a.nan_ && b.nan_;
    return a.re_ == b.re_ && a.im_ == b.im_;
  }
  friend bool operator!=(const ComplexValue& a, const ComplexValue& b) { return !(a == b); }

 private:
  double re_, im_;
  bool nan_;
};

inline const ComplexValue kImagUnit{0.0, 1.0};

ComplexValue operator+(const ComplexValue& a, const ComplexValue& b);
ComplexValue operator-(const ComplexValue& a, const ComplexValue& b);
ComplexValue operator*(const ComplexValue& a, const ComplexValue& b);
ComplexValue operator-(const ComplexValue& a);

// Principal-value logarithm; the branch cut on the negative real axis takes
// the limit from above (arg = +pi even for a negative imaginary zero).
ComplexValue cv_log(const ComplexValue& z);
ComplexValue cv_exp(const ComplexValue& z);

// Integer exponents use exact repeated multiplication; everything else goes
// through exp(c * log z). 0^c is 0 for Re c > 0, 1 for c = 0, NaN otherwise.
ComplexValue cv_pow(const ComplexValue& base, const ComplexValue& exponent);

ComplexValue cv_abs(const ComplexValue& z);
ComplexValue cv_conj(const ComplexValue& z);
ComplexValue cv_re(const ComplexValue& z);
ComplexValue cv_im(const ComplexValue& z);
// z/|z|; sgn(0) = NaN.
ComplexValue cv_sgn(const ComplexValue& z);

double cv_norm(const ComplexValue& z);  // |z|; NaN maps to +inf for sup bookkeeping

}  // namespace emery
