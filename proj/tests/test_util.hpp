#pragma once

#include <cmath>
#include <vector>

#include "emery/expr.hpp"
#include "emery/rng.hpp"

namespace emery::testing {

// Deterministic point generator for property-style checks.
class PointGen {
 public:
  explicit PointGen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform01(); }

  // complex point with |z| <= radius
  ComplexValue disc(double radius) {
    double r = radius * std::sqrt(rng_.uniform01());
    double a = 2.0 * std::acos(-1.0) * rng_.uniform01();
    return {r * std::cos(a), r * std::sin(a)};
  }

  std::vector<ComplexValue> disc_vector(int d, double radius) {
    std::vector<ComplexValue> v;
    v.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) v.push_back(disc(radius));
    return v;
  }

  Rng& raw() { return rng_; }

 private:
  Rng rng_;
};

// Random expression trees over the smart constructors (never Const(NaN),
// exponents kept constant). Used for round-trip and NaN-absorption checks.
class TreeGen {
 public:
  TreeGen(std::uint64_t seed, int dim) : rng_(seed), dim_(dim) {}

  Expr tree(int max_depth) { return gen(max_depth); }

 private:
  double u() { return rng_.uniform01(); }

  ComplexValue constant() {
    double pick = u();
    if (pick < 0.4) return ComplexValue(std::floor(u() * 7.0) - 3.0);
    if (pick < 0.7) return ComplexValue(u() * 4.0 - 2.0);
    return {u() * 2.0 - 1.0, u() * 2.0 - 1.0};
  }

  ComplexValue exponent() {
    double pick = u();
    if (pick < 0.5) return ComplexValue(std::floor(u() * 5.0) - 2.0);
    if (pick < 0.8) return ComplexValue(u() * 3.0 - 1.5);
    return {u() * 2.0 - 1.0, u() * 2.0 - 1.0};
  }

  Expr leaf() {
    double pick = u();
    if (pick < 0.45) return Expr::var(1 + static_cast<int>(u() * dim_) % dim_);
    if (pick < 0.6) return Expr::time();
    return Expr::constant(constant());
  }

  Expr gen(int depth) {
    if (depth <= 0 || u() < 0.25) return leaf();
    double pick = u();
    if (pick < 0.22) return Expr::add(gen(depth - 1), gen(depth - 1));
    if (pick < 0.30) return Expr::sub(gen(depth - 1), gen(depth - 1));
    if (pick < 0.52) return Expr::mul(gen(depth - 1), gen(depth - 1));
    if (pick < 0.58) return Expr::neg(gen(depth - 1));
    if (pick < 0.68) return Expr::pow(gen(depth - 1), exponent());
    if (pick < 0.76) return Expr::exp(gen(depth - 1));
    if (pick < 0.82) return Expr::log(gen(depth - 1));
    if (pick < 0.88) return Expr::abs(gen(depth - 1));
    if (pick < 0.92) return Expr::conj(gen(depth - 1));
    if (pick < 0.95) return Expr::re(gen(depth - 1));
    if (pick < 0.98) return Expr::im(gen(depth - 1));
    return Expr::sgn(gen(depth - 1));
  }

  Rng rng_;
  int dim_;
};

inline double rel_err(Cx got, Cx want) {
  double scale = std::max(1.0, std::abs(want));
  return std::abs(got - want) / scale;
}

}  // namespace emery::testing
