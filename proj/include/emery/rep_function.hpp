#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emery/expr.hpp"
#include "emery/linalg.hpp"

namespace emery {

// A vector-valued representing function: d complex inputs, n complex outputs,
// plus the analysis flags the class checks and transforms key off.
struct RepFunction {
  int dim_in = 1;
  int dim_out = 1;
  std::vector<Expr> components;
  bool time_dependent = false;
  bool analytic_at_zero = false;
};

// Validates variable indices against dim_in and computes the flags.
RepFunction make_rep_function(std::vector<Expr> components, int dim_in);

std::vector<ComplexValue> eval_rep(const RepFunction& f, double t,
                                   std::span<const ComplexValue> x,
                                   const ParamMap& params = {});

// Syntactic composition outer(inner) with simplification. Throws
// std::invalid_argument when outer.dim_in != inner.dim_out.
RepFunction substitute(const RepFunction& outer, const RepFunction& inner);

std::string pretty(const RepFunction& f);

// First and second Wirtinger derivatives at x = 0. The Hessian of each
// component lives in interleaved (x_1, x_1*, x_2, x_2*, ...) coordinates.
struct WirtingerJet {
  int dim_in = 0;
  int dim_out = 0;
  CMat grad_z;             // n x d
  CMat grad_zbar;          // n x d
  std::vector<CMat> hess;  // n matrices, each 2d x 2d
};

// Same data in lifted real coordinates (Re x_1, Im x_1, ...). Entries stay
// complex because the function itself is complex-valued.
struct HatJet {
  int dim_in = 0;
  int dim_out = 0;
  CMat grad;               // n x 2d
  std::vector<CMat> hess;  // n matrices, each 2d x 2d
};

HatJet hat_gradient(const WirtingerJet& jet);

// 2n x 2d real matrix whose row pairs are (Re, Im) of the hat-gradient rows:
// the derivative of the lifted function, used by chain rules and covariance
// pushforwards.
CMat real_lift_matrix(const HatJet& hat);

// Real Hessians of the lifted components (Re f_1, Im f_1, ...): 2n matrices.
std::vector<CMat> real_lift_hessians(const HatJet& hat);

struct NonDifferentiableAtZero : std::runtime_error {
  NonDifferentiableAtZero(int component_, std::string direction_, std::string detail)
      : std::runtime_error("not twice real-differentiable at zero (component " +
                           std::to_string(component_) + ", direction " + direction_ +
                           "): " + detail),
        component(component_),
        direction(std::move(direction_)) {}
  int component;
  std::string direction;
};

enum class JetMode {
  Strict,   // finite-difference divergence aborts with NonDifferentiableAtZero
  Lenient,  // keep the raw finite-difference values (forced runs only)
};

// Precomputes the symbolic derivative trees once so a time grid can be swept
// cheaply. Falls back to central finite differences (step 1e-5, halved for a
// divergence check with growth bound 1.5) when a symbolic derivative
// evaluates to NaN at zero.
class JetEvaluator {
 public:
  explicit JetEvaluator(RepFunction f);

  const RepFunction& function() const { return f_; }

  WirtingerJet at(double t, const ParamMap& params = {},
                  JetMode mode = JetMode::Strict) const;

 private:
  WirtingerJet finite_difference_jet(double t, const ParamMap& params, JetMode mode) const;

  RepFunction f_;
  std::vector<Expr> d1_;  // [m * 2d + dir]
  std::vector<Expr> d2_;  // [(m * 2d + dir1) * 2d + dir2]
};

WirtingerJet jet_at_zero(const RepFunction& f, double t = 0.0, const ParamMap& params = {},
                         JetMode mode = JetMode::Strict);

}  // namespace emery
