#pragma once

#include <variant>
#include <vector>

#include "emery/rep_function.hpp"

namespace emery {

struct UCheck {
  int condition = 0;  // 1 zero value, 2 differentiability, 3 local bounds, 4 remainder
  bool pass = true;
  std::string witness;  // probe point / t-value / direction that failed
  double bound = 0.0;   // the quantity the check measured
};

struct UReport {
  bool passes = false;
  std::vector<UCheck> checks;  // one entry per condition
  double remainder_bound = 0.0;
  std::vector<double> time_singularities;

  const UCheck& check(int condition) const {
    return checks[static_cast<std::size_t>(condition - 1)];
  }
};

// Universality probe. Condition (1) evaluates at x = 0 over a t-grid;
// (2)-(3) sweep jets over {T k/64} plus t in {1e-3, 1e-6} to expose
// singularities as t drops to 0; (4) probes the quadratic remainder quotient
// |f(x) - Dhat f(0) xhat| / |x|^2 on dyadic shells |x| in {2^-1..2^-12} times
// 16 directions. A coefficient counts as unbounded near t = 0 when the value
// at t in {1e-3, 1e-6} exceeds the t = T/64 value by factor > 100, or the
// value at 1e-6 exceeds the one at 1e-3 by factor > 5 (slow power-law
// divergences like t^{-1/3} trip the second rule).
UReport check_u(const RepFunction& f, double horizon = 1.0);

enum class RejectionCode {
  OuterNotDifferentiable,
  LocalBoundedness,
  ZeroValueViolated,
  RemainderUnbounded,
};

const char* to_string(RejectionCode code);

struct Rejection {
  RejectionCode code;
  std::string detail;
};

struct Composition {
  RepFunction composed;
  UReport report;
  // Worst absolute error of the predicted chain-rule jet against the jet of
  // the syntactic composite.
  double chain_rule_error = 0.0;
};

// Gates composition on class membership of both functions, then returns the
// syntactic composite together with a fresh report and a numerical chain-rule
// cross-check. Dimension mismatches throw std::invalid_argument.
std::variant<Composition, Rejection> compose_check(const RepFunction& outer,
                                                   const RepFunction& inner,
                                                   double horizon = 1.0);

struct CatalogEntry {
  std::string name;
  ComplexValue alpha;
  ComplexValue beta;
  bool has_alpha = false;
  bool has_beta = false;
  RepFunction fn;
  std::string domain;    // restriction on the jumps / process, if any
  std::string identity;  // the identity the function realizes
};

// The named-function catalog with default parameters. Every entry passes
// check_u on its stated domain.
std::vector<CatalogEntry> catalog();

RepFunction make_power(ComplexValue alpha);                            // (1+id)^a - 1
RepFunction make_yor(ComplexValue alpha, ComplexValue beta);           // (1+id1)^a (1+id2)^b - 1
RepFunction make_exp_rep(ComplexValue alpha);                          // e^{a id} - 1
RepFunction make_log_rep();                                            // log(1+id)
RepFunction make_abs_power(ComplexValue alpha);                        // |1+id|^a - 1
RepFunction make_signed_abs_power(ComplexValue alpha);                 // sgn(1+id)|1+id|^a - 1
RepFunction make_abs_rep();                                            // |1+id| - 1
RepFunction make_abs_yor(ComplexValue alpha, ComplexValue beta);       // |1+id1|^a |1+id2|^b - 1
RepFunction make_identity_rep();                                       // id
RepFunction make_quadratic_rep();                                      // id^2

struct IteratedExp {
  RepFunction fn;
  Cx first_derivative;   // alpha^k
  Cx second_derivative;  // alpha^{k+1} (alpha^k - 1)/(alpha - 1), = k at alpha = 1
};

// k-fold nesting of e^{alpha y} - 1 with the closed-form jet at zero.
IteratedExp iterate_exp(ComplexValue alpha, int k);

}  // namespace emery
