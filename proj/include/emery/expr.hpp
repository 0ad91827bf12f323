#pragma once

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emery/complex_value.hpp"

namespace emery {

using ParamMap = std::map<std::string, ComplexValue>;

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Immutable symbolic expression over complex variables x_1..x_d, time t and
// named runtime-bound parameters. Nodes are shared and never mutated, so
// expressions are cheap to copy and safe to use from several threads.
//
// Construction goes through the static factories below, which fold constant
// arithmetic (Add/Mul/Neg/Pow on constants) so that parse/pretty round-trips
// land on a single normal form.
class Expr {
 public:
  enum class Kind {
    Const,
    Var,    // x_k, 1-based index
    Time,   // t
    Param,  // theta.<name>
    Add,
    Mul,
    Neg,
    Pow,  // base^c with constant complex exponent c (principal branch)
    Exp,
    Log,  // principal branch
    Abs,
    Conj,
    Re,
    Im,
    Sgn
  };

  Expr() : Expr(constant(ComplexValue(0.0))) {}

  static Expr constant(ComplexValue v);
  static Expr constant(double v) { return constant(ComplexValue(v)); }
  static Expr var(int index);
  static Expr time();
  static Expr param(std::string name);
  static Expr add(Expr l, Expr r);
  static Expr sub(Expr l, Expr r) { return add(std::move(l), neg(std::move(r))); }
  static Expr mul(Expr l, Expr r);
  static Expr neg(Expr e);
  static Expr pow(Expr base, ComplexValue exponent);
  static Expr exp(Expr e);
  static Expr log(Expr e);
  static Expr abs(Expr e);
  static Expr conj(Expr e);
  static Expr re(Expr e);
  static Expr im(Expr e);
  static Expr sgn(Expr e);

  Kind kind() const;
  const ComplexValue& const_value() const;  // Const payload, or Pow exponent
  int var_index() const;
  const std::string& param_name() const;
  const Expr& child(int i) const;  // 0 = left/base/operand, 1 = right
  int child_count() const;

  int max_var_index() const;
  bool contains_time() const;
  // No Abs/Conj/Re/Im/Sgn node sitting above a variable: holomorphic in x
  // wherever defined.
  bool analytic_in_vars() const;

  friend bool structurally_equal(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

bool structurally_equal(const Expr& a, const Expr& b);

// Evaluates the expression; NaN propagates from any sub-expression that left
// its domain. Unbound parameters and out-of-range variable indices throw
// EvalError instead (they are caller bugs, not domain exits).
ComplexValue eval(const Expr& f, double t, std::span<const ComplexValue> x,
                  const ParamMap& params = {});

// Symbolic Wirtinger derivative d/dx_k (conjugated = false) or d/dx_k*
// (conjugated = true). Abs/Re/Im differentiate through their rewritings
// |e|^2 = e e*, Re e = (e + e*)/2, Im e = (e - e*)/(2i); the derivative of a
// conjugate swaps the flag; Sgn differentiates to zero away from its
// discontinuity. Params are treated as constants.
Expr wirtinger_diff(const Expr& f, int k, bool conjugated);

// Replaces Var(k) by replacement[k-1]; Time and Param nodes are untouched.
Expr substitute_vars(const Expr& f, std::span<const Expr> replacement);

// Conservative, semantics-preserving cleanup: constant folding, 0/1
// identities, Add-chain flattening with constant collection, power merging
// with matching bases, exp(log e) -> e, and log(exp e) -> e when e is
// syntactically real.
Expr simplify(const Expr& f);

std::string to_string(const Expr& f, int dim = 1);

}  // namespace emery
