#include "emery/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace emery {

struct Expr::Node {
  Kind kind;
  ComplexValue cval;  // Const payload; Pow exponent
  int var_index = 0;
  std::string param;
  std::vector<Expr> children;
};

namespace {

using Kind = Expr::Kind;

}  // namespace

Expr Expr::constant(ComplexValue v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->cval = v;
  return Expr(std::move(n));
}

Expr Expr::var(int index) {
  if (index < 1) throw EvalError("variable index must be >= 1");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  n->var_index = index;
  return Expr(std::move(n));
}

Expr Expr::time() {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Time;
  return Expr(std::move(n));
}

Expr Expr::param(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Param;
  n->param = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::add(Expr l, Expr r) {
  if (l.kind() == Kind::Const && r.kind() == Kind::Const)
    return constant(l.const_value() + r.const_value());
  auto n = std::make_shared<Node>();
  n->kind = Kind::Add;
  n->children = {std::move(l), std::move(r)};
  return Expr(std::move(n));
}

Expr Expr::mul(Expr l, Expr r) {
  if (l.kind() == Kind::Const && r.kind() == Kind::Const)
    return constant(l.const_value() * r.const_value());
  auto n = std::make_shared<Node>();
  n->kind = Kind::Mul;
  n->children = {std::move(l), std::move(r)};
  return Expr(std::move(n));
}

Expr Expr::neg(Expr e) {
  if (e.kind() == Kind::Const) return constant(-e.const_value());
  auto n = std::make_shared<Node>();
  n->kind = Kind::Neg;
  n->children = {std::move(e)};
  return Expr(std::move(n));
}

Expr Expr::pow(Expr base, ComplexValue exponent) {
  if (base.kind() == Kind::Const) {
    ComplexValue folded = cv_pow(base.const_value(), exponent);
    if (!folded.is_nan()) return constant(folded);
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Pow;
  n->cval = exponent;
  n->children = {std::move(base)};
  return Expr(std::move(n));
}

#define EMERY_UNARY_FACTORY(NAME, KIND)          \
  Expr Expr::NAME(Expr e) {                      \
    auto n = std::make_shared<Node>();           \
    n->kind = Kind::KIND;                        \
    n->children = {std::move(e)};                \
    return Expr(std::move(n));                   \
  }

EMERY_UNARY_FACTORY(exp, Exp)
EMERY_UNARY_FACTORY(log, Log)
EMERY_UNARY_FACTORY(abs, Abs)
EMERY_UNARY_FACTORY(conj, Conj)
EMERY_UNARY_FACTORY(re, Re)
EMERY_UNARY_FACTORY(im, Im)
EMERY_UNARY_FACTORY(sgn, Sgn)
#undef EMERY_UNARY_FACTORY

Expr::Kind Expr::kind() const { return node_->kind; }
const ComplexValue& Expr::const_value() const { return node_->cval; }
int Expr::var_index() const { return node_->var_index; }
const std::string& Expr::param_name() const { return node_->param; }
const Expr& Expr::child(int i) const { return node_->children[static_cast<std::size_t>(i)]; }
int Expr::child_count() const { return static_cast<int>(node_->children.size()); }

int Expr::max_var_index() const {
  int m = node_->kind == Kind::Var ? node_->var_index : 0;
  for (const Expr& c : node_->children) m = std::max(m, c.max_var_index());
  return m;
}

bool Expr::contains_time() const {
  if (node_->kind == Kind::Time) return true;
  for (const Expr& c : node_->children)
    if (c.contains_time()) return true;
  return false;
}

bool Expr::analytic_in_vars() const {
  switch (node_->kind) {
    case Kind::Abs:
    case Kind::Conj:
    case Kind::Re:
    case Kind::Im:
    case Kind::Sgn:
      if (node_->children[0].max_var_index() > 0) return false;
      return true;
    default:
      for (const Expr& c : node_->children)
        if (!c.analytic_in_vars()) return false;
      return true;
  }
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Kind::Const:
      return a.const_value() == b.const_value();
    case Kind::Var:
      return a.var_index() == b.var_index();
    case Kind::Param:
      return a.param_name() == b.param_name();
    case Kind::Pow:
      if (a.const_value() != b.const_value()) return false;
      break;
    default:
      break;
  }
  if (a.child_count() != b.child_count()) return false;
  for (int i = 0; i < a.child_count(); ++i)
    if (!structurally_equal(a.child(i), b.child(i))) return false;
  return true;
}

ComplexValue eval(const Expr& f, double t, std::span<const ComplexValue> x,
                  const ParamMap& params) {
  switch (f.kind()) {
    case Kind::Const:
      return f.const_value();
    case Kind::Var: {
      int k = f.var_index();
      if (k < 1 || static_cast<std::size_t>(k) > x.size())
        throw EvalError("variable index " + std::to_string(k) + " out of range");
      return x[static_cast<std::size_t>(k - 1)];
    }
    case Kind::Time:
      return ComplexValue(t);
    case Kind::Param: {
      auto it = params.find(f.param_name());
      if (it == params.end()) throw EvalError("unbound parameter: " + f.param_name());
      return it->second;
    }
    case Kind::Add:
      return eval(f.child(0), t, x, params) + eval(f.child(1), t, x, params);
    case Kind::Mul:
      return eval(f.child(0), t, x, params) * eval(f.child(1), t, x, params);
    case Kind::Neg:
      return -eval(f.child(0), t, x, params);
    case Kind::Pow:
      return cv_pow(eval(f.child(0), t, x, params), f.const_value());
    case Kind::Exp:
      return cv_exp(eval(f.child(0), t, x, params));
    case Kind::Log:
      return cv_log(eval(f.child(0), t, x, params));
    case Kind::Abs:
      return cv_abs(eval(f.child(0), t, x, params));
    case Kind::Conj:
      return cv_conj(eval(f.child(0), t, x, params));
    case Kind::Re:
      return cv_re(eval(f.child(0), t, x, params));
    case Kind::Im:
      return cv_im(eval(f.child(0), t, x, params));
    case Kind::Sgn:
      return cv_sgn(eval(f.child(0), t, x, params));
  }
  throw EvalError("corrupt expression node");
}

namespace {

bool is_zero_const(const Expr& e) {
  return e.kind() == Kind::Const && e.const_value().is_zero();
}

}  // namespace

Expr wirtinger_diff(const Expr& f, int k, bool conjugated) {
  switch (f.kind()) {
    case Kind::Const:
    case Kind::Time:
    case Kind::Param:
      return Expr::constant(0.0);
    case Kind::Var:
      return Expr::constant((f.var_index() == k && !conjugated) ? 1.0 : 0.0);
    case Kind::Add:
      return Expr::add(wirtinger_diff(f.child(0), k, conjugated),
                       wirtinger_diff(f.child(1), k, conjugated));
    case Kind::Neg:
      return Expr::neg(wirtinger_diff(f.child(0), k, conjugated));
    case Kind::Mul: {
      Expr dl = wirtinger_diff(f.child(0), k, conjugated);
      Expr dr = wirtinger_diff(f.child(1), k, conjugated);
      Expr lhs = is_zero_const(dl) ? Expr::constant(0.0) : Expr::mul(dl, f.child(1));
      Expr rhs = is_zero_const(dr) ? Expr::constant(0.0) : Expr::mul(f.child(0), dr);
      if (is_zero_const(lhs)) return rhs;
      if (is_zero_const(rhs)) return lhs;
      return Expr::add(lhs, rhs);
    }
    case Kind::Pow: {
      Expr db = wirtinger_diff(f.child(0), k, conjugated);
      if (is_zero_const(db)) return Expr::constant(0.0);
      const ComplexValue& c = f.const_value();
      if (c.is_zero()) return Expr::constant(0.0);
      Expr factor = Expr::mul(Expr::constant(c),
                              Expr::pow(f.child(0), c - ComplexValue(1.0)));
      return Expr::mul(factor, db);
    }
    case Kind::Exp: {
      Expr de = wirtinger_diff(f.child(0), k, conjugated);
      if (is_zero_const(de)) return Expr::constant(0.0);
      return Expr::mul(f, de);
    }
    case Kind::Log: {
      Expr de = wirtinger_diff(f.child(0), k, conjugated);
      if (is_zero_const(de)) return Expr::constant(0.0);
      return Expr::mul(Expr::pow(f.child(0), ComplexValue(-1.0)), de);
    }
    case Kind::Conj:
      return Expr::conj(wirtinger_diff(f.child(0), k, !conjugated));
    case Kind::Abs: {
      // |e| = (e e*)^{1/2}
      Expr rewritten = Expr::pow(Expr::mul(f.child(0), Expr::conj(f.child(0))),
                                 ComplexValue(0.5));
      return wirtinger_diff(rewritten, k, conjugated);
    }
    case Kind::Re: {
      Expr rewritten = Expr::mul(Expr::constant(0.5),
                                 Expr::add(f.child(0), Expr::conj(f.child(0))));
      return wirtinger_diff(rewritten, k, conjugated);
    }
    case Kind::Im: {
      Expr rewritten =
          Expr::mul(Expr::constant(ComplexValue(0.0, -0.5)),
                    Expr::sub(f.child(0), Expr::conj(f.child(0))));
      return wirtinger_diff(rewritten, k, conjugated);
    }
    case Kind::Sgn:
      return Expr::constant(0.0);
  }
  throw EvalError("corrupt expression node");
}

Expr substitute_vars(const Expr& f, std::span<const Expr> replacement) {
  switch (f.kind()) {
    case Kind::Var: {
      int k = f.var_index();
      if (static_cast<std::size_t>(k) > replacement.size())
        throw EvalError("substitution does not cover variable index " + std::to_string(k));
      return replacement[static_cast<std::size_t>(k - 1)];
    }
    case Kind::Const:
    case Kind::Time:
    case Kind::Param:
      return f;
    case Kind::Pow:
      return Expr::pow(substitute_vars(f.child(0), replacement), f.const_value());
    case Kind::Add:
      return Expr::add(substitute_vars(f.child(0), replacement),
                       substitute_vars(f.child(1), replacement));
    case Kind::Mul:
      return Expr::mul(substitute_vars(f.child(0), replacement),
                       substitute_vars(f.child(1), replacement));
    case Kind::Neg:
      return Expr::neg(substitute_vars(f.child(0), replacement));
    case Kind::Exp:
      return Expr::exp(substitute_vars(f.child(0), replacement));
    case Kind::Log:
      return Expr::log(substitute_vars(f.child(0), replacement));
    case Kind::Abs:
      return Expr::abs(substitute_vars(f.child(0), replacement));
    case Kind::Conj:
      return Expr::conj(substitute_vars(f.child(0), replacement));
    case Kind::Re:
      return Expr::re(substitute_vars(f.child(0), replacement));
    case Kind::Im:
      return Expr::im(substitute_vars(f.child(0), replacement));
    case Kind::Sgn:
      return Expr::sgn(substitute_vars(f.child(0), replacement));
  }
  throw EvalError("corrupt expression node");
}

namespace {

// Syntactic realness, used to guard log(exp e) -> e (Im e = 0 keeps the
// principal branch an exact inverse).
bool definitely_real(const Expr& e) {
  switch (e.kind()) {
    case Kind::Const:
      return e.const_value().is_real();
    case Kind::Time:
      return true;
    case Kind::Var:
    case Kind::Param:
    case Kind::Log:
    case Kind::Conj:
      return false;
    case Kind::Abs:
    case Kind::Re:
    case Kind::Im:
      return true;
    case Kind::Sgn:
      return definitely_real(e.child(0));
    case Kind::Add:
    case Kind::Mul:
      return definitely_real(e.child(0)) && definitely_real(e.child(1));
    case Kind::Neg:
    case Kind::Exp:
      return definitely_real(e.child(0));
    case Kind::Pow:
      return definitely_real(e.child(0)) && e.const_value().is_small_int() &&
             e.const_value().re() >= 0.0;
  }
  return false;
}

void flatten_add(const Expr& e, std::vector<Expr>& terms, bool negate) {
  if (e.kind() == Kind::Add) {
    flatten_add(e.child(0), terms, negate);
    flatten_add(e.child(1), terms, negate);
    return;
  }
  if (e.kind() == Kind::Neg) {
    flatten_add(e.child(0), terms, !negate);
    return;
  }
  terms.push_back(negate ? Expr::neg(e) : e);
}

void flatten_mul(const Expr& e, std::vector<Expr>& factors) {
  if (e.kind() == Kind::Mul) {
    flatten_mul(e.child(0), factors);
    flatten_mul(e.child(1), factors);
    return;
  }
  factors.push_back(e);
}

Expr rebuild_add(std::vector<Expr> terms) {
  ComplexValue c(0.0);
  std::vector<Expr> rest;
  for (Expr& t : terms) {
    if (t.kind() == Kind::Const)
      c = c + t.const_value();
    else
      rest.push_back(std::move(t));
  }
  Expr acc = rest.empty() ? Expr::constant(c) : rest[0];
  for (std::size_t i = 1; i < rest.size(); ++i) acc = Expr::add(acc, rest[i]);
  if (!rest.empty() && !c.is_zero()) acc = Expr::add(acc, Expr::constant(c));
  return acc;
}

Expr rebuild_mul(std::vector<Expr> factors) {
  ComplexValue c(1.0);
  std::vector<Expr> rest;
  for (Expr& f : factors) {
    if (f.kind() == Kind::Const)
      c = c * f.const_value();
    else
      rest.push_back(std::move(f));
  }
  if (c.is_zero()) return Expr::constant(0.0);
  Expr acc = rest.empty() ? Expr::constant(c) : rest[0];
  for (std::size_t i = 1; i < rest.size(); ++i) acc = Expr::mul(acc, rest[i]);
  if (!rest.empty() && c != ComplexValue(1.0)) acc = Expr::mul(Expr::constant(c), acc);
  return acc;
}

// Merge a * b^{c1} * b^{c2} -> a * b^{c1+c2}; principal powers with a shared
// base multiply exactly.
void merge_powers(std::vector<Expr>& factors) {
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i].kind() != Kind::Pow) continue;
    for (std::size_t j = i + 1; j < factors.size();) {
      if (factors[j].kind() == Kind::Pow &&
          structurally_equal(factors[i].child(0), factors[j].child(0))) {
        factors[i] = Expr::pow(factors[i].child(0),
                               factors[i].const_value() + factors[j].const_value());
        factors.erase(factors.begin() + static_cast<std::ptrdiff_t>(j));
      } else {
        ++j;
      }
    }
  }
}

}  // namespace

Expr simplify(const Expr& f) {
  // Children first.
  Expr e = f;
  switch (f.kind()) {
    case Kind::Const:
    case Kind::Var:
    case Kind::Time:
    case Kind::Param:
      return f;
    case Kind::Add:
      e = Expr::add(simplify(f.child(0)), simplify(f.child(1)));
      break;
    case Kind::Mul:
      e = Expr::mul(simplify(f.child(0)), simplify(f.child(1)));
      break;
    case Kind::Neg:
      e = Expr::neg(simplify(f.child(0)));
      break;
    case Kind::Pow:
      e = Expr::pow(simplify(f.child(0)), f.const_value());
      break;
    case Kind::Exp:
      e = Expr::exp(simplify(f.child(0)));
      break;
    case Kind::Log:
      e = Expr::log(simplify(f.child(0)));
      break;
    case Kind::Abs:
      e = Expr::abs(simplify(f.child(0)));
      break;
    case Kind::Conj:
      e = Expr::conj(simplify(f.child(0)));
      break;
    case Kind::Re:
      e = Expr::re(simplify(f.child(0)));
      break;
    case Kind::Im:
      e = Expr::im(simplify(f.child(0)));
      break;
    case Kind::Sgn:
      e = Expr::sgn(simplify(f.child(0)));
      break;
  }

  // Fold unary functions of constants away from NaN.
  if (e.child_count() == 1 && e.child(0).kind() == Kind::Const) {
    const ComplexValue& c = e.child(0).const_value();
    ComplexValue folded = ComplexValue::nan();
    switch (e.kind()) {
      case Kind::Exp: folded = cv_exp(c); break;
      case Kind::Log: folded = cv_log(c); break;
      case Kind::Abs: folded = cv_abs(c); break;
      case Kind::Conj: folded = cv_conj(c); break;
      case Kind::Re: folded = cv_re(c); break;
      case Kind::Im: folded = cv_im(c); break;
      case Kind::Sgn: folded = cv_sgn(c); break;
      default: break;
    }
    if (!folded.is_nan()) return Expr::constant(folded);
  }

  switch (e.kind()) {
    case Kind::Add: {
      std::vector<Expr> terms;
      flatten_add(e, terms, false);
      return rebuild_add(std::move(terms));
    }
    case Kind::Mul: {
      std::vector<Expr> factors;
      flatten_mul(e, factors);
      merge_powers(factors);
      return rebuild_mul(std::move(factors));
    }
    case Kind::Neg:
      if (e.child(0).kind() == Kind::Neg) return e.child(0).child(0);
      return e;
    case Kind::Pow: {
      if (e.const_value().is_zero()) return Expr::constant(1.0);
      if (e.const_value() == ComplexValue(1.0)) return e.child(0);
      return e;
    }
    case Kind::Exp:
      if (e.child(0).kind() == Kind::Log) return e.child(0).child(0);
      return e;
    case Kind::Log:
      if (e.child(0).kind() == Kind::Exp && definitely_real(e.child(0).child(0)))
        return e.child(0).child(0);
      return e;
    default:
      return e;
  }
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_const(const ComplexValue& v, bool bare_real_ok) {
  if (v.is_nan()) return "(0^-1)";  // no literal form; evaluates to NaN
  if (v.im() == 0.0) {
    std::string s = format_double(v.re());
    if (v.re() < 0.0 && !bare_real_ok) return "(" + s + ")";
    return s;
  }
  std::string im;
  if (v.im() == 1.0)
    im = "i";
  else if (v.im() == -1.0)
    im = "-i";
  else
    im = format_double(v.im()) + "*i";
  if (v.re() == 0.0) return "(" + im + ")";
  if (v.im() > 0.0) return "(" + format_double(v.re()) + " + " + im + ")";
  if (v.im() == -1.0) return "(" + format_double(v.re()) + " - i)";
  return "(" + format_double(v.re()) + " - " + format_double(-v.im()) + "*i)";
}

int precedence(Kind k) {
  switch (k) {
    case Kind::Add:
      return 1;
    case Kind::Mul:
      return 2;
    case Kind::Neg:
      return 3;
    case Kind::Pow:
      return 4;
    default:
      return 5;
  }
}

void print(const Expr& e, int dim, int parent_prec, std::string& out) {
  int prec = precedence(e.kind());
  bool need_parens = prec < parent_prec;
  if (e.kind() == Kind::Const) {
    out += format_const(e.const_value(), parent_prec <= 1);
    return;
  }
  if (need_parens) out += "(";
  switch (e.kind()) {
    case Kind::Var:
      out += (dim == 1 && e.var_index() == 1) ? "id" : "id" + std::to_string(e.var_index());
      break;
    case Kind::Time:
      out += "t";
      break;
    case Kind::Param:
      out += "theta." + e.param_name();
      break;
    case Kind::Add: {
      print(e.child(0), dim, 1, out);
      const Expr& r = e.child(1);
      if (r.kind() == Kind::Neg) {
        out += " - ";
        print(r.child(0), dim, 2, out);
      } else if (r.kind() == Kind::Const && r.const_value().is_real() &&
                 r.const_value().re() < 0.0) {
        out += " - ";
        out += format_double(-r.const_value().re());
      } else {
        out += " + ";
        print(r, dim, 2, out);
      }
      break;
    }
    case Kind::Mul:
      print(e.child(0), dim, 2, out);
      out += " * ";
      print(e.child(1), dim, 3, out);
      break;
    case Kind::Neg:
      out += "-";
      print(e.child(0), dim, 3, out);
      break;
    case Kind::Pow: {
      print(e.child(0), dim, 5, out);
      out += "^";
      const ComplexValue& c = e.const_value();
      if (c.is_real()) {
        out += format_double(c.re());
      } else {
        out += format_const(c, false);
      }
      break;
    }
    case Kind::Exp:
    case Kind::Log:
    case Kind::Abs:
    case Kind::Conj:
    case Kind::Re:
    case Kind::Im:
    case Kind::Sgn: {
      static const char* names[] = {"exp", "log", "abs", "conj", "re", "im", "sgn"};
      int idx = static_cast<int>(e.kind()) - static_cast<int>(Kind::Exp);
      out += names[idx];
      out += "(";
      print(e.child(0), dim, 0, out);
      out += ")";
      break;
    }
    default:
      break;
  }
  if (need_parens) out += ")";
}

}  // namespace

std::string to_string(const Expr& f, int dim) {
  std::string out;
  print(f, dim, 0, out);
  return out;
}

}  // namespace emery
