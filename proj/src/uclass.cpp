#include "emery/uclass.hpp"

#include <algorithm>
#include <cmath>

namespace emery {

namespace {

constexpr double kZeroTol = 1e-12;
constexpr double kGrowthVsGrid = 100.0;  // t in {1e-3, 1e-6} vs t = T/64
constexpr double kGrowthDecades = 5.0;   // t = 1e-6 vs t = 1e-3

std::vector<double> probe_times(const RepFunction& f, double horizon) {
  if (!f.time_dependent) return {horizon / 2.0};
  std::vector<double> ts;
  for (int k = 1; k <= 64; ++k) ts.push_back(horizon * k / 64.0);
  ts.push_back(1e-3);
  ts.push_back(1e-6);
  return ts;
}

bool contains_sgn(const Expr& e) {
  if (e.kind() == Expr::Kind::Sgn) return true;
  for (int i = 0; i < e.child_count(); ++i)
    if (contains_sgn(e.child(i))) return true;
  return false;
}

// Functions built on sgn treat their argument as real (the derivative
// convention takes sgn locally constant), so their probes stay on the real
// axes; everything else gets genuinely complex directions.
std::vector<std::vector<ComplexValue>> probe_directions(const RepFunction& f) {
  int d = f.dim_in;
  bool real_only = false;
  for (const Expr& c : f.components) real_only = real_only || contains_sgn(c);

  std::vector<std::vector<ComplexValue>> dirs;
  dirs.reserve(16);
  const double pi = std::acos(-1.0);
  double norm = std::sqrt(static_cast<double>(d));
  for (int m = 0; m < 16; ++m) {
    std::vector<ComplexValue> v(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      double phase = 2.0 * pi * (m + 7.0 * k) / 16.0;
      v[static_cast<std::size_t>(k)] =
          real_only ? ComplexValue((m + k) % 2 == 0 ? 1.0 / norm : -1.0 / norm)
                    : ComplexValue(std::cos(phase) / norm, std::sin(phase) / norm);
    }
    dirs.push_back(std::move(v));
  }
  return dirs;
}

double jet_magnitude(const WirtingerJet& jet) {
  double m = std::max(jet.grad_z.max_abs(), jet.grad_zbar.max_abs());
  for (const CMat& h : jet.hess) m = std::max(m, h.max_abs());
  return m;
}

struct TimeSeries {
  std::vector<double> t;
  std::vector<double> value;

  double at(double t0) const {
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] == t0) return value[i];
    return 0.0;
  }
};

// The t-downward growth surrogate for local boundedness.
bool unbounded_towards_zero(const TimeSeries& s, double horizon, std::string& witness,
                            std::vector<double>& singular_times) {
  if (s.t.size() < 2) return false;
  double ref = s.at(horizon / 64.0);
  double v3 = s.at(1e-3), v6 = s.at(1e-6);
  if (v3 > kGrowthVsGrid * std::max(ref, 1e-12) || v6 > kGrowthVsGrid * std::max(ref, 1e-12)) {
    witness = "growth vs t = T/64 exceeds factor 100";
    if (v3 > kGrowthVsGrid * std::max(ref, 1e-12)) singular_times.push_back(1e-3);
    if (v6 > kGrowthVsGrid * std::max(ref, 1e-12)) singular_times.push_back(1e-6);
    return true;
  }
  if (v6 > kGrowthDecades * std::max(v3, 1e-12)) {
    witness = "growth from t = 1e-3 to t = 1e-6 exceeds factor 5";
    singular_times.push_back(1e-6);
    return true;
  }
  return false;
}

std::string fmt_t(double t) { return "t = " + std::to_string(t); }

}  // namespace

UReport check_u(const RepFunction& f, double horizon) {
  if (horizon <= 0.0) throw std::invalid_argument("horizon must be positive");
  UReport report;
  report.checks = {UCheck{1, true, "", 0.0}, UCheck{2, true, "", 0.0},
                   UCheck{3, true, "", 0.0}, UCheck{4, true, "", 0.0}};

  std::vector<double> ts = probe_times(f, horizon);
  std::vector<ComplexValue> zero(static_cast<std::size_t>(f.dim_in), ComplexValue(0.0));
  auto dirs = probe_directions(f);

  JetEvaluator jets(f);
  TimeSeries jet_norms, remainder_sups;

  for (double t : ts) {
    // (1) zero value at zero
    for (const Expr& c : f.components) {
      ComplexValue v = eval(c, t, zero);
      double mag = cv_norm(v);
      if (mag > kZeroTol) {
        report.checks[0].pass = false;
        report.checks[0].witness = fmt_t(t);
        report.checks[0].bound = std::max(report.checks[0].bound, mag);
      }
    }

    // (2) twice real-differentiable at zero
    WirtingerJet jet;
    bool have_jet = false;
    try {
      jet = jets.at(t);
      have_jet = true;
    } catch (const NonDifferentiableAtZero& e) {
      report.checks[1].pass = false;
      if (report.checks[1].witness.empty())
        report.checks[1].witness = fmt_t(t) + ", " + e.what();
      report.time_singularities.push_back(t);
    }
    if (!have_jet) continue;

    jet_norms.t.push_back(t);
    jet_norms.value.push_back(jet_magnitude(jet));

    // (4) remainder quotient over the dyadic shells
    HatJet hat = hat_gradient(jet);
    double sup = 0.0;
    bool shell_failed = false;
    for (int j = 1; j <= 12 && !shell_failed; ++j) {
      double r = std::ldexp(1.0, -j);
      for (const auto& dir : dirs) {
        std::vector<ComplexValue> x(static_cast<std::size_t>(f.dim_in));
        for (int k = 0; k < f.dim_in; ++k)
          x[static_cast<std::size_t>(k)] =
              ComplexValue(r * dir[static_cast<std::size_t>(k)].re(),
                           r * dir[static_cast<std::size_t>(k)].im());
        std::vector<ComplexValue> fx = eval_rep(f, t, x);
        double num2 = 0.0;
        bool nan_hit = false;
        for (int m = 0; m < f.dim_out; ++m) {
          if (fx[static_cast<std::size_t>(m)].is_nan()) {
            nan_hit = true;
            break;
          }
          Cx lin(0.0);
          for (int k = 0; k < f.dim_in; ++k)
            lin += hat.grad(m, 2 * k) * x[static_cast<std::size_t>(k)].re() +
                   hat.grad(m, 2 * k + 1) * x[static_cast<std::size_t>(k)].im();
          Cx resid = fx[static_cast<std::size_t>(m)].std() - lin;
          num2 += std::norm(resid);
        }
        if (nan_hit) {
          report.checks[3].pass = false;
          report.checks[3].witness = fmt_t(t) + ", |x| = " + std::to_string(r) + " hit NaN";
          shell_failed = true;
          break;
        }
        sup = std::max(sup, std::sqrt(num2) / (r * r));
      }
    }
    if (!shell_failed) {
      remainder_sups.t.push_back(t);
      remainder_sups.value.push_back(sup);
      report.remainder_bound = std::max(report.remainder_bound, sup);
    } else {
      report.time_singularities.push_back(t);
    }
  }

  // (3) local boundedness of the jets as t drops to zero
  if (f.time_dependent) {
    std::string witness;
    if (unbounded_towards_zero(jet_norms, horizon, witness, report.time_singularities)) {
      report.checks[2].pass = false;
      report.checks[2].witness = witness;
    }
    if (report.checks[3].pass &&
        unbounded_towards_zero(remainder_sups, horizon, witness, report.time_singularities)) {
      report.checks[3].pass = false;
      report.checks[3].witness = "remainder quotient: " + witness;
    }
  }
  if (!jet_norms.value.empty())
    report.checks[2].bound = *std::max_element(jet_norms.value.begin(), jet_norms.value.end());
  report.checks[3].bound = report.remainder_bound;

  report.passes = report.checks[0].pass && report.checks[1].pass && report.checks[2].pass &&
                  report.checks[3].pass;
  return report;
}

const char* to_string(RejectionCode code) {
  switch (code) {
    case RejectionCode::OuterNotDifferentiable:
      return "OuterNotDifferentiable";
    case RejectionCode::LocalBoundedness:
      return "LocalBoundedness";
    case RejectionCode::ZeroValueViolated:
      return "ZeroValueViolated";
    case RejectionCode::RemainderUnbounded:
      return "RemainderUnbounded";
  }
  return "?";
}

namespace {

// Predicted jet of outer(inner) from the chain rule, compared against the jet
// of the syntactic composite.
double chain_rule_discrepancy(const RepFunction& outer, const RepFunction& inner,
                              const RepFunction& composed, double t) {
  WirtingerJet jo = jet_at_zero(outer, t);
  WirtingerJet ji = jet_at_zero(inner, t);
  WirtingerJet jc = jet_at_zero(composed, t);

  HatJet ho = hat_gradient(jo);
  HatJet hi = hat_gradient(ji);
  HatJet hc = hat_gradient(jc);

  CMat r_inner = real_lift_matrix(hi);                 // 2n x 2d, real entries
  CMat grad_pred = ho.grad * r_inner;                  // p x 2d
  double err = max_abs_diff(grad_pred, hc.grad);

  std::vector<CMat> inner_lift_hess = real_lift_hessians(hi);  // 2n entries of 2d x 2d
  CMat r_inner_t = r_inner.transpose();
  for (int m = 0; m < outer.dim_out; ++m) {
    CMat pred = r_inner_t * ho.hess[static_cast<std::size_t>(m)] * r_inner;
    for (int k = 0; k < 2 * inner.dim_out; ++k)
      pred = pred + ho.grad(m, k) * inner_lift_hess[static_cast<std::size_t>(k)];
    err = std::max(err, max_abs_diff(pred, hc.hess[static_cast<std::size_t>(m)]));
  }
  return err;
}

}  // namespace

std::variant<Composition, Rejection> compose_check(const RepFunction& outer,
                                                   const RepFunction& inner, double horizon) {
  if (outer.dim_in != inner.dim_out)
    throw std::invalid_argument("compose_check: outer expects " + std::to_string(outer.dim_in) +
                                " inputs but inner produces " + std::to_string(inner.dim_out));

  UReport r_outer = check_u(outer, horizon);
  UReport r_inner = check_u(inner, horizon);

  if (!r_outer.check(2).pass)
    return Rejection{RejectionCode::OuterNotDifferentiable, r_outer.check(2).witness};
  if (!r_outer.check(3).pass)
    return Rejection{RejectionCode::LocalBoundedness, "outer: " + r_outer.check(3).witness};
  if (!r_inner.check(3).pass)
    return Rejection{RejectionCode::LocalBoundedness, "inner: " + r_inner.check(3).witness};
  if (!r_inner.check(2).pass)
    return Rejection{RejectionCode::OuterNotDifferentiable,
                     "inner function is not twice differentiable at zero: " +
                         r_inner.check(2).witness};
  if (!r_outer.check(1).pass || !r_inner.check(1).pass)
    return Rejection{RejectionCode::ZeroValueViolated,
                     !r_outer.check(1).pass ? r_outer.check(1).witness : r_inner.check(1).witness};
  if (!r_outer.check(4).pass || !r_inner.check(4).pass)
    return Rejection{RejectionCode::RemainderUnbounded,
                     !r_outer.check(4).pass ? r_outer.check(4).witness : r_inner.check(4).witness};

  Composition comp;
  comp.composed = substitute(outer, inner);
  comp.report = check_u(comp.composed, horizon);
  double t_probe = comp.composed.time_dependent ? horizon / 2.0 : 0.0;
  comp.chain_rule_error = chain_rule_discrepancy(outer, inner, comp.composed, t_probe);
  return comp;
}

namespace {

Expr one_plus_var(int k) { return Expr::add(Expr::constant(1.0), Expr::var(k)); }

RepFunction rep1(Expr e) { return make_rep_function({std::move(e)}, 1); }
RepFunction rep2(Expr e) { return make_rep_function({std::move(e)}, 2); }

}  // namespace

RepFunction make_power(ComplexValue alpha) {
  return rep1(Expr::sub(Expr::pow(one_plus_var(1), alpha), Expr::constant(1.0)));
}

RepFunction make_yor(ComplexValue alpha, ComplexValue beta) {
  return rep2(Expr::sub(
      Expr::mul(Expr::pow(one_plus_var(1), alpha), Expr::pow(one_plus_var(2), beta)),
      Expr::constant(1.0)));
}

RepFunction make_exp_rep(ComplexValue alpha) {
  Expr arg = alpha == ComplexValue(1.0) ? Expr::var(1)
                                        : Expr::mul(Expr::constant(alpha), Expr::var(1));
  return rep1(Expr::sub(Expr::exp(std::move(arg)), Expr::constant(1.0)));
}

RepFunction make_log_rep() { return rep1(Expr::log(one_plus_var(1))); }

RepFunction make_abs_power(ComplexValue alpha) {
  return rep1(Expr::sub(Expr::pow(Expr::abs(one_plus_var(1)), alpha), Expr::constant(1.0)));
}

RepFunction make_signed_abs_power(ComplexValue alpha) {
  return rep1(Expr::sub(
      Expr::mul(Expr::sgn(one_plus_var(1)), Expr::pow(Expr::abs(one_plus_var(1)), alpha)),
      Expr::constant(1.0)));
}

RepFunction make_abs_rep() {
  return rep1(Expr::sub(Expr::abs(one_plus_var(1)), Expr::constant(1.0)));
}

RepFunction make_abs_yor(ComplexValue alpha, ComplexValue beta) {
  return rep2(Expr::sub(Expr::mul(Expr::pow(Expr::abs(one_plus_var(1)), alpha),
                                  Expr::pow(Expr::abs(one_plus_var(2)), beta)),
                        Expr::constant(1.0)));
}

RepFunction make_identity_rep() { return rep1(Expr::var(1)); }

RepFunction make_quadratic_rep() { return rep1(Expr::pow(Expr::var(1), ComplexValue(2.0))); }

std::vector<CatalogEntry> catalog() {
  std::vector<CatalogEntry> out;
  auto add = [&](std::string name, RepFunction fn, std::string domain, std::string identity) {
    CatalogEntry e;
    e.name = std::move(name);
    e.fn = std::move(fn);
    e.domain = std::move(domain);
    e.identity = std::move(identity);
    out.push_back(std::move(e));
  };

  ComplexValue two(2.0), minus_one(-1.0), half(0.5), one(1.0), three(3.0);

  add("power", make_power(two),
      "jumps != -1 for non-positive integer exponents; Re E(X) > 0 for non-integer exponents",
      "E(X)^a = E(((1+id)^a - 1) o X)");
  out.back().alpha = two;
  out.back().has_alpha = true;

  add("yor", make_yor(two, minus_one), "componentwise as for 'power'",
      "E(X1)^a E(X2)^b = E(((1+id1)^a (1+id2)^b - 1) o X)");
  out.back().alpha = two;
  out.back().beta = minus_one;
  out.back().has_alpha = out.back().has_beta = true;

  add("exp", make_exp_rep(one), "none", "L(e^X) = (e^{id} - 1) o X");
  out.back().alpha = one;
  out.back().has_alpha = true;

  add("log", make_log_rep(), "jumps != -1", "E(X) = e^{log(1+id) o X}");

  add("abs-power", make_abs_power(half), "jumps != -1 unless a > 0",
      "|E(X)|^a = E((|1+id|^a - 1) o X)");
  out.back().alpha = half;
  out.back().has_alpha = true;

  add("signed-abs-power", make_signed_abs_power(three), "real-valued models; jumps != -1",
      "sgn(E(X))|E(X)|^a = E((sgn(1+id)|1+id|^a - 1) o X)");
  out.back().alpha = three;
  out.back().has_alpha = true;

  add("abs", make_abs_rep(), "none", "|E(X)| = E((|1+id| - 1) o X)");

  add("abs-yor", make_abs_yor(two, minus_one), "jumps != -1 unless exponent > 0",
      "|E(X1)|^a |E(X2)|^b = E((|1+id1|^a |1+id2|^b - 1) o X)");
  out.back().alpha = two;
  out.back().beta = minus_one;
  out.back().has_alpha = out.back().has_beta = true;

  add("identity", make_identity_rep(), "none", "X = X0 + id o X");

  add("quadratic", make_quadratic_rep(), "none", "[X,X] = id^2 o X");

  return out;
}

IteratedExp iterate_exp(ComplexValue alpha, int k) {
  if (k < 1 || k > 8) throw std::invalid_argument("iterate_exp requires 1 <= k <= 8");
  RepFunction outer = make_rep_function(
      {Expr::sub(Expr::exp(Expr::mul(Expr::constant(alpha), Expr::var(1))), Expr::constant(1.0))},
      1);
  RepFunction fn = outer;
  for (int i = 1; i < k; ++i) fn = substitute(outer, fn);

  Cx a = alpha.std();
  Cx d1 = std::pow(a, k);
  Cx geo;
  if (std::abs(a - Cx(1.0)) < 1e-14) {
    geo = Cx(static_cast<double>(k));
  } else {
    geo = (std::pow(a, k) - Cx(1.0)) / (a - Cx(1.0));
  }
  Cx d2 = std::pow(a, k + 1) * geo;

  IteratedExp result;
  result.fn = std::move(fn);
  result.first_derivative = d1;
  result.second_derivative = d2;
  return result;
}

}  // namespace emery
