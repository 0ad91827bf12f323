// Acceptance suite: one line per criterion, nonzero exit when any fails.
// The CLI binary and model directory come in through EMERY_BIN / EMERY_MODELS
// (set by ctest) for the end-to-end exit-code and byte-identity checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "emery/json_io.hpp"
#include "emery/parser.hpp"
#include "emery/paths.hpp"
#include "emery/rng.hpp"

using namespace emery;

namespace {

int failures = 0;

void criterion(int n, const std::string& name, const std::function<bool(std::string&)>& body) {
  auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s  criterion %2d  %-28s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", n, name.c_str(),
              secs, detail.empty() ? "" : "  -- ", detail.c_str());
  if (!ok) ++failures;
}

LevyModel canonical_model() {
  LevyModel m;
  m.dim = 1;
  m.drift = {ComplexValue(0.1)};
  m.cov_hat = RMat(2);
  m.cov_hat(0, 0) = 0.09;
  m.atoms = {JumpAtom{{ComplexValue(1.0)}, 0.5}};
  return m;
}

LevyModel drifted_bm(double mu, double sigma) {
  LevyModel m;
  m.dim = 1;
  m.drift = {ComplexValue(mu)};
  m.cov_hat = RMat(2);
  m.cov_hat(0, 0) = sigma * sigma;
  return m;
}

LevyModel two_component_jd() {
  LevyModel m;
  m.dim = 2;
  m.drift = {ComplexValue(0.05), ComplexValue(-0.02)};
  m.cov_hat = RMat(4);
  m.cov_hat(0, 0) = 0.04;
  m.cov_hat(2, 2) = 0.09;
  m.cov_hat(0, 2) = m.cov_hat(2, 0) = 0.03;
  m.atoms = {JumpAtom{{ComplexValue(0.5), ComplexValue(0.0)}, 1.0},
             JumpAtom{{ComplexValue(0.0), ComplexValue(0.5)}, 1.0}};
  return m;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// Error-decay clause: either the levels shrink by a factor in [1.5, 3] per
// halving, or the discrepancy already sits at the rounding floor (the scheme
// is exact for constant-jet identities; see the repository notes).
bool order_or_exact(const std::vector<double>& levels, std::string& detail) {
  bool exact = true;
  for (double e : levels) exact = exact && e <= 1e-10;
  if (exact) {
    detail += " exact at rounding floor (" + fmt(levels.front()) + ")";
    return true;
  }
  bool ok = true;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    if (levels[i + 1] <= 0.0) return exact;
    double ratio = levels[i] / levels[i + 1];
    detail += " ratio " + fmt(ratio);
    ok = ok && ratio >= 1.5 && ratio <= 3.0;
  }
  return ok;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const char* bin = std::getenv("EMERY_BIN");
  if (!bin) return -999;
  std::string cmd = std::string(bin) + " " + args;
  if (output) {
    cmd += " > /tmp/emery_cli_out.txt 2>&1";
  } else {
    cmd += " > /dev/null 2>&1";
  }
  int rc = std::system(cmd.c_str());
  if (output) {
    std::ifstream in("/tmp/emery_cli_out.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WEXITSTATUS(rc);
}

}  // namespace

int main() {
  // 1. Wirtinger correctness over the catalog
  criterion(1, "wirtinger vs finite diff", [](std::string& detail) {
    Rng rng(313);
    double worst = 0.0;
    for (const CatalogEntry& entry : catalog()) {
      bool real_domain = entry.name.rfind("signed", 0) == 0;
      const RepFunction& fn = entry.fn;
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<ComplexValue> x(static_cast<std::size_t>(fn.dim_in));
        for (int j = 0; j < fn.dim_in; ++j) {
          double r = 0.5 * std::sqrt(rng.uniform01());
          double a = 2.0 * std::acos(-1.0) * rng.uniform01();
          x[static_cast<std::size_t>(j)] =
              real_domain ? ComplexValue(r * std::cos(a)) : ComplexValue(r * std::cos(a), r * std::sin(a));
        }
        for (int k = 1; k <= fn.dim_in; ++k)
          for (const Expr& comp : fn.components) {
            auto val = [&](double dre, double dim_) {
              std::vector<ComplexValue> xx = x;
              xx[static_cast<std::size_t>(k - 1)] =
                  ComplexValue(x[static_cast<std::size_t>(k - 1)].re() + dre,
                               x[static_cast<std::size_t>(k - 1)].im() + dim_);
              return eval(comp, 0.0, xx).std();
            };
            double h = 1e-6;
            Cx d_re = (val(h, 0) - val(-h, 0)) / (2.0 * h);
            Cx d_im = (val(0, h) - val(0, -h)) / (2.0 * h);
            Cx i(0.0, 1.0);
            Cx got_z = eval(wirtinger_diff(comp, k, false), 0.0, x).std();
            Cx got_zb = eval(wirtinger_diff(comp, k, true), 0.0, x).std();
            auto rel = [](Cx got, Cx want) {
              return std::abs(got - want) / std::max(1.0, std::abs(want));
            };
            double err = real_domain
                             ? rel(got_z + got_zb, d_re)
                             : std::max(rel(got_z, 0.5 * (d_re - i * d_im)),
                                        rel(got_zb, 0.5 * (d_re + i * d_im)));
            worst = std::max(worst, err);
          }
      }
    }
    detail = "max rel err " + fmt(worst);
    return worst <= 1e-6;
  });

  // 2. Iterated-composition jets against the closed form
  criterion(2, "iterated composition jets", [](std::string& detail) {
    double worst = 0.0;
    for (ComplexValue alpha :
         {ComplexValue(1.0), ComplexValue(2.0), ComplexValue(-1.0), ComplexValue(0.5, 0.5)}) {
      for (int k = 1; k <= 6; ++k) {
        IteratedExp it = iterate_exp(alpha, k);
        WirtingerJet jet = jet_at_zero(it.fn);
        worst = std::max(worst, std::abs(jet.grad_z(0, 0) - it.first_derivative));
        worst = std::max(worst, std::abs(jet.hess[0](0, 0) - it.second_derivative));
      }
    }
    detail = "max err " + fmt(worst);
    return worst <= 1e-9;
  });

  // 3. Drifted-Brownian closed form through the path engine
  criterion(3, "iterated on drifted BM", [](std::string& detail) {
    LevyModel bm = drifted_bm(0.1, 0.2);
    bool ok = true;
    for (int k : {1, 2}) {
      VerifyParams params;
      params.alpha = ComplexValue(2.0);
      params.k = k;
      double dt = std::ldexp(1.0, -10);
      VerificationReport base = verify_identity("iterated", bm, params, 64, dt, 2026);
      VerificationReport half = verify_identity("iterated", bm, params, 64, dt / 2, 2026);
      detail += " k=" + std::to_string(k) + " sup " + fmt(base.max_sup_discrepancy);
      ok = ok && base.max_sup_discrepancy <= 5e-3;
      std::vector<double> levels = {base.max_sup_discrepancy, half.max_sup_discrepancy};
      std::string order_note;
      ok = ok && order_or_exact(levels, order_note);
      detail += order_note;
    }
    return ok;
  });

  // 4. Levy-Khintchine exponent and the Monte Carlo characteristic function
  criterion(4, "levy exponent + MC cf", [](std::string& detail) {
    LevyModel m = canonical_model();
    ComplexValue kappa = levy_exponent(m, parse("exp(i * id) - 1", 1));
    Cx i(0.0, 1.0);
    Cx oracle = i * 0.1 - 0.5 * 0.09 + 0.5 * (std::exp(i) - 1.0 - i);
    double closed_err = std::abs(kappa.std() - oracle);
    detail = "closed-form err " + fmt(closed_err);
    if (closed_err > 1e-12) return false;

    int n = 200000;
    PathEnsemble ens = simulate(m, 1.0, 1.0, n, 11);
    double sum_re = 0.0, sum_im = 0.0, sq_re = 0.0, sq_im = 0.0;
    for (const Path& p : ens.paths) {
      Realized r = realize(p);
      Cx v = std::exp(i * r.grid.back()[0]);
      sum_re += v.real();
      sum_im += v.imag();
      sq_re += v.real() * v.real();
      sq_im += v.imag() * v.imag();
    }
    double mean_re = sum_re / n, mean_im = sum_im / n;
    double se_re = std::sqrt((sq_re / n - mean_re * mean_re) / n);
    double se_im = std::sqrt((sq_im / n - mean_im * mean_im) / n);
    ComplexValue analytic = char_fn(m, {1.0}, 1.0);
    double z_re = std::abs(analytic.re() - mean_re) / se_re;
    double z_im = std::abs(analytic.im() - mean_im) / se_im;
    detail += ", MC z-scores " + fmt(z_re) + " / " + fmt(z_im);
    return z_re <= 3.0 && z_im <= 3.0;
  });

  // 5. Mellin transform and the Monte Carlo second moment
  criterion(5, "mellin + MC moment", [](std::string& detail) {
    LevyModel m = canonical_model();
    // hand evaluation: 2b + sigma^2 + rate * ((1+x)^2 - 1 - 2x) at x = 1
    double kappa = 2 * 0.1 + 0.09 + 0.5 * (4.0 - 1.0 - 2.0);
    ComplexValue got = mellin(m, ComplexValue(2.0), 1.0, false);
    double closed_err = std::abs(got.std() - Cx(std::exp(kappa)));
    detail = "closed-form err " + fmt(closed_err);
    if (closed_err > 1e-12) return false;

    int n = 200000;
    PathEnsemble ens = simulate(m, 1.0, 1.0, n, 13);
    double sum = 0.0, sq = 0.0;
    for (const Path& p : ens.paths) {
      Realized r = realize(stochastic_exponential(p));
      double v = std::norm(r.grid.back()[0]);
      sum += v;
      sq += v * v;
    }
    double mean = sum / n;
    double se = std::sqrt((sq / n - mean * mean) / n);
    double z = std::abs(mean - std::exp(kappa)) / se;
    detail += ", MC z-score " + fmt(z);
    return z <= 3.0;
  });

  // 6. Yor identities with the error-decay clause
  criterion(6, "yor + abs-yor", [](std::string& detail) {
    LevyModel m = two_component_jd();
    bool ok = true;
    struct Cfg {
      const char* name;
      ComplexValue a, b;
    } cfgs[] = {{"yor", ComplexValue(1.0), ComplexValue(1.0)},
                {"abs-yor", ComplexValue(2.0), ComplexValue(-1.0)}};
    for (const Cfg& cfg : cfgs) {
      VerifyParams params;
      params.alpha = cfg.a;
      params.beta = cfg.b;
      params.estimate_order = true;
      double dt = std::ldexp(1.0, -8);  // levels 2^-8, 2^-9, 2^-10
      VerificationReport r = verify_identity(cfg.name, m, params, 64, dt, 303);
      double at_2_9 = r.sup_by_level.size() > 1 ? r.sup_by_level[1] : r.max_sup_discrepancy;
      detail += std::string(" ") + cfg.name + " sup@2^-9 " + fmt(at_2_9);
      ok = ok && at_2_9 <= 50.0 * std::ldexp(1.0, -9) && r.excluded_paths == 0;
      std::string order_note;
      ok = ok && order_or_exact(r.sup_by_level, order_note);
      detail += order_note;
    }
    return ok;
  });

  // 7. Exponential / logarithm identities
  criterion(7, "exp-log + log-exp", [](std::string& detail) {
    LevyModel m = canonical_model();
    double dt = std::ldexp(1.0, -9);
    VerifyParams params;
    VerificationReport el = verify_identity("exp-log", m, params, 64, dt, 404);
    VerificationReport le = verify_identity("log-exp", m, params, 64, dt, 404);
    detail = "exp-log sup " + fmt(el.max_sup_discrepancy) + " jump err " +
             fmt(el.max_jump_increment_error) + ", log-exp sup " + fmt(le.max_sup_discrepancy);
    return el.max_jump_increment_error <= 1e-12 && el.max_sup_discrepancy <= 50.0 * dt &&
           le.max_jump_increment_error <= 1e-12 && le.max_sup_discrepancy <= 50.0 * dt;
  });

  // 8. Composition theorem over catalog pairs
  criterion(8, "composition pairs", [](std::string& detail) {
    LevyModel m = canonical_model();
    std::vector<std::pair<std::string, std::string>> pairs = {
        {"(1+id)^2 - 1", "exp(id) - 1"}, {"exp(id) - 1", "id"},
        {"log(1 + id)", "(1+id)^2 - 1"}, {"(1+id)^2 - 1", "log(1 + id)"},
        {"abs(1 + id) - 1", "exp(id) - 1"}, {"id^2", "(1+id)^2 - 1"}};
    double dt = std::ldexp(1.0, -9);
    double worst_sup = 0.0, worst_chain = 0.0;
    for (const auto& [outer, inner] : pairs) {
      auto gate = compose_check(parse(outer, 1), parse(inner, 1));
      if (!std::holds_alternative<Composition>(gate)) {
        detail = "gate rejected " + outer + " after " + inner;
        return false;
      }
      worst_chain = std::max(worst_chain, std::get<Composition>(gate).chain_rule_error);
      VerifyParams params;
      params.outer = outer;
      params.inner = inner;
      VerificationReport r = verify_identity("composition", m, params, 32, dt, 505);
      worst_sup = std::max(worst_sup, r.max_sup_discrepancy);
    }
    detail = "worst sup " + fmt(worst_sup) + ", worst chain-rule err " + fmt(worst_chain);
    return worst_sup <= 50.0 * dt && worst_chain <= 1e-9;
  });

  // 9. Negative controls, including CLI exit codes
  criterion(9, "negative controls", [](std::string& detail) {
    auto bad1 = compose_check(parse("id^(1/3)", 1), parse("id^3", 1));
    bool ok = std::holds_alternative<Rejection>(bad1) &&
              std::get<Rejection>(bad1).code == RejectionCode::OuterNotDifferentiable;
    auto bad2 = compose_check(parse("t^(-1/3) * id", 1), parse("id + id^2 * t^(-2/3)", 1));
    ok = ok && std::holds_alternative<Rejection>(bad2) &&
         std::get<Rejection>(bad2).code == RejectionCode::LocalBoundedness;
    ok = ok && !check_u(parse("id^(1/3)", 1)).passes;
    detail = ok ? "library rejections correct" : "library rejection missing";

    int rc1 = run_cli("check-u --expr \"id^(1/3)\"");
    if (rc1 == -999) {
      detail += "; EMERY_BIN unset, CLI exit codes not exercised";
      return ok;
    }
    int rc2 = run_cli("compose --outer \"id^(1/3)\" --inner \"id^3\"");
    detail += "; CLI exits " + std::to_string(rc1) + "/" + std::to_string(rc2);
    return ok && rc1 == 1 && rc2 == 1;
  });

  // 10. Push-forward, truncation, and form equivalences
  criterion(10, "pushforward + truncation", [](std::string& detail) {
    LevyModel m = canonical_model();
    RepFunction square = parse("(1+id)^2 - 1", 1);
    TransformedCharacteristics tc = transform(m, square);
    bool ok = tc.pushforward_atoms.size() == 1 &&
              tc.pushforward_atoms[0].x[0] == ComplexValue(3.0) &&
              tc.pushforward_atoms[0].rate == 0.5;

    double worst = 0.0;
    for (const CatalogEntry& entry : catalog()) {
      if (entry.fn.dim_in != 1 || entry.name.rfind("signed", 0) == 0) continue;
      Cx hat_route = transform(m, entry.fn).drift_rate[0].std();
      Cx check_route = drift_wirtinger_form(m, entry.fn)[0].std();
      worst = std::max(worst, std::abs(hat_route - check_route));

      Truncation ball = Truncation::ball(0.25);
      Cx truncated = transform(m, entry.fn, ball).drift_rate[0].std();
      Cx compensation(0.0);
      for (const JumpAtom& a : m.atoms) {
        std::vector<ComplexValue> y = eval_rep(entry.fn, 0.0, a.x);
        compensation += a.rate * (y[0].std() - ball.apply(y)[0].std());
      }
      worst = std::max(worst, std::abs(hat_route - (truncated + compensation)));
    }

    LevyModel conformal;
    conformal.dim = 1;
    conformal.drift = {ComplexValue(0.0)};
    conformal.cov_hat = RMat(2);
    conformal.cov_hat(0, 0) = conformal.cov_hat(1, 1) = 0.5;
    for (const CatalogEntry& entry : catalog()) {
      if (!entry.fn.analytic_at_zero || entry.fn.dim_in != 1) continue;
      worst = std::max(worst, std::abs(transform(conformal, entry.fn).cov_rate_bilinear(0, 0)));
    }
    detail = "worst deviation " + fmt(worst);
    return ok && worst <= 1e-12;
  });

  // 11. Partial-sum convergence in the mesh
  criterion(11, "partial-sum convergence", [](std::string& detail) {
    LevyModel m = canonical_model();
    bool ok = true;
    for (const std::string& expr : {std::string("id^2"), std::string("exp(id) - 1")}) {
      VerifyParams params;
      params.inner = expr;
      VerificationReport r =
          verify_identity("partial-sum", m, params, 64, std::ldexp(1.0, -9), 606);
      detail += " [" + expr + ":";
      for (double e : r.mesh_errors) detail += " " + fmt(e);
      detail += "]";
      ok = ok && r.pass;
    }
    return ok;
  });

  // 12. Byte-identical reports for identical seeds
  criterion(12, "reproducibility", [](std::string& detail) {
    LevyModel m = canonical_model();
    VerifyParams params;
    params.estimate_order = true;
    VerificationReport r1 = verify_identity("log-exp", m, params, 32, 1.0 / 512, 777);
    VerificationReport r2 = verify_identity("log-exp", m, params, 32, 1.0 / 512, 777);
    bool ok = to_json(r1).dump(2) == to_json(r2).dump(2);
    detail = ok ? "library reports identical" : "library reports differ";

    const char* models = std::getenv("EMERY_MODELS");
    if (std::getenv("EMERY_BIN") && models) {
      std::string args = std::string("verify --identity exp-log --model ") + models +
                         "/jd1.toml --t 1 --dt 0.001953125 --paths 32 --seed 9";
      std::string out1, out2;
      run_cli(args, &out1);
      run_cli(args, &out2);
      bool cli_ok = !out1.empty() && out1 == out2;
      detail += cli_ok ? "; CLI output byte-identical" : "; CLI outputs differ";
      ok = ok && cli_ok;
    }
    return ok;
  });

  std::printf("%s: %d of 12 criteria passed\n", failures == 0 ? "SUCCESS" : "FAILURE",
              12 - failures);
  return failures == 0 ? 0 : 1;
}
