#include <algorithm>
#include <cmath>

#include "emery/parser.hpp"
#include "emery/paths.hpp"

namespace emery {

namespace {

double vec_diff(const std::vector<Cx>& a, const std::vector<Cx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

struct PairStats {
  double sup = 0.0;
  double jump = 0.0;
};

PairStats compare(const Realized& l, const Realized& r) {
  if (l.grid.size() != r.grid.size() || l.events.size() != r.events.size())
    throw std::logic_error("realizations disagree on sample points");
  PairStats s;
  for (std::size_t k = 0; k < l.grid.size(); ++k)
    s.sup = std::max(s.sup, vec_diff(l.grid[k], r.grid[k]));
  for (std::size_t e = 0; e < l.events.size(); ++e) {
    s.sup = std::max(s.sup, vec_diff(l.events[e].pre, r.events[e].pre));
    s.sup = std::max(s.sup, vec_diff(l.events[e].post, r.events[e].post));
    for (std::size_t c = 0; c < l.events[e].pre.size(); ++c) {
      Cx dl = l.events[e].post[c] - l.events[e].pre[c];
      Cx dr = r.events[e].post[c] - r.events[e].pre[c];
      s.jump = std::max(s.jump, std::abs(dl - dr));
    }
  }
  return s;
}

Cx bilinear_qv_cum(const Path& p, int k, int comp) {
  return {p.qv_at(k, 2 * comp, 2 * comp) - p.qv_at(k, 2 * comp + 1, 2 * comp + 1),
          p.qv_at(k, 2 * comp, 2 * comp + 1) + p.qv_at(k, 2 * comp + 1, 2 * comp)};
}

Path pow_per_component(const Path& p, std::vector<ComplexValue> exponents) {
  return pointwise_map(p, [exponents = std::move(exponents)](Cx v, int c, double t) {
    ComplexValue r = cv_pow(ComplexValue(v), exponents[static_cast<std::size_t>(c)]);
    if (r.is_nan()) throw DomainExit(t);
    return r.std();
  });
}

// Non-integer powers in the product identities assume the base process keeps
// a positive real part (principal branches would otherwise disagree across
// the cut). Violating paths are excluded, mirroring the identities' standing
// assumptions.
void guard_positive_real(const Path& p, const std::vector<ComplexValue>& exponents) {
  Realized r = realize(p);
  for (int c = 0; c < p.dim; ++c) {
    if (exponents[static_cast<std::size_t>(c)].is_small_int()) continue;
    for (std::size_t k = 0; k < r.grid.size(); ++k)
      if (r.grid[k][static_cast<std::size_t>(c)].real() <= 0.0)
        throw DomainExit(p.dt * static_cast<double>(k));
    for (const Realized::Ev& e : r.events)
      if (e.pre[static_cast<std::size_t>(c)].real() <= 0.0 ||
          e.post[static_cast<std::size_t>(c)].real() <= 0.0)
        throw DomainExit(e.t);
  }
}

// Closed-form trajectory alpha^k (V - V_0) + 1/2 alpha^{k+1} geo [V,V]^c
// + sum (xi^k(dx) - alpha^k dx) evaluated on the same sample as the path.
Realized iterated_closed_form(const Path& x, const RepFunction& xi_k, Cx a_k, Cx d2) {
  Realized base = realize(x);
  Realized out;
  Cx v0 = base.grid[0][0];
  Cx half_d2 = 0.5 * d2;

  std::size_t ev = 0;
  int steps = x.steps();
  out.grid.resize(base.grid.size());
  Cx jump_residual(0.0);  // running sum of xi^k(dx) - a_k dx
  for (int k = 0; k <= steps; ++k) {
    while (ev < x.events.size() &&
           static_cast<int>(std::ceil(x.events[ev].time / x.dt - 1e-9)) <= k) {
      const PathEvent& e = x.events[ev];
      int left = static_cast<int>(std::floor(e.time / x.dt + 1e-9));
      Cx pre_cont = Cx(x.cont[static_cast<std::size_t>(left * 2)],
                       x.cont[static_cast<std::size_t>(left * 2 + 1)]);
      Cx pre_jumps(0.0);
      for (std::size_t j = 0; j < ev; ++j) pre_jumps += x.events[j].dx[0].std();
      Cx v_pre = pre_cont + pre_jumps;
      Cx pre_val =
          a_k * (v_pre - v0) + half_d2 * bilinear_qv_cum(x, left, 0) + jump_residual;
      Cx dx = e.dx[0].std();
      std::vector<ComplexValue> arg = {e.dx[0]};
      ComplexValue mapped = eval_rep(xi_k, e.time, arg)[0];
      if (mapped.is_nan()) throw EventOutsideDomain(e.time);
      Realized::Ev rec;
      rec.t = e.time;
      rec.pre = {pre_val};
      rec.post = {pre_val + mapped.std()};
      out.events.push_back(std::move(rec));
      jump_residual += mapped.std() - a_k * dx;
      ++ev;
    }
    // base.grid carries the jumps, so the linear term already holds
    // a_k * sum(dx) and jump_residual supplies xi^k(dx) - a_k dx.
    Cx value = a_k * (base.grid[static_cast<std::size_t>(k)][0] - v0) +
               half_d2 * bilinear_qv_cum(x, k, 0) + jump_residual;
    out.grid[static_cast<std::size_t>(k)] = {value};
  }
  return out;
}

struct LevelResult {
  double sup = 0.0;
  double jump = 0.0;
  double mc_mean = 0.0;
  int excluded = 0;
};

using PathJob = std::function<PairStats(const Path&)>;

LevelResult run_level(const LevyModel& model, double t_end, double dt, int n_paths,
                      std::uint64_t master_seed, const PathJob& job) {
  PathEnsemble ens = simulate(model, t_end, dt, n_paths, master_seed);
  std::vector<double> sups(static_cast<std::size_t>(n_paths), 0.0);
  std::vector<double> jumps(static_cast<std::size_t>(n_paths), 0.0);
  std::vector<char> excluded(static_cast<std::size_t>(n_paths), 0);
  parallel_for_paths(n_paths, [&](int i) {
    try {
      PairStats s = job(ens.paths[static_cast<std::size_t>(i)]);
      sups[static_cast<std::size_t>(i)] = s.sup;
      jumps[static_cast<std::size_t>(i)] = s.jump;
    } catch (const DomainExit&) {
      excluded[static_cast<std::size_t>(i)] = 1;
    } catch (const ZeroHit&) {
      excluded[static_cast<std::size_t>(i)] = 1;
    } catch (const EventOutsideDomain&) {
      excluded[static_cast<std::size_t>(i)] = 1;
    }
  });
  LevelResult r;
  int included = 0;
  for (int i = 0; i < n_paths; ++i) {
    if (excluded[static_cast<std::size_t>(i)]) {
      ++r.excluded;
      continue;
    }
    ++included;
    r.sup = std::max(r.sup, sups[static_cast<std::size_t>(i)]);
    r.jump = std::max(r.jump, jumps[static_cast<std::size_t>(i)]);
    r.mc_mean += sups[static_cast<std::size_t>(i)];
  }
  if (included > 0) r.mc_mean /= included;
  return r;
}

}  // namespace

VerificationReport verify_identity(const std::string& name, const LevyModel& model,
                                   const VerifyParams& params, int n_paths, double dt,
                                   std::uint64_t master_seed) {
  VerificationReport report;
  report.identity = name;
  report.n_paths = n_paths;
  report.dt = dt;
  report.t_end = params.t_end;
  report.tol = params.tol >= 0.0 ? params.tol : 50.0 * dt;

  ComplexValue alpha = params.alpha, beta = params.beta;
  PathJob job;

  if (name == "yor") {
    if (model.dim != 2) throw std::invalid_argument("yor needs a 2-dimensional model");
    RepFunction xi = make_yor(alpha, beta);
    job = [=](const Path& x) {
      Path e = stochastic_exponential(x);
      guard_positive_real(e, {alpha, beta});
      Path lhs = component_product(pow_per_component(e, {alpha, beta}));
      Path rhs = stochastic_exponential(emery_eval(x, xi));
      return compare(realize(lhs), realize(rhs));
    };
  } else if (name == "yor-converse") {
    if (model.dim != 2) throw std::invalid_argument("yor-converse needs a 2-dimensional model");
    RepFunction xi = make_yor(alpha, beta);
    job = [=](const Path& z) {
      Path x = stochastic_exponential(z);  // positive-valued pair
      guard_positive_real(x, {alpha, beta});
      Path lhs = stochastic_logarithm(component_product(pow_per_component(x, {alpha, beta})));
      Path rhs = emery_eval(stochastic_logarithm(x), xi);
      return compare(realize(lhs), realize(rhs));
    };
  } else if (name == "abs-yor") {
    if (model.dim != 2) throw std::invalid_argument("abs-yor needs a 2-dimensional model");
    RepFunction xi = make_abs_yor(alpha, beta);
    job = [=](const Path& x) {
      Path e = stochastic_exponential(x);
      Path lhs = component_product(pow_per_component(pointwise_abs(e), {alpha, beta}));
      Path rhs = stochastic_exponential(emery_eval(x, xi));
      return compare(realize(lhs), realize(rhs));
    };
  } else if (name == "exp-log") {
    RepFunction xi = make_log_rep();
    job = [=](const Path& x) {
      Path lhs = stochastic_exponential(x);
      Path rhs = pointwise_exp(emery_eval(x, xi), ComplexValue(1.0));
      return compare(realize(lhs), realize(rhs));
    };
  } else if (name == "log-exp") {
    RepFunction xi = make_exp_rep(ComplexValue(1.0));
    job = [=](const Path& x) {
      Path lhs = stochastic_logarithm(pointwise_exp(x, ComplexValue(1.0)));
      Path rhs = emery_eval(x, xi);
      return compare(realize(lhs), realize(rhs));
    };
  } else if (name == "abs-exponential") {
    RepFunction xi = make_abs_rep();
    job = [=](const Path& x) {
      Path lhs = pointwise_abs(stochastic_exponential(x));
      Path rhs = stochastic_exponential(emery_eval(x, xi));
      return compare(realize(lhs), realize(rhs));
    };
  } else if (name == "composition") {
    RepFunction inner = parse(params.inner, model.dim);
    RepFunction outer = parse(params.outer, inner.dim_out);
    JetMode mode = JetMode::Strict;
    RepFunction composed = substitute(outer, inner);
    auto gate = compose_check(outer, inner, params.t_end);
    if (std::holds_alternative<Rejection>(gate)) {
      if (!params.force) throw CompositionRejected(std::get<Rejection>(gate));
      mode = JetMode::Lenient;
    } else {
      composed = std::get<Composition>(gate).composed;
    }
    job = [=](const Path& x) {
      Path staged = emery_eval(emery_eval(x, inner, mode), outer, mode);
      Path direct = emery_eval(x, composed, mode);
      return compare(realize(staged), realize(direct));
    };
  } else if (name == "iterated") {
    if (model.dim != 1) throw std::invalid_argument("iterated needs a scalar model");
    IteratedExp it = iterate_exp(alpha, params.k);
    job = [=](const Path& x) {
      Path y = emery_eval(x, it.fn);
      Realized rhs = iterated_closed_form(x, it.fn, it.first_derivative, it.second_derivative);
      return compare(realize(y), rhs);
    };
  } else if (name == "ito") {
    if (model.dim != 1) throw std::invalid_argument("ito needs a scalar model");
    RepFunction f_rep = parse(params.ito_function, 1);
    Expr f = f_rep.components[0];
    job = [=](const Path& x) {
      Realized lhs = realize(ito_rep(x, f));
      Realized base = realize(x);
      Realized rhs;
      rhs.grid.resize(base.grid.size());
      for (std::size_t k = 0; k < base.grid.size(); ++k) {
        double t = x.dt * static_cast<double>(k);
        std::vector<ComplexValue> arg = {ComplexValue(base.grid[k][0].real(), base.grid[k][0].imag())};
        ComplexValue v = eval(f, t, arg);
        if (v.is_nan()) throw DomainExit(t);
        rhs.grid[k] = {v.std()};
      }
      for (const Realized::Ev& e : base.events) {
        auto apply = [&](Cx z) {
          std::vector<ComplexValue> arg = {ComplexValue(z.real(), z.imag())};
          ComplexValue v = eval(f, e.t, arg);
          if (v.is_nan()) throw DomainExit(e.t);
          return v.std();
        };
        Realized::Ev rec;
        rec.t = e.t;
        rec.pre = {apply(e.pre[0])};
        rec.post = {apply(e.post[0])};
        rhs.events.push_back(std::move(rec));
      }
      return compare(lhs, rhs);
    };
  } else if (name == "partial-sum") {
    RepFunction xi = parse(params.inner, model.dim);
    std::vector<double> meshes = {params.t_end / 8.0, params.t_end / 32.0, params.t_end / 128.0};
    PathEnsemble ens = simulate(model, params.t_end, dt, n_paths, master_seed);
    std::vector<std::vector<double>> errs(meshes.size(),
                                          std::vector<double>(static_cast<std::size_t>(n_paths)));
    std::vector<char> excluded(static_cast<std::size_t>(n_paths), 0);
    parallel_for_paths(n_paths, [&](int i) {
      try {
        const Path& x = ens.paths[static_cast<std::size_t>(i)];
        Realized em = realize(emery_eval(x, xi));
        Cx target = em.grid.back()[0];
        for (std::size_t m = 0; m < meshes.size(); ++m) {
          std::vector<ComplexValue> psv = partial_sum_variation(x, xi, meshes[m]);
          errs[m][static_cast<std::size_t>(i)] = std::abs(psv[0].std() - target);
        }
      } catch (const DomainExit&) {
        excluded[static_cast<std::size_t>(i)] = 1;
      } catch (const EventOutsideDomain&) {
        excluded[static_cast<std::size_t>(i)] = 1;
      }
    });
    int included = 0;
    report.mesh_errors.assign(meshes.size(), 0.0);
    for (int i = 0; i < n_paths; ++i) {
      if (excluded[static_cast<std::size_t>(i)]) {
        ++report.excluded_paths;
        continue;
      }
      ++included;
      for (std::size_t m = 0; m < meshes.size(); ++m)
        report.mesh_errors[m] += errs[m][static_cast<std::size_t>(i)];
    }
    for (double& e : report.mesh_errors) e /= std::max(included, 1);
    report.max_sup_discrepancy = report.mesh_errors.back();
    report.mc_mean_abs_error = report.mesh_errors.back();
    report.pass = report.mesh_errors.size() == 3 &&
                  report.mesh_errors[0] > report.mesh_errors[1] &&
                  report.mesh_errors[1] > report.mesh_errors[2];
    return report;
  } else {
    throw std::invalid_argument("unknown identity: " + name);
  }

  LevelResult base = run_level(model, params.t_end, dt, n_paths, master_seed, job);
  report.max_sup_discrepancy = base.sup;
  report.mc_mean_abs_error = base.mc_mean;
  report.max_jump_increment_error = base.jump;
  report.excluded_paths = base.excluded;
  report.sup_by_level = {base.sup};

  if (params.estimate_order) {
    LevelResult half = run_level(model, params.t_end, dt / 2.0, n_paths, master_seed, job);
    LevelResult quarter = run_level(model, params.t_end, dt / 4.0, n_paths, master_seed, job);
    report.sup_by_level = {base.sup, half.sup, quarter.sup};
    if (half.sup > 0.0 && quarter.sup > 0.0) {
      double o1 = std::log2(base.sup / half.sup);
      double o2 = std::log2(half.sup / quarter.sup);
      report.order_estimate = 0.5 * (o1 + o2);
    }
  }

  report.pass = report.max_sup_discrepancy <= report.tol;
  return report;
}

}  // namespace emery
