#include "emery/characteristics.hpp"

#include <cmath>

namespace emery {

void validate(const LevyModel& model) {
  if (model.dim < 1) throw std::invalid_argument("model dimension must be >= 1");
  if (static_cast<int>(model.drift.size()) != model.dim)
    throw std::invalid_argument("drift length must equal dim");
  int n2 = 2 * model.dim;
  if (model.cov_hat.n != n2) throw std::invalid_argument("cov_hat must be 2d x 2d");
  for (int i = 0; i < n2; ++i)
    for (int j = i + 1; j < n2; ++j)
      if (std::abs(model.cov_hat(i, j) - model.cov_hat(j, i)) > 1e-12)
        throw std::invalid_argument("cov_hat must be symmetric");
  psd_cholesky(model.cov_hat);  // throws if not PSD
  for (const JumpAtom& a : model.atoms) {
    if (static_cast<int>(a.x.size()) != model.dim)
      throw std::invalid_argument("atom dimension mismatch");
    if (!(a.rate > 0.0)) throw std::invalid_argument("atom rates must be positive");
  }
  for (const ScheduledJump& s : model.scheduled) {
    if (!(s.time > 0.0)) throw std::invalid_argument("scheduled times must be positive");
    double total = 0.0;
    for (const ScheduledOutcome& o : s.outcomes) {
      if (static_cast<int>(o.value.size()) != model.dim)
        throw std::invalid_argument("scheduled outcome dimension mismatch");
      if (o.prob < 0.0) throw std::invalid_argument("scheduled probabilities must be >= 0");
      total += o.prob;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("scheduled outcome probabilities must sum to 1");
  }
}

std::vector<ComplexValue> continuous_drift(const LevyModel& model) {
  std::vector<ComplexValue> b = model.drift;
  for (const JumpAtom& a : model.atoms)
    for (int k = 0; k < model.dim; ++k)
      b[static_cast<std::size_t>(k)] =
          b[static_cast<std::size_t>(k)] -
          ComplexValue(a.rate * a.x[static_cast<std::size_t>(k)].re(),
                       a.rate * a.x[static_cast<std::size_t>(k)].im());
  return b;
}

CMat complex_qv_rate(const LevyModel& model) {
  int d = model.dim;
  CMat c(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double rr = model.cov_hat(2 * i, 2 * j);
      double ii = model.cov_hat(2 * i + 1, 2 * j + 1);
      double ri = model.cov_hat(2 * i, 2 * j + 1);
      double ir = model.cov_hat(2 * i + 1, 2 * j);
      c(i, j) = Cx(rr - ii, ri + ir);
    }
  return c;
}

Truncation Truncation::ball(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("ball truncation radius must be positive");
  return {Kind::Ball, r};
}

std::vector<ComplexValue> Truncation::apply(const std::vector<ComplexValue>& w) const {
  switch (kind) {
    case Kind::Identity:
      return w;
    case Kind::Zero:
      return std::vector<ComplexValue>(w.size(), ComplexValue(0.0));
    case Kind::Ball: {
      double norm2 = 0.0;
      for (const ComplexValue& v : w) norm2 += v.re() * v.re() + v.im() * v.im();
      if (std::sqrt(norm2) <= radius) return w;
      return std::vector<ComplexValue>(w.size(), ComplexValue(0.0));
    }
  }
  return w;
}

std::string Truncation::name() const {
  switch (kind) {
    case Kind::Identity:
      return "id";
    case Kind::Zero:
      return "zero";
    case Kind::Ball:
      return "ball:" + std::to_string(radius);
  }
  return "?";
}

namespace {

std::vector<double> lift(const std::vector<ComplexValue>& v) {
  std::vector<double> out;
  out.reserve(2 * v.size());
  for (const ComplexValue& z : v) {
    out.push_back(z.re());
    out.push_back(z.im());
  }
  return out;
}

bool atoms_equal(const std::vector<ComplexValue>& a, const std::vector<ComplexValue>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i].re() - b[i].re()) > 1e-12 || std::abs(a[i].im() - b[i].im()) > 1e-12)
      return false;
  return true;
}

bool atom_is_zero(const std::vector<ComplexValue>& a) {
  for (const ComplexValue& v : a)
    if (std::abs(v.re()) > 1e-12 || std::abs(v.im()) > 1e-12) return false;
  return true;
}

}  // namespace

TransformedCharacteristics transform(const LevyModel& model, const RepFunction& xi,
                                     const Truncation& g) {
  validate(model);
  if (xi.dim_in != model.dim)
    throw std::invalid_argument("function expects dimension " + std::to_string(xi.dim_in) +
                                ", model has " + std::to_string(model.dim));
  UReport gate = check_u(xi);
  if (!gate.passes) throw NotUniversal(std::move(gate));

  int d = model.dim, n = xi.dim_out;
  WirtingerJet jet = jet_at_zero(xi, 0.0);
  HatJet hat = hat_gradient(jet);
  std::vector<double> b_hat = lift(model.drift);

  TransformedCharacteristics out;
  out.truncation = g;
  out.drift_rate.assign(static_cast<std::size_t>(n), ComplexValue(0.0));

  std::vector<Cx> drift(static_cast<std::size_t>(n), Cx(0.0));
  for (int m = 0; m < n; ++m) {
    for (int j = 0; j < 2 * d; ++j) drift[static_cast<std::size_t>(m)] += hat.grad(m, j) * b_hat[static_cast<std::size_t>(j)];
    for (int i = 0; i < 2 * d; ++i)
      for (int j = 0; j < 2 * d; ++j)
        drift[static_cast<std::size_t>(m)] +=
            0.5 * hat.hess[static_cast<std::size_t>(m)](i, j) * model.cov_hat(i, j);
  }

  // Jump compensation and push-forward.
  for (std::size_t a = 0; a < model.atoms.size(); ++a) {
    const JumpAtom& atom = model.atoms[a];
    std::vector<ComplexValue> y = eval_rep(xi, 0.0, atom.x);
    for (const ComplexValue& v : y)
      if (v.is_nan())
        throw AtomOutsideDomain("atom " + std::to_string(a), pretty(xi));
    std::vector<ComplexValue> gy = g.apply(y);
    std::vector<double> x_hat = lift(atom.x);
    for (int m = 0; m < n; ++m) {
      Cx lin(0.0);
      for (int j = 0; j < 2 * d; ++j) lin += hat.grad(m, j) * x_hat[static_cast<std::size_t>(j)];
      drift[static_cast<std::size_t>(m)] += atom.rate * (gy[static_cast<std::size_t>(m)].std() - lin);
    }
    if (atom_is_zero(y)) {
      out.dropped_mass += atom.rate;
      continue;
    }
    bool merged = false;
    for (JumpAtom& existing : out.pushforward_atoms) {
      if (atoms_equal(existing.x, y)) {
        existing.rate += atom.rate;
        merged = true;
        break;
      }
    }
    if (!merged) out.pushforward_atoms.push_back(JumpAtom{std::move(y), atom.rate});
  }

  for (int m = 0; m < n; ++m) out.drift_rate[static_cast<std::size_t>(m)] = ComplexValue(drift[static_cast<std::size_t>(m)]);

  // Bilinear continuous covariation rate of Y.
  out.cov_rate_bilinear = CMat(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      Cx s(0.0);
      for (int i = 0; i < 2 * d; ++i)
        for (int j = 0; j < 2 * d; ++j)
          s += hat.grad(k, i) * model.cov_hat(i, j) * hat.grad(l, j);
      out.cov_rate_bilinear(k, l) = s;
    }

  for (const ScheduledJump& s : model.scheduled) {
    std::vector<ComplexValue> db(static_cast<std::size_t>(n), ComplexValue(0.0));
    for (const ScheduledOutcome& o : s.outcomes) {
      std::vector<ComplexValue> y = eval_rep(xi, s.time, o.value);
      for (int m = 0; m < n; ++m) {
        if (y[static_cast<std::size_t>(m)].is_nan())
          throw AtomOutsideDomain("scheduled jump at t = " + std::to_string(s.time), pretty(xi));
        db[static_cast<std::size_t>(m)] =
            db[static_cast<std::size_t>(m)] + ComplexValue(o.prob) * y[static_cast<std::size_t>(m)];
      }
    }
    out.scheduled_drift.emplace_back(s.time, std::move(db));
  }

  return out;
}

std::vector<ComplexValue> drift_wirtinger_form(const LevyModel& model, const RepFunction& xi,
                                               const Truncation& g) {
  validate(model);
  int d = model.dim, n = xi.dim_out;
  WirtingerJet jet = jet_at_zero(xi, 0.0);

  // check-coordinate drift (b, b*) interlaced and [X-check, X-check]^c rate.
  std::vector<Cx> b_check(static_cast<std::size_t>(2 * d));
  for (int k = 0; k < d; ++k) {
    Cx b = model.drift[static_cast<std::size_t>(k)].std();
    b_check[static_cast<std::size_t>(2 * k)] = b;
    b_check[static_cast<std::size_t>(2 * k + 1)] = std::conj(b);
  }
  // S = blockdiag([[1, i], [1, -i]]) maps hat to check: qv_check = S qv_hat S^T.
  CMat s(2 * d, 2 * d);
  for (int k = 0; k < d; ++k) {
    s(2 * k, 2 * k) = 1.0;
    s(2 * k, 2 * k + 1) = Cx(0.0, 1.0);
    s(2 * k + 1, 2 * k) = 1.0;
    s(2 * k + 1, 2 * k + 1) = Cx(0.0, -1.0);
  }
  CMat qv_hat(2 * d, 2 * d);
  for (int i = 0; i < 2 * d; ++i)
    for (int j = 0; j < 2 * d; ++j) qv_hat(i, j) = model.cov_hat(i, j);
  CMat qv_check = s * qv_hat * s.transpose();

  std::vector<Cx> drift(static_cast<std::size_t>(n), Cx(0.0));
  for (int m = 0; m < n; ++m) {
    for (int k = 0; k < d; ++k)
      drift[static_cast<std::size_t>(m)] += jet.grad_z(m, k) * b_check[static_cast<std::size_t>(2 * k)] +
                                            jet.grad_zbar(m, k) * b_check[static_cast<std::size_t>(2 * k + 1)];
    for (int i = 0; i < 2 * d; ++i)
      for (int j = 0; j < 2 * d; ++j)
        drift[static_cast<std::size_t>(m)] +=
            0.5 * jet.hess[static_cast<std::size_t>(m)](i, j) * qv_check(i, j);
  }
  for (const JumpAtom& atom : model.atoms) {
    std::vector<ComplexValue> y = eval_rep(xi, 0.0, atom.x);
    std::vector<ComplexValue> gy = g.apply(y);
    for (int m = 0; m < n; ++m) {
      Cx lin(0.0);
      for (int k = 0; k < d; ++k) {
        Cx x = atom.x[static_cast<std::size_t>(k)].std();
        lin += jet.grad_z(m, k) * x + jet.grad_zbar(m, k) * std::conj(x);
      }
      drift[static_cast<std::size_t>(m)] += atom.rate * (gy[static_cast<std::size_t>(m)].std() - lin);
    }
  }

  std::vector<ComplexValue> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) out.emplace_back(drift[static_cast<std::size_t>(m)]);
  return out;
}

ComplexValue levy_exponent(const LevyModel& model, const RepFunction& xi) {
  if (xi.dim_out != 1) throw std::invalid_argument("levy_exponent needs a scalar function");
  return transform(model, xi, Truncation::identity()).drift_rate[0];
}

ComplexValue expectation_factor(const LevyModel& model, const RepFunction& xi, double t) {
  ComplexValue factor(1.0);
  for (const ScheduledJump& s : model.scheduled) {
    if (s.time > t) continue;
    ComplexValue mean(0.0);
    for (const ScheduledOutcome& o : s.outcomes) {
      ComplexValue y = eval_rep(xi, s.time, o.value)[0];
      if (y.is_nan())
        throw AtomOutsideDomain("scheduled jump at t = " + std::to_string(s.time), pretty(xi));
      mean = mean + ComplexValue(o.prob) * (ComplexValue(1.0) + y);
    }
    factor = factor * mean;
  }
  return factor;
}

ComplexValue char_fn(const LevyModel& model, const std::vector<double>& u, double t) {
  if (t < 0.0) throw std::invalid_argument("char_fn needs t >= 0");
  if (static_cast<int>(u.size()) != model.dim)
    throw std::invalid_argument("u must have the model dimension");
  Expr dot = Expr::constant(0.0);
  for (int k = 0; k < model.dim; ++k)
    dot = Expr::add(std::move(dot),
                    Expr::mul(Expr::constant(u[static_cast<std::size_t>(k)]), Expr::var(k + 1)));
  Expr e = Expr::sub(Expr::exp(Expr::mul(Expr::constant(kImagUnit), std::move(dot))),
                     Expr::constant(1.0));
  RepFunction xi = make_rep_function({simplify(e)}, model.dim);
  ComplexValue kappa = levy_exponent(model, xi);
  ComplexValue levy_part = cv_exp(ComplexValue(t) * kappa);
  return levy_part * expectation_factor(model, xi, t);
}

ComplexValue mellin(const LevyModel& model, ComplexValue alpha, double t, bool signed_variant) {
  for (const ComplexValue& b : model.drift)
    if (!b.is_real()) throw std::invalid_argument("mellin requires a real-valued model");
  for (const JumpAtom& a : model.atoms)
    for (const ComplexValue& v : a.x)
      if (!v.is_real()) throw std::invalid_argument("mellin requires a real-valued model");
  for (const ScheduledJump& s : model.scheduled)
    for (const ScheduledOutcome& o : s.outcomes)
      for (const ComplexValue& v : o.value)
        if (!v.is_real()) throw std::invalid_argument("mellin requires a real-valued model");
  for (int i = 0; i < model.cov_hat.n; ++i)
    for (int j = 0; j < model.cov_hat.n; ++j)
      if ((i % 2 == 1 || j % 2 == 1) && model.cov_hat(i, j) != 0.0)
        throw std::invalid_argument("mellin requires a real-valued model");

  bool alpha_positive_real = alpha.is_real() && alpha.re() > 0.0;
  if (!alpha_positive_real) {
    for (const JumpAtom& a : model.atoms)
      if (std::abs(a.x[0].re() + 1.0) <= 1e-15 && std::abs(a.x[0].im()) <= 1e-15)
        throw AtomAtMinusOne("alpha outside (0, inf) with an atom at -1");
    for (const ScheduledJump& s : model.scheduled)
      for (const ScheduledOutcome& o : s.outcomes)
        if (std::abs(o.value[0].re() + 1.0) <= 1e-15 && std::abs(o.value[0].im()) <= 1e-15)
          throw AtomAtMinusOne("alpha outside (0, inf) with a scheduled outcome at -1");
  }

  RepFunction xi = signed_variant ? make_signed_abs_power(alpha) : make_abs_power(alpha);
  ComplexValue kappa = levy_exponent(model, xi);
  return cv_exp(ComplexValue(t) * kappa) * expectation_factor(model, xi, t);
}

std::vector<ComplexValue> retruncate_drift(const LevyModel& model, const Truncation& h) {
  std::vector<ComplexValue> b = model.drift;
  if (h.kind == Truncation::Kind::Identity) return b;
  for (const JumpAtom& a : model.atoms) {
    std::vector<ComplexValue> hx = h.apply(a.x);
    for (int k = 0; k < model.dim; ++k) {
      ComplexValue diff = a.x[static_cast<std::size_t>(k)] - hx[static_cast<std::size_t>(k)];
      b[static_cast<std::size_t>(k)] =
          b[static_cast<std::size_t>(k)] - ComplexValue(a.rate) * diff;
    }
  }
  return b;
}

}  // namespace emery
