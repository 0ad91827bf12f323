#include "emery/rep_function.hpp"

#include <cmath>

namespace emery {

RepFunction make_rep_function(std::vector<Expr> components, int dim_in) {
  if (dim_in < 1) throw std::invalid_argument("dim_in must be >= 1");
  if (components.empty()) throw std::invalid_argument("a representing function needs components");
  RepFunction f;
  f.dim_in = dim_in;
  f.dim_out = static_cast<int>(components.size());
  f.components = std::move(components);
  f.time_dependent = false;
  f.analytic_at_zero = true;
  for (const Expr& c : f.components) {
    if (c.max_var_index() > dim_in)
      throw std::invalid_argument("component references a variable beyond dim_in");
    f.time_dependent = f.time_dependent || c.contains_time();
    f.analytic_at_zero = f.analytic_at_zero && c.analytic_in_vars();
  }
  return f;
}

std::vector<ComplexValue> eval_rep(const RepFunction& f, double t,
                                   std::span<const ComplexValue> x, const ParamMap& params) {
  std::vector<ComplexValue> out;
  out.reserve(f.components.size());
  for (const Expr& c : f.components) out.push_back(eval(c, t, x, params));
  return out;
}

RepFunction substitute(const RepFunction& outer, const RepFunction& inner) {
  if (outer.dim_in != inner.dim_out)
    throw std::invalid_argument("composition dimension mismatch: outer expects " +
                                std::to_string(outer.dim_in) + " inputs, inner produces " +
                                std::to_string(inner.dim_out));
  std::vector<Expr> composed;
  composed.reserve(outer.components.size());
  for (const Expr& c : outer.components)
    composed.push_back(simplify(substitute_vars(c, inner.components)));
  return make_rep_function(std::move(composed), inner.dim_in);
}

std::string pretty(const RepFunction& f) {
  std::string out;
  for (std::size_t i = 0; i < f.components.size(); ++i) {
    if (i) out += "; ";
    out += to_string(f.components[i], f.dim_in);
  }
  return out;
}

namespace {

// Per-coordinate 2x2 blocks relating hat (lifted real) and check (Wirtinger)
// coordinates: check = hat * Sigma with Sigma = 1/2 [[1, 1], [-i, i]].
CMat sigma_block() {
  CMat s(2, 2);
  s(0, 0) = 0.5;
  s(0, 1) = 0.5;
  s(1, 0) = Cx(0.0, -0.5);
  s(1, 1) = Cx(0.0, 0.5);
  return s;
}

CMat sigma_inv_block() {
  CMat s(2, 2);
  s(0, 0) = 1.0;
  s(0, 1) = Cx(0.0, 1.0);
  s(1, 0) = 1.0;
  s(1, 1) = Cx(0.0, -1.0);
  return s;
}

CMat block_diag(const CMat& block, int copies) {
  CMat m(block.rows() * copies, block.cols() * copies);
  for (int c = 0; c < copies; ++c)
    for (int i = 0; i < block.rows(); ++i)
      for (int j = 0; j < block.cols(); ++j)
        m(c * block.rows() + i, c * block.cols() + j) = block(i, j);
  return m;
}

}  // namespace

HatJet hat_gradient(const WirtingerJet& jet) {
  int d = jet.dim_in, n = jet.dim_out;
  CMat sigma_inv = block_diag(sigma_inv_block(), d);

  CMat check_grad(n, 2 * d);
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < d; ++k) {
      check_grad(m, 2 * k) = jet.grad_z(m, k);
      check_grad(m, 2 * k + 1) = jet.grad_zbar(m, k);
    }

  HatJet hat;
  hat.dim_in = d;
  hat.dim_out = n;
  hat.grad = check_grad * sigma_inv;
  hat.hess.reserve(static_cast<std::size_t>(n));
  CMat sigma_inv_t = sigma_inv.transpose();
  for (int m = 0; m < n; ++m) hat.hess.push_back(sigma_inv_t * jet.hess[static_cast<std::size_t>(m)] * sigma_inv);
  return hat;
}

CMat real_lift_matrix(const HatJet& hat) {
  CMat r(2 * hat.dim_out, 2 * hat.dim_in);
  for (int m = 0; m < hat.dim_out; ++m)
    for (int j = 0; j < 2 * hat.dim_in; ++j) {
      r(2 * m, j) = hat.grad(m, j).real();
      r(2 * m + 1, j) = hat.grad(m, j).imag();
    }
  return r;
}

std::vector<CMat> real_lift_hessians(const HatJet& hat) {
  std::vector<CMat> out;
  out.reserve(static_cast<std::size_t>(2 * hat.dim_out));
  for (int m = 0; m < hat.dim_out; ++m) {
    CMat re(2 * hat.dim_in, 2 * hat.dim_in), im(2 * hat.dim_in, 2 * hat.dim_in);
    const CMat& h = hat.hess[static_cast<std::size_t>(m)];
    for (int i = 0; i < 2 * hat.dim_in; ++i)
      for (int j = 0; j < 2 * hat.dim_in; ++j) {
        re(i, j) = h(i, j).real();
        im(i, j) = h(i, j).imag();
      }
    out.push_back(std::move(re));
    out.push_back(std::move(im));
  }
  return out;
}

JetEvaluator::JetEvaluator(RepFunction f) : f_(std::move(f)) {
  int d = f_.dim_in, n = f_.dim_out;
  d1_.reserve(static_cast<std::size_t>(n * 2 * d));
  for (int m = 0; m < n; ++m)
    for (int dir = 0; dir < 2 * d; ++dir) {
      int k = dir / 2 + 1;
      bool conj = dir % 2 == 1;
      d1_.push_back(simplify(wirtinger_diff(f_.components[static_cast<std::size_t>(m)], k, conj)));
    }
  d2_.reserve(static_cast<std::size_t>(n * 2 * d * 2 * d));
  for (int m = 0; m < n; ++m)
    for (int dir1 = 0; dir1 < 2 * d; ++dir1) {
      const Expr& first = d1_[static_cast<std::size_t>(m * 2 * d + dir1)];
      for (int dir2 = 0; dir2 < 2 * d; ++dir2) {
        int k = dir2 / 2 + 1;
        bool conj = dir2 % 2 == 1;
        d2_.push_back(simplify(wirtinger_diff(first, k, conj)));
      }
    }
}

WirtingerJet JetEvaluator::at(double t, const ParamMap& params, JetMode mode) const {
  int d = f_.dim_in, n = f_.dim_out;
  std::vector<ComplexValue> zero(static_cast<std::size_t>(d), ComplexValue(0.0));

  WirtingerJet jet;
  jet.dim_in = d;
  jet.dim_out = n;
  jet.grad_z = CMat(n, d);
  jet.grad_zbar = CMat(n, d);
  jet.hess.assign(static_cast<std::size_t>(n), CMat(2 * d, 2 * d));

  bool symbolic_ok = true;
  for (int m = 0; m < n && symbolic_ok; ++m) {
    for (int dir = 0; dir < 2 * d && symbolic_ok; ++dir) {
      ComplexValue v = eval(d1_[static_cast<std::size_t>(m * 2 * d + dir)], t, zero, params);
      if (v.is_nan()) {
        symbolic_ok = false;
        break;
      }
      if (dir % 2 == 0)
        jet.grad_z(m, dir / 2) = v.std();
      else
        jet.grad_zbar(m, dir / 2) = v.std();
    }
    for (int d1 = 0; d1 < 2 * d && symbolic_ok; ++d1)
      for (int d2i = 0; d2i < 2 * d; ++d2i) {
        ComplexValue v =
            eval(d2_[static_cast<std::size_t>((m * 2 * d + d1) * 2 * d + d2i)], t, zero, params);
        if (v.is_nan()) {
          symbolic_ok = false;
          break;
        }
        jet.hess[static_cast<std::size_t>(m)](d1, d2i) = v.std();
      }
  }
  if (symbolic_ok) return jet;
  return finite_difference_jet(t, params, mode);
}

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kGrowthBound = 1.5;

bool diverged(Cx coarse, Cx fine, double floor) {
  return std::abs(fine) > kGrowthBound * std::abs(coarse) + floor;
}

Cx settle(Cx coarse, Cx fine) { return (4.0 * fine - coarse) / 3.0; }

}  // namespace

WirtingerJet JetEvaluator::finite_difference_jet(double t, const ParamMap& params,
                                                 JetMode mode) const {
  int d = f_.dim_in, n = f_.dim_out;

  // f(t, x) with x displaced along lifted real directions.
  auto value = [&](const std::vector<double>& hat_x, int m) -> ComplexValue {
    std::vector<ComplexValue> x(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k)
      x[static_cast<std::size_t>(k)] = ComplexValue(hat_x[static_cast<std::size_t>(2 * k)],
                                                    hat_x[static_cast<std::size_t>(2 * k + 1)]);
    return eval(f_.components[static_cast<std::size_t>(m)], t, x, params);
  };

  auto hat_grad_entry = [&](int m, int j, double h) -> ComplexValue {
    std::vector<double> xp(static_cast<std::size_t>(2 * d), 0.0), xm(xp);
    xp[static_cast<std::size_t>(j)] = h;
    xm[static_cast<std::size_t>(j)] = -h;
    ComplexValue fp = value(xp, m), fm = value(xm, m);
    if (fp.is_nan() || fm.is_nan()) return ComplexValue::nan();
    return ComplexValue((fp.std() - fm.std()) / (2.0 * h));
  };

  auto hat_hess_entry = [&](int m, int j1, int j2, double h) -> ComplexValue {
    std::vector<double> x(static_cast<std::size_t>(2 * d), 0.0);
    if (j1 == j2) {
      x[static_cast<std::size_t>(j1)] = h;
      ComplexValue fp = value(x, m);
      x[static_cast<std::size_t>(j1)] = -h;
      ComplexValue fm = value(x, m);
      x[static_cast<std::size_t>(j1)] = 0.0;
      ComplexValue f0 = value(x, m);
      if (fp.is_nan() || fm.is_nan() || f0.is_nan()) return ComplexValue::nan();
      return ComplexValue((fp.std() - 2.0 * f0.std() + fm.std()) / (h * h));
    }
    auto at = [&](double a, double b) {
      x[static_cast<std::size_t>(j1)] = a;
      x[static_cast<std::size_t>(j2)] = b;
      return value(x, m);
    };
    ComplexValue fpp = at(h, h), fpm = at(h, -h), fmp = at(-h, h), fmm = at(-h, -h);
    if (fpp.is_nan() || fpm.is_nan() || fmp.is_nan() || fmm.is_nan()) return ComplexValue::nan();
    return ComplexValue((fpp.std() - fpm.std() - fmp.std() + fmm.std()) / (4.0 * h * h));
  };

  auto resolve = [&](ComplexValue coarse, ComplexValue fine, int m, int j, const char* what,
                     double floor) -> Cx {
    if (coarse.is_nan() || fine.is_nan()) {
      if (mode == JetMode::Lenient) return Cx(0.0);
      throw NonDifferentiableAtZero(m + 1, std::to_string(j), std::string(what) +
                                                                  " finite difference left the domain");
    }
    if (diverged(coarse.std(), fine.std(), floor)) {
      if (mode == JetMode::Lenient) return coarse.std();
      throw NonDifferentiableAtZero(m + 1, std::to_string(j),
                                    std::string(what) + " finite difference diverges under step halving");
    }
    return settle(coarse.std(), fine.std());
  };

  CMat hat_grad(n, 2 * d);
  std::vector<CMat> hat_hess(static_cast<std::size_t>(n), CMat(2 * d, 2 * d));
  for (int m = 0; m < n; ++m) {
    for (int j = 0; j < 2 * d; ++j)
      hat_grad(m, j) = resolve(hat_grad_entry(m, j, kFdStep), hat_grad_entry(m, j, kFdStep / 2),
                               m, j, "gradient", 1e-6);
    for (int j1 = 0; j1 < 2 * d; ++j1)
      for (int j2 = j1; j2 < 2 * d; ++j2) {
        Cx v = resolve(hat_hess_entry(m, j1, j2, kFdStep), hat_hess_entry(m, j1, j2, kFdStep / 2),
                       m, j1 * 2 * d + j2, "hessian", 1e-3);
        hat_hess[static_cast<std::size_t>(m)](j1, j2) = v;
        hat_hess[static_cast<std::size_t>(m)](j2, j1) = v;
      }
  }

  // Back to Wirtinger coordinates: check = hat * Sigma, check^2 = Sigma^T hat^2 Sigma.
  CMat sigma = block_diag(sigma_block(), d);
  CMat sigma_t = sigma.transpose();
  CMat check_grad = hat_grad * sigma;

  WirtingerJet jet;
  jet.dim_in = d;
  jet.dim_out = n;
  jet.grad_z = CMat(n, d);
  jet.grad_zbar = CMat(n, d);
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < d; ++k) {
      jet.grad_z(m, k) = check_grad(m, 2 * k);
      jet.grad_zbar(m, k) = check_grad(m, 2 * k + 1);
    }
  jet.hess.reserve(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m)
    jet.hess.push_back(sigma_t * hat_hess[static_cast<std::size_t>(m)] * sigma);
  return jet;
}

WirtingerJet jet_at_zero(const RepFunction& f, double t, const ParamMap& params, JetMode mode) {
  return JetEvaluator(f).at(t, params, mode);
}

}  // namespace emery
