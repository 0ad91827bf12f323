#include "emery/paths.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <thread>

#include "emery/rng.hpp"

namespace emery {

void parallel_for_paths(int n, const std::function<void(int)>& body) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 4;
  if (const char* env = std::getenv("EMERY_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0) hw = cap;
  }
  int workers = std::min(hw, n);
  if (workers <= 1 || n < 32) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
      int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
      try {
        for (int i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

constexpr int kBaseSteps = 16384;  // Brownian refinement base level

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int grid_index_including(double s, double dt) {
  // smallest grid index whose time is >= s (the index from which the jump
  // counts into grid values)
  return static_cast<int>(std::ceil(s / dt - 1e-9));
}

int grid_index_left(double s, double dt) {
  // largest grid index with t_k <= s (the left-point state at the jump)
  return static_cast<int>(std::floor(s / dt + 1e-9));
}

// 2x2 real multiplication block of a complex scalar w acting on lifted
// coordinates.
struct MulBlock {
  double a, b;  // [[a, -b], [b, a]]
  explicit MulBlock(Cx w) : a(w.real()), b(w.imag()) {}
};

}  // namespace

Realized realize(const Path& p) {
  Realized r;
  int n = p.dim, steps = p.steps();
  r.grid.assign(static_cast<std::size_t>(steps + 1),
                std::vector<Cx>(static_cast<std::size_t>(n)));

  std::vector<Cx> jump_prefix(static_cast<std::size_t>(n), Cx(0.0));
  std::size_t ev = 0;
  auto cont_vec = [&](int k) {
    std::vector<Cx> v(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) v[static_cast<std::size_t>(c)] = p.cont_at(k, c);
    return v;
  };

  for (int k = 0; k <= steps; ++k) {
    while (ev < p.events.size() &&
           grid_index_including(p.events[ev].time, p.dt) <= k) {
      const PathEvent& e = p.events[ev];
      Realized::Ev rec;
      rec.t = e.time;
      int left = grid_index_left(e.time, p.dt);
      rec.pre.resize(static_cast<std::size_t>(n));
      rec.post.resize(static_cast<std::size_t>(n));
      for (int c = 0; c < n; ++c) {
        Cx pre = p.cont_at(left, c) + jump_prefix[static_cast<std::size_t>(c)];
        Cx dx = e.dx[static_cast<std::size_t>(c)].is_nan()
                    ? Cx(std::nan(""), std::nan(""))
                    : e.dx[static_cast<std::size_t>(c)].std();
        rec.pre[static_cast<std::size_t>(c)] = pre;
        rec.post[static_cast<std::size_t>(c)] = pre + dx;
        jump_prefix[static_cast<std::size_t>(c)] += dx;
      }
      r.events.push_back(std::move(rec));
      ++ev;
    }
    std::vector<Cx> v = cont_vec(k);
    for (int c = 0; c < n; ++c) v[static_cast<std::size_t>(c)] += jump_prefix[static_cast<std::size_t>(c)];
    r.grid[static_cast<std::size_t>(k)] = std::move(v);
  }
  return r;
}

PathEnsemble simulate(const LevyModel& model, double t_end, double dt, int n_paths,
                      std::uint64_t master_seed) {
  validate(model);
  if (!(t_end > 0.0) || !(dt > 0.0)) throw std::invalid_argument("need t_end > 0 and dt > 0");
  long long n_ll = std::llround(t_end / dt);
  if (n_ll < 1 || std::abs(static_cast<double>(n_ll) * dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw std::invalid_argument("dt must divide t_end");
  int steps = static_cast<int>(n_ll);
  int d = model.dim;
  int w = 2 * d;

  RMat chol = psd_cholesky(model.cov_hat);
  std::vector<double> b0 = [&] {
    std::vector<ComplexValue> b = continuous_drift(model);
    std::vector<double> lifted;
    for (const ComplexValue& z : b) {
      lifted.push_back(z.re());
      lifted.push_back(z.im());
    }
    return lifted;
  }();

  int sub = 1;
  if (power_of_two(steps) && steps >= 8 && steps <= kBaseSteps) sub = kBaseSteps / steps;
  double sub_dt = dt / sub;
  double sqrt_sub_dt = std::sqrt(sub_dt);

  PathEnsemble ens;
  ens.t_end = t_end;
  ens.dt = dt;
  ens.master_seed = master_seed;
  ens.paths.assign(static_cast<std::size_t>(n_paths), Path{});

  parallel_for_paths(n_paths, [&](int i) {
    std::uint64_t stream = split_stream(master_seed, static_cast<std::uint64_t>(i));
    Path p;
    p.dim = d;
    p.t_end = t_end;
    p.dt = dt;
    p.seed = stream;
    p.cont.assign(static_cast<std::size_t>((steps + 1) * w), 0.0);
    p.qv_cum.assign(static_cast<std::size_t>((steps + 1) * w * w), 0.0);

    // Deterministic model-implied quadratic variation.
    for (int k = 0; k <= steps; ++k) {
      double t = dt * k;
      for (int a = 0; a < w; ++a)
        for (int b = 0; b < w; ++b)
          p.qv_cum[static_cast<std::size_t>(k * w * w + a * w + b)] = model.cov_hat(a, b) * t;
    }

    // Brownian part plus continuous drift.
    Rng bm(split_stream(stream, 1));
    std::vector<double> z(static_cast<std::size_t>(w));
    std::vector<double> acc(static_cast<std::size_t>(w), 0.0);
    for (int k = 0; k < steps; ++k) {
      for (int s = 0; s < sub; ++s) {
        for (int c = 0; c < w; ++c) z[static_cast<std::size_t>(c)] = bm.gaussian();
        for (int r = 0; r < w; ++r) {
          double inc = 0.0;
          for (int c = 0; c <= r; ++c) inc += chol(r, c) * z[static_cast<std::size_t>(c)];
          acc[static_cast<std::size_t>(r)] += inc * sqrt_sub_dt;
        }
      }
      for (int r = 0; r < w; ++r)
        p.cont[static_cast<std::size_t>((k + 1) * w + r)] =
            acc[static_cast<std::size_t>(r)] + b0[static_cast<std::size_t>(r)] * dt * (k + 1);
    }

    // Poisson events, exact exponential gaps per atom.
    std::uint64_t ev_stream = split_stream(stream, 2);
    for (std::size_t a = 0; a < model.atoms.size(); ++a) {
      Rng gaps(split_stream(ev_stream, static_cast<std::uint64_t>(a)));
      double t = gaps.exponential(model.atoms[a].rate);
      while (t <= t_end) {
        PathEvent e;
        e.time = t;
        e.dx = model.atoms[a].x;
        p.events.push_back(std::move(e));
        t += gaps.exponential(model.atoms[a].rate);
      }
    }

    // Scheduled jumps.
    std::uint64_t sched_stream = split_stream(stream, 3);
    for (std::size_t s = 0; s < model.scheduled.size(); ++s) {
      const ScheduledJump& sj = model.scheduled[s];
      if (sj.time > t_end) continue;
      Rng pick(split_stream(sched_stream, static_cast<std::uint64_t>(s)));
      double u = pick.uniform01();
      double cum = 0.0;
      const ScheduledOutcome* chosen = &sj.outcomes.back();
      for (const ScheduledOutcome& o : sj.outcomes) {
        cum += o.prob;
        if (u <= cum) {
          chosen = &o;
          break;
        }
      }
      PathEvent e;
      e.time = sj.time;
      e.dx = chosen->value;
      e.scheduled = true;
      p.events.push_back(std::move(e));
    }

    std::sort(p.events.begin(), p.events.end(),
              [](const PathEvent& a, const PathEvent& b) { return a.time < b.time; });
    // Simultaneous jumps (measure-zero tie) merge into one.
    for (std::size_t e = 1; e < p.events.size();) {
      if (p.events[e].time == p.events[e - 1].time) {
        for (int c = 0; c < d; ++c)
          p.events[e - 1].dx[static_cast<std::size_t>(c)] =
              p.events[e - 1].dx[static_cast<std::size_t>(c)] +
              p.events[e].dx[static_cast<std::size_t>(c)];
        p.events.erase(p.events.begin() + static_cast<std::ptrdiff_t>(e));
      } else {
        ++e;
      }
    }

    ens.paths[static_cast<std::size_t>(i)] = std::move(p);
  });

  return ens;
}

namespace {

// Left-point complex weights applied as block-diagonal real 2x2 multipliers:
// qv_out increment = J qv_in increment J^T.
void propagate_qv_weighted(const Path& in, Path& out,
                           const std::function<std::vector<Cx>(int)>& weights_at) {
  if (!in.has_qv()) return;
  int n = in.dim;
  int w = 2 * n;
  int steps = in.steps();
  out.qv_cum.assign(static_cast<std::size_t>((steps + 1) * w * w), 0.0);
  std::vector<double> cum(static_cast<std::size_t>(w * w), 0.0);
  for (int k = 0; k < steps; ++k) {
    std::vector<Cx> wt = weights_at(k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        MulBlock wi(wt[static_cast<std::size_t>(i)]), wj(wt[static_cast<std::size_t>(j)]);
        double d00 = in.qv_at(k + 1, 2 * i, 2 * j) - in.qv_at(k, 2 * i, 2 * j);
        double d01 = in.qv_at(k + 1, 2 * i, 2 * j + 1) - in.qv_at(k, 2 * i, 2 * j + 1);
        double d10 = in.qv_at(k + 1, 2 * i + 1, 2 * j) - in.qv_at(k, 2 * i + 1, 2 * j);
        double d11 = in.qv_at(k + 1, 2 * i + 1, 2 * j + 1) - in.qv_at(k, 2 * i + 1, 2 * j + 1);
        // M(wi) * D * M(wj)^T with M(w) = [[a, -b], [b, a]]
        double r00 = wi.a * d00 - wi.b * d10, r01 = wi.a * d01 - wi.b * d11;
        double r10 = wi.b * d00 + wi.a * d10, r11 = wi.b * d01 + wi.a * d11;
        double o00 = r00 * wj.a - r01 * wj.b, o01 = r00 * wj.b + r01 * wj.a;
        double o10 = r10 * wj.a - r11 * wj.b, o11 = r10 * wj.b + r11 * wj.a;
        cum[static_cast<std::size_t>((2 * i) * w + 2 * j)] += o00;
        cum[static_cast<std::size_t>((2 * i) * w + 2 * j + 1)] += o01;
        cum[static_cast<std::size_t>((2 * i + 1) * w + 2 * j)] += o10;
        cum[static_cast<std::size_t>((2 * i + 1) * w + 2 * j + 1)] += o11;
      }
    for (int a = 0; a < w * w; ++a)
      out.qv_cum[static_cast<std::size_t>((k + 1) * w * w + a)] = cum[static_cast<std::size_t>(a)];
  }
}

// Grid values including jumps, maintained incrementally by the walkers below.
struct GridWalker {
  const Path& p;
  std::size_t ev = 0;
  std::vector<Cx> jumps;

  explicit GridWalker(const Path& path)
      : p(path), jumps(static_cast<std::size_t>(path.dim), Cx(0.0)) {}

  // advance to grid index k (call with k = 0, 1, 2, ... in order);
  // afterwards jumps holds the prefix sum of jumps with index <= k.
  void advance(int k) {
    while (ev < p.events.size() && grid_index_including(p.events[ev].time, p.dt) <= k) {
      for (int c = 0; c < p.dim; ++c)
        jumps[static_cast<std::size_t>(c)] += p.events[ev].dx[static_cast<std::size_t>(c)].std();
      ++ev;
    }
  }

  std::vector<Cx> value(int k) const {
    std::vector<Cx> v(static_cast<std::size_t>(p.dim));
    for (int c = 0; c < p.dim; ++c)
      v[static_cast<std::size_t>(c)] = p.cont_at(k, c) + jumps[static_cast<std::size_t>(c)];
    return v;
  }
};

// Left limit of the continuous hop landing at grid index k + 1: the sampled
// process is flat between grid points, so jumps strictly inside
// (t_k, t_{k+1}) have already happened when the hop occurs. Using this state
// as the left point keeps the integral rule exact on the sample and removes
// the jump cross-term the plain grid value would introduce.
std::vector<Cx> pre_hop_value(const Path& p, int k) {
  std::vector<Cx> v(static_cast<std::size_t>(p.dim));
  for (int c = 0; c < p.dim; ++c) v[static_cast<std::size_t>(c)] = p.cont_at(k, c);
  for (const PathEvent& e : p.events) {
    if (grid_index_left(e.time, p.dt) > k) break;
    for (int c = 0; c < p.dim; ++c)
      v[static_cast<std::size_t>(c)] += e.dx[static_cast<std::size_t>(c)].std();
  }
  return v;
}

std::vector<Cx> left_limit_at_event(const Path& p, std::size_t event_index) {
  const PathEvent& e = p.events[event_index];
  int left = grid_index_left(e.time, p.dt);
  std::vector<Cx> v(static_cast<std::size_t>(p.dim));
  for (int c = 0; c < p.dim; ++c) v[static_cast<std::size_t>(c)] = p.cont_at(left, c);
  for (std::size_t j = 0; j < event_index; ++j)
    for (int c = 0; c < p.dim; ++c)
      v[static_cast<std::size_t>(c)] += p.events[j].dx[static_cast<std::size_t>(c)].std();
  return v;
}

}  // namespace

Path emery_eval(const Path& x, const RepFunction& xi, JetMode mode) {
  if (xi.dim_in != x.dim)
    throw std::invalid_argument("function dimension does not match the path");
  if (!x.has_qv())
    throw std::invalid_argument("path carries no quadratic-variation data");

  int d = x.dim, n = xi.dim_out, steps = x.steps();
  JetEvaluator jets(xi);

  Path y;
  y.dim = n;
  y.t_end = x.t_end;
  y.dt = x.dt;
  y.seed = x.seed;
  y.cont.assign(static_cast<std::size_t>((steps + 1) * 2 * n), 0.0);

  std::optional<HatJet> fixed;
  if (!xi.time_dependent) fixed = hat_gradient(jets.at(0.0, {}, mode));

  std::vector<CMat> lift_per_step;  // for qv propagation
  lift_per_step.reserve(static_cast<std::size_t>(steps));

  std::vector<Cx> acc(static_cast<std::size_t>(n), Cx(0.0));
  for (int k = 0; k < steps; ++k) {
    double t = x.dt * k;
    HatJet hat = fixed ? *fixed : hat_gradient(jets.at(t, {}, mode));
    for (int m = 0; m < n; ++m) {
      Cx inc(0.0);
      for (int j = 0; j < 2 * d; ++j) {
        double dcont = x.cont[static_cast<std::size_t>((k + 1) * 2 * d + j)] -
                       x.cont[static_cast<std::size_t>(k * 2 * d + j)];
        inc += hat.grad(m, j) * dcont;
      }
      for (int i = 0; i < 2 * d; ++i)
        for (int j = 0; j < 2 * d; ++j)
          inc += 0.5 * hat.hess[static_cast<std::size_t>(m)](i, j) *
                 (x.qv_at(k + 1, i, j) - x.qv_at(k, i, j));
      acc[static_cast<std::size_t>(m)] += inc;
    }
    for (int m = 0; m < n; ++m) {
      y.cont[static_cast<std::size_t>((k + 1) * 2 * n + 2 * m)] = acc[static_cast<std::size_t>(m)].real();
      y.cont[static_cast<std::size_t>((k + 1) * 2 * n + 2 * m + 1)] = acc[static_cast<std::size_t>(m)].imag();
    }
    lift_per_step.push_back(real_lift_matrix(hat));
  }

  // Jumps map exactly: dY = xi_s(dX).
  for (const PathEvent& e : x.events) {
    std::vector<ComplexValue> dy = eval_rep(xi, e.time, e.dx);
    for (const ComplexValue& v : dy)
      if (v.is_nan()) throw EventOutsideDomain(e.time);
    PathEvent ye;
    ye.time = e.time;
    ye.scheduled = e.scheduled;
    ye.dx = std::move(dy);
    y.events.push_back(std::move(ye));
  }

  // Quadratic variation of Y: R dQV R^T per step.
  int wy = 2 * n, wx = 2 * d;
  y.qv_cum.assign(static_cast<std::size_t>((steps + 1) * wy * wy), 0.0);
  std::vector<double> cum(static_cast<std::size_t>(wy * wy), 0.0);
  for (int k = 0; k < steps; ++k) {
    const CMat& r = lift_per_step[static_cast<std::size_t>(k)];
    for (int a = 0; a < wy; ++a)
      for (int b = 0; b < wy; ++b) {
        double s = 0.0;
        for (int i = 0; i < wx; ++i) {
          double ra = r(a, i).real();
          if (ra == 0.0) continue;
          for (int j = 0; j < wx; ++j)
            s += ra * (x.qv_at(k + 1, i, j) - x.qv_at(k, i, j)) * r(b, j).real();
        }
        cum[static_cast<std::size_t>(a * wy + b)] += s;
      }
    for (int a = 0; a < wy * wy; ++a)
      y.qv_cum[static_cast<std::size_t>((k + 1) * wy * wy + a)] = cum[static_cast<std::size_t>(a)];
  }
  return y;
}

namespace {

Cx bilinear_qv(const Path& p, int k, int comp) {
  return {p.qv_at(k, 2 * comp, 2 * comp) - p.qv_at(k, 2 * comp + 1, 2 * comp + 1),
          p.qv_at(k, 2 * comp, 2 * comp + 1) + p.qv_at(k, 2 * comp + 1, 2 * comp)};
}

}  // namespace

Path stochastic_exponential(const Path& z) {
  if (!z.has_qv())
    throw std::invalid_argument("stochastic exponential needs quadratic-variation data");
  int n = z.dim, steps = z.steps();

  Path out;
  out.dim = n;
  out.t_end = z.t_end;
  out.dt = z.dt;
  out.seed = z.seed;
  out.cont.assign(static_cast<std::size_t>((steps + 1) * 2 * n), 0.0);

  // Running jump products Pi (1 + dZ) per component.
  std::vector<Cx> prod(static_cast<std::size_t>(n), Cx(1.0));
  std::vector<Cx> out_jumps(static_cast<std::size_t>(n), Cx(0.0));
  std::size_t ev = 0;

  std::vector<Cx> z0(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) z0[static_cast<std::size_t>(c)] = z.cont_at(0, c);

  auto exponential_part = [&](int k, int c) {
    Cx half_qv = 0.5 * bilinear_qv(z, k, c);
    return std::exp(z.cont_at(k, c) - z0[static_cast<std::size_t>(c)] - half_qv);
  };

  std::vector<std::vector<Cx>> grid_value(static_cast<std::size_t>(steps + 1),
                                          std::vector<Cx>(static_cast<std::size_t>(n)));
  for (int k = 0; k <= steps; ++k) {
    while (ev < z.events.size() && grid_index_including(z.events[ev].time, z.dt) <= k) {
      const PathEvent& e = z.events[ev];
      int left = grid_index_left(e.time, z.dt);
      PathEvent oe;
      oe.time = e.time;
      oe.scheduled = e.scheduled;
      oe.dx.resize(static_cast<std::size_t>(n));
      for (int c = 0; c < n; ++c) {
        Cx pre = exponential_part(left, c) * prod[static_cast<std::size_t>(c)];
        Cx dz = e.dx[static_cast<std::size_t>(c)].std();
        oe.dx[static_cast<std::size_t>(c)] = ComplexValue(pre * dz);
        prod[static_cast<std::size_t>(c)] *= (Cx(1.0) + dz);
        out_jumps[static_cast<std::size_t>(c)] += pre * dz;
      }
      out.events.push_back(std::move(oe));
      ++ev;
    }
    for (int c = 0; c < n; ++c) {
      Cx value = exponential_part(k, c) * prod[static_cast<std::size_t>(c)];
      grid_value[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] = value;
      Cx cont = value - out_jumps[static_cast<std::size_t>(c)];
      out.cont[static_cast<std::size_t>(k * 2 * n + 2 * c)] = cont.real();
      out.cont[static_cast<std::size_t>(k * 2 * n + 2 * c + 1)] = cont.imag();
    }
  }

  propagate_qv_weighted(z, out, [&](int k) { return grid_value[static_cast<std::size_t>(k)]; });
  return out;
}

Path stochastic_logarithm(const Path& v) {
  int n = v.dim, steps = v.steps();

  Path out;
  out.dim = n;
  out.t_end = v.t_end;
  out.dt = v.dt;
  out.seed = v.seed;
  out.cont.assign(static_cast<std::size_t>((steps + 1) * 2 * n), 0.0);

  // Jumps first (they only need left limits), grid part second.
  for (std::size_t e = 0; e < v.events.size(); ++e) {
    std::vector<Cx> pre = left_limit_at_event(v, e);
    PathEvent oe;
    oe.time = v.events[e].time;
    oe.scheduled = v.events[e].scheduled;
    oe.dx.resize(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
      if (pre[static_cast<std::size_t>(c)] == Cx(0.0)) throw ZeroHit(v.events[e].time);
      oe.dx[static_cast<std::size_t>(c)] =
          ComplexValue(v.events[e].dx[static_cast<std::size_t>(c)].std() /
                       pre[static_cast<std::size_t>(c)]);
    }
    out.events.push_back(std::move(oe));
  }

  std::vector<Cx> acc(static_cast<std::size_t>(n), Cx(0.0));
  std::vector<std::vector<Cx>> inv_weight(static_cast<std::size_t>(steps),
                                          std::vector<Cx>(static_cast<std::size_t>(n)));
  for (int k = 0; k < steps; ++k) {
    std::vector<Cx> left = pre_hop_value(v, k);
    for (int c = 0; c < n; ++c) {
      Cx lv = left[static_cast<std::size_t>(c)];
      if (lv == Cx(0.0)) throw ZeroHit(v.dt * k);
      Cx dcont = v.cont_at(k + 1, c) - v.cont_at(k, c);
      acc[static_cast<std::size_t>(c)] += dcont / lv;
      inv_weight[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] = Cx(1.0) / lv;
    }
    for (int c = 0; c < n; ++c) {
      out.cont[static_cast<std::size_t>((k + 1) * 2 * n + 2 * c)] = acc[static_cast<std::size_t>(c)].real();
      out.cont[static_cast<std::size_t>((k + 1) * 2 * n + 2 * c + 1)] = acc[static_cast<std::size_t>(c)].imag();
    }
  }

  propagate_qv_weighted(v, out, [&](int k) { return inv_weight[static_cast<std::size_t>(k)]; });
  return out;
}

Path pointwise_map(const Path& p, const std::function<Cx(Cx, int, double)>& f) {
  int n = p.dim, steps = p.steps();
  Path out;
  out.dim = n;
  out.t_end = p.t_end;
  out.dt = p.dt;
  out.seed = p.seed;
  out.cont.assign(static_cast<std::size_t>((steps + 1) * 2 * n), 0.0);

  auto check = [&](Cx v, double t) {
    if (std::isnan(v.real()) || std::isnan(v.imag())) throw DomainExit(t);
    return v;
  };

  std::vector<Cx> out_jumps(static_cast<std::size_t>(n), Cx(0.0));
  GridWalker walker(p);
  std::size_t ev = 0;
  for (int k = 0; k <= steps; ++k) {
    while (ev < p.events.size() && grid_index_including(p.events[ev].time, p.dt) <= k) {
      std::vector<Cx> pre = left_limit_at_event(p, ev);
      const PathEvent& e = p.events[ev];
      PathEvent oe;
      oe.time = e.time;
      oe.scheduled = e.scheduled;
      oe.dx.resize(static_cast<std::size_t>(n));
      for (int c = 0; c < n; ++c) {
        Cx post = pre[static_cast<std::size_t>(c)] + e.dx[static_cast<std::size_t>(c)].std();
        Cx dy = check(f(post, c, e.time), e.time) -
                check(f(pre[static_cast<std::size_t>(c)], c, e.time), e.time);
        oe.dx[static_cast<std::size_t>(c)] = ComplexValue(dy);
        out_jumps[static_cast<std::size_t>(c)] += dy;
      }
      out.events.push_back(std::move(oe));
      ++ev;
    }
    walker.advance(k);
    std::vector<Cx> v = walker.value(k);
    for (int c = 0; c < n; ++c) {
      Cx mapped = check(f(v[static_cast<std::size_t>(c)], c, p.dt * k), p.dt * k);
      Cx cont = mapped - out_jumps[static_cast<std::size_t>(c)];
      out.cont[static_cast<std::size_t>(k * 2 * n + 2 * c)] = cont.real();
      out.cont[static_cast<std::size_t>(k * 2 * n + 2 * c + 1)] = cont.imag();
    }
  }
  return out;
}

Path pointwise_exp(const Path& p, ComplexValue alpha) {
  Cx a = alpha.std();
  return pointwise_map(p, [a](Cx v, int, double) { return std::exp(a * v); });
}

Path pointwise_pow(const Path& p, ComplexValue alpha) {
  return pointwise_map(p, [alpha](Cx v, int, double t) {
    ComplexValue r = cv_pow(ComplexValue(v), alpha);
    if (r.is_nan()) throw DomainExit(t);
    return r.std();
  });
}

Path pointwise_abs(const Path& p) {
  return pointwise_map(p, [](Cx v, int, double) { return Cx(std::abs(v)); });
}

Path component_product(const Path& p) {
  int n = p.dim, steps = p.steps();
  Path out;
  out.dim = 1;
  out.t_end = p.t_end;
  out.dt = p.dt;
  out.seed = p.seed;
  out.cont.assign(static_cast<std::size_t>(steps + 1) * 2, 0.0);

  auto prod = [&](const std::vector<Cx>& v) {
    Cx r(1.0);
    for (int c = 0; c < n; ++c) r *= v[static_cast<std::size_t>(c)];
    return r;
  };

  Cx out_jumps(0.0);
  GridWalker walker(p);
  std::size_t ev = 0;
  for (int k = 0; k <= steps; ++k) {
    while (ev < p.events.size() && grid_index_including(p.events[ev].time, p.dt) <= k) {
      std::vector<Cx> pre = left_limit_at_event(p, ev);
      std::vector<Cx> post = pre;
      for (int c = 0; c < n; ++c)
        post[static_cast<std::size_t>(c)] += p.events[ev].dx[static_cast<std::size_t>(c)].std();
      PathEvent oe;
      oe.time = p.events[ev].time;
      oe.scheduled = p.events[ev].scheduled;
      Cx dy = prod(post) - prod(pre);
      oe.dx = {ComplexValue(dy)};
      out_jumps += dy;
      out.events.push_back(std::move(oe));
      ++ev;
    }
    walker.advance(k);
    Cx value = prod(walker.value(k));
    Cx cont = value - out_jumps;
    out.cont[static_cast<std::size_t>(2 * k)] = cont.real();
    out.cont[static_cast<std::size_t>(2 * k + 1)] = cont.imag();
  }
  return out;
}

Path ito_rep(const Path& x, const Expr& f) {
  if (x.dim != 1) throw std::invalid_argument("ito_rep expects a scalar path");
  if (!x.has_qv()) throw std::invalid_argument("ito_rep needs quadratic-variation data");
  int steps = x.steps();

  // xi(x; theta) = f(theta + x) - f(theta), theta bound to the left limit.
  std::vector<Expr> shift = {Expr::add(Expr::param("theta"), Expr::var(1))};
  std::vector<Expr> at_theta = {Expr::param("theta")};
  Expr xi_expr = Expr::sub(substitute_vars(f, shift), substitute_vars(f, at_theta));
  RepFunction xi = make_rep_function({simplify(xi_expr)}, 1);
  JetEvaluator jets(xi);

  auto f_at = [&](double t, Cx v) {
    std::vector<ComplexValue> arg = {ComplexValue(v.real(), v.imag())};
    ComplexValue r = eval(f, t, arg);
    if (r.is_nan()) throw DomainExit(t);
    return r.std();
  };

  Path y;
  y.dim = 1;
  y.t_end = x.t_end;
  y.dt = x.dt;
  y.seed = x.seed;
  y.cont.assign(static_cast<std::size_t>(steps + 1) * 2, 0.0);

  Cx y0 = f_at(0.0, Cx(x.cont[0], x.cont[1]));
  y.cont[0] = y0.real();
  y.cont[1] = y0.imag();

  // Jumps: f(left + dx) - f(left), exact at event times.
  for (std::size_t e = 0; e < x.events.size(); ++e) {
    Cx pre = left_limit_at_event(x, e)[0];
    Cx dx = x.events[e].dx[0].std();
    PathEvent oe;
    oe.time = x.events[e].time;
    oe.scheduled = x.events[e].scheduled;
    oe.dx = {ComplexValue(f_at(oe.time, pre + dx) - f_at(oe.time, pre))};
    y.events.push_back(std::move(oe));
  }

  Cx acc = y0;
  std::vector<std::vector<Cx>> weight(static_cast<std::size_t>(steps),
                                      std::vector<Cx>(1));
  for (int k = 0; k < steps; ++k) {
    double t = x.dt * k;
    Cx theta = pre_hop_value(x, k)[0];
    ParamMap params{{"theta", ComplexValue(theta.real(), theta.imag())}};
    HatJet hat;
    try {
      hat = hat_gradient(jets.at(t, params));
    } catch (const NonDifferentiableAtZero&) {
      throw DomainExit(t);
    }
    for (int j = 0; j < 2; ++j) {
      if (std::isnan(hat.grad(0, j).real())) throw DomainExit(t);
    }
    Cx inc(0.0);
    for (int j = 0; j < 2; ++j)
      inc += hat.grad(0, j) *
             (x.cont[static_cast<std::size_t>((k + 1) * 2 + j)] - x.cont[static_cast<std::size_t>(k * 2 + j)]);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        inc += 0.5 * hat.hess[0](i, j) * (x.qv_at(k + 1, i, j) - x.qv_at(k, i, j));
    acc += inc;
    y.cont[static_cast<std::size_t>((k + 1) * 2)] = acc.real();
    y.cont[static_cast<std::size_t>((k + 1) * 2 + 1)] = acc.imag();
    weight[static_cast<std::size_t>(k)][0] = 0.5 * (hat.grad(0, 0) - Cx(0.0, 1.0) * hat.grad(0, 1));
  }

  propagate_qv_weighted(x, y, [&](int k) { return weight[static_cast<std::size_t>(k)]; });
  return y;
}

std::vector<ComplexValue> partial_sum_variation(const Path& x, const RepFunction& xi,
                                                double mesh) {
  if (xi.dim_in != x.dim) throw std::invalid_argument("dimension mismatch");
  long long m_ll = std::llround(mesh / x.dt);
  if (m_ll < 1 || std::abs(static_cast<double>(m_ll) * x.dt - mesh) > 1e-9)
    throw std::invalid_argument("mesh must be a multiple of dt");
  int m = static_cast<int>(m_ll);
  int steps = x.steps();

  Realized r = realize(x);
  std::vector<Cx> total(static_cast<std::size_t>(xi.dim_out), Cx(0.0));
  int prev = 0;
  while (prev < steps) {
    int next = std::min(prev + m, steps);
    double t_left = x.dt * prev;
    std::vector<ComplexValue> inc(static_cast<std::size_t>(x.dim));
    for (int c = 0; c < x.dim; ++c) {
      Cx d = r.grid[static_cast<std::size_t>(next)][static_cast<std::size_t>(c)] -
             r.grid[static_cast<std::size_t>(prev)][static_cast<std::size_t>(c)];
      inc[static_cast<std::size_t>(c)] = ComplexValue(d.real(), d.imag());
    }
    std::vector<ComplexValue> v = eval_rep(xi, t_left, inc);
    for (int c = 0; c < xi.dim_out; ++c) {
      if (v[static_cast<std::size_t>(c)].is_nan()) throw DomainExit(t_left);
      total[static_cast<std::size_t>(c)] += v[static_cast<std::size_t>(c)].std();
    }
    prev = next;
  }
  std::vector<ComplexValue> out;
  out.reserve(total.size());
  for (const Cx& v : total) out.emplace_back(v);
  return out;
}

void dump_csv(const PathEnsemble& ensemble, std::ostream& out) {
  auto num = [](double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  out << "path,t,component,re,im,jump\n";
  for (std::size_t i = 0; i < ensemble.paths.size(); ++i) {
    const Path& p = ensemble.paths[i];
    Realized r = realize(p);
    std::size_t ev = 0;
    for (int k = 0; k <= p.steps(); ++k) {
      double t = p.dt * k;
      while (ev < p.events.size() && grid_index_including(p.events[ev].time, p.dt) <= k) {
        for (int c = 0; c < p.dim; ++c)
          out << i << ',' << num(p.events[ev].time) << ',' << c + 1 << ','
              << num(p.events[ev].dx[static_cast<std::size_t>(c)].re()) << ','
              << num(p.events[ev].dx[static_cast<std::size_t>(c)].im()) << ",1\n";
        ++ev;
      }
      for (int c = 0; c < p.dim; ++c)
        out << i << ',' << num(t) << ',' << c + 1 << ','
            << num(r.grid[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)].real()) << ','
            << num(r.grid[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)].imag())
            << ",0\n";
    }
  }
}

}  // namespace emery
