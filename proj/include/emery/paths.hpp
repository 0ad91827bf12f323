#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "emery/characteristics.hpp"

namespace emery {

struct PathEvent {
  double time = 0.0;
  std::vector<ComplexValue> dx;  // jump of the complex process
  bool scheduled = false;
};

// A sampled cadlag process: a lifted continuous part on a uniform grid, an
// exact (time, jump) event list, and the cumulative continuous quadratic
// variation on the grid. Between grid points the continuous part is treated
// as flat, so every derived quantity is an exact function of the same sample
// and jump bookkeeping stays consistent to rounding across constructions.
// Value at t = continuous part + sum of jumps at times <= t.
struct Path {
  int dim = 1;     // complex dimension
  double t_end = 0.0;
  double dt = 0.0;
  std::vector<double> cont;    // (N+1) x 2*dim, lifted, jumps excluded
  std::vector<PathEvent> events;  // sorted by time
  std::vector<double> qv_cum;  // (N+1) x (2*dim)^2 cumulative [X-hat, X-hat]^c; empty if unknown
  std::uint64_t seed = 0;

  int steps() const { return static_cast<int>(cont.size()) / (2 * dim) - 1; }
  double time_at(int k) const { return t_end * k / steps(); }
  bool has_qv() const { return !qv_cum.empty(); }

  Cx cont_at(int k, int comp) const {
    return {cont[static_cast<std::size_t>(k * 2 * dim + 2 * comp)],
            cont[static_cast<std::size_t>(k * 2 * dim + 2 * comp + 1)]};
  }
  double qv_at(int k, int i, int j) const {
    int w = 2 * dim;
    return qv_cum[static_cast<std::size_t>(k * w * w + i * w + j)];
  }
};

struct PathEnsemble {
  double t_end = 0.0;
  double dt = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<Path> paths;
};

// Values of a path at the comparison points: the grid, plus (pre, post) pairs
// at every event.
struct Realized {
  struct Ev {
    double t;
    std::vector<Cx> pre, post;
  };
  std::vector<std::vector<Cx>> grid;  // N+1 entries of dim values
  std::vector<Ev> events;
};

Realized realize(const Path& p);

struct VerificationReport {
  std::string identity;
  int n_paths = 0;
  double dt = 0.0;
  double t_end = 0.0;
  double tol = 0.0;
  bool pass = false;
  double max_sup_discrepancy = 0.0;
  double mc_mean_abs_error = 0.0;
  double max_jump_increment_error = 0.0;
  int excluded_paths = 0;
  std::optional<double> order_estimate;      // log2 error ratio per halving
  std::vector<double> sup_by_level;          // discrepancy at dt, dt/2, dt/4 when ordered
  std::vector<double> mesh_errors;           // partial-sum identity only
};

struct ZeroHit : std::runtime_error {
  explicit ZeroHit(double t)
      : std::runtime_error("path hit zero at t = " + std::to_string(t)) {}
};

struct CompositionRejected : std::runtime_error {
  explicit CompositionRejected(Rejection r)
      : std::runtime_error(std::string("composition rejected: ") + to_string(r.code) +
                           (r.detail.empty() ? "" : " (" + r.detail + ")")),
        rejection(std::move(r)) {}
  Rejection rejection;
};

struct EventOutsideDomain : std::runtime_error {
  explicit EventOutsideDomain(double t)
      : std::runtime_error("jump at t = " + std::to_string(t) +
                           " is outside the domain of the function") {}
};

struct DomainExit : std::runtime_error {
  explicit DomainExit(double t)
      : std::runtime_error("path left the domain of the change of variables at t = " +
                           std::to_string(t)) {}
};

// Exact finite-activity jump-diffusion sampling. Brownian increments come
// from a per-path splitmix64 stream split off master_seed by path index;
// Poisson event times are exponential gaps per atom, scheduled outcomes are
// sampled by probability. When the step count is a power of two (up to 2^14)
// the Gaussian draws are made at a fixed fine base level and aggregated, so
// refining dt refines the same Brownian path.
PathEnsemble simulate(const LevyModel& model, double t_end, double dt, int n_paths,
                      std::uint64_t master_seed);

// Pathwise three-term evaluation of Y = xi o X: left-point gradient sums over
// the continuous increments, the model-implied quadratic-variation term, and
// exact jump terms xi_s(dx) at event times. Starts at 0.
Path emery_eval(const Path& x, const RepFunction& xi, JetMode mode = JetMode::Strict);

// Componentwise stochastic exponential via the product formula, using the
// path's model-implied continuous quadratic variation.
Path stochastic_exponential(const Path& z);

// Componentwise left-point integral of dV / V_-; throws ZeroHit.
Path stochastic_logarithm(const Path& v);

// Pointwise componentwise maps (values and jumps transform exactly; the
// output carries no quadratic-variation data). The general form receives
// (value, component, time) and throws DomainExit on NaN.
Path pointwise_map(const Path& p, const std::function<Cx(Cx, int, double)>& f);
Path pointwise_exp(const Path& p, ComplexValue alpha);   // e^{alpha v}
Path pointwise_pow(const Path& p, ComplexValue alpha);   // v^alpha
Path pointwise_abs(const Path& p);                       // |v|
Path component_product(const Path& p);                   // v_1 * ... * v_n -> scalar

// Ito change of variables through the state-bound representing function
// f(theta + x) - f(theta), theta = left limit. Returns the path of f(X)
// starting at f(X_0). f is an expression in one variable.
Path ito_rep(const Path& x, const Expr& f);

// Left-point partial sum over a coarsened partition of mesh width m;
// value at the final time.
std::vector<ComplexValue> partial_sum_variation(const Path& x, const RepFunction& xi,
                                                double mesh);

struct VerifyParams {
  double t_end = 1.0;
  ComplexValue alpha{2.0};
  ComplexValue beta{-1.0};
  int k = 1;
  std::string ito_function = "id^2";
  std::string outer = "(1+id)^2 - 1";
  std::string inner = "exp(id) - 1";
  bool force = false;
  bool estimate_order = false;
  double tol = -1.0;  // < 0: use the 50*dt default
};

// Identity names: yor, yor-converse, abs-yor, exp-log, log-exp,
// abs-exponential, composition, iterated, ito, partial-sum.
VerificationReport verify_identity(const std::string& name, const LevyModel& model,
                                   const VerifyParams& params, int n_paths, double dt,
                                   std::uint64_t master_seed);

// Worker pool over path indices; honors EMERY_THREADS. Results must be
// written to per-index slots, never shared accumulators.
void parallel_for_paths(int n, const std::function<void(int)>& body);

void dump_csv(const PathEnsemble& ensemble, std::ostream& out);

}  // namespace emery
