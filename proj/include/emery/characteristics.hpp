#pragma once

#include <vector>

#include "emery/linalg.hpp"
#include "emery/rep_function.hpp"
#include "emery/uclass.hpp"

namespace emery {

struct JumpAtom {
  std::vector<ComplexValue> x;  // jump size in C^d
  double rate = 0.0;            // Poisson intensity
};

struct ScheduledOutcome {
  std::vector<ComplexValue> value;
  double prob = 0.0;
};

struct ScheduledJump {
  double time = 0.0;
  std::vector<ScheduledOutcome> outcomes;  // probabilities sum to 1
};

// Complex-valued Levy triplet with finite-activity jumps plus jumps at fixed
// predictable times. The drift is stored untruncated (h = id), i.e. the mean
// rate of the whole process: the simulated continuous part carries
// b - sum_k rate_k x_k so the compensated jumps average out.
struct LevyModel {
  int dim = 1;
  std::vector<ComplexValue> drift;
  RMat cov_hat;  // 2d x 2d rate of the lifted continuous quadratic variation
  std::vector<JumpAtom> atoms;
  std::vector<ScheduledJump> scheduled;
};

// Throws std::invalid_argument / std::domain_error on shape, PSD, rate or
// probability violations.
void validate(const LevyModel& model);

LevyModel parse_model_text(const std::string& text);
LevyModel load_model(const std::string& path);

// Continuous drift rate of the simulated quasi-left-continuous part.
std::vector<ComplexValue> continuous_drift(const LevyModel& model);

// Complex bilinear [X, X]^c rate derived from cov_hat.
CMat complex_qv_rate(const LevyModel& model);

struct Truncation {
  enum class Kind { Identity, Zero, Ball };
  Kind kind = Kind::Identity;
  double radius = 0.0;

  static Truncation identity() { return {}; }
  static Truncation zero() { return {Kind::Zero, 0.0}; }
  static Truncation ball(double r);

  std::vector<ComplexValue> apply(const std::vector<ComplexValue>& w) const;
  std::string name() const;
};

struct TransformedCharacteristics {
  std::vector<ComplexValue> drift_rate;  // per unit time, truncation g
  CMat cov_rate_bilinear;                // n x n, bilinear convention
  std::vector<JumpAtom> pushforward_atoms;
  double dropped_mass = 0.0;  // intensity of atoms mapped to zero
  std::vector<std::pair<double, std::vector<ComplexValue>>> scheduled_drift;
  Truncation truncation;
};

struct NotUniversal : std::runtime_error {
  explicit NotUniversal(UReport r)
      : std::runtime_error("function fails the universality checks"), report(std::move(r)) {}
  UReport report;
};

struct AtomOutsideDomain : std::runtime_error {
  AtomOutsideDomain(std::string which, std::string detail)
      : std::runtime_error("jump value outside the domain of the function (" + which + "): " +
                           detail) {}
};

struct AtomAtMinusOne : std::runtime_error {
  explicit AtomAtMinusOne(std::string detail)
      : std::runtime_error("atom at -1 violates the domain condition: " + std::move(detail)) {}
};

// Characteristics of Y = xi o X under truncation g. Gates on check_u. The
// per-unit-time part samples time-dependent coefficients at t = 0; scheduled
// contributions evaluate xi at their exact times.
TransformedCharacteristics transform(const LevyModel& model, const RepFunction& xi,
                                     const Truncation& g = Truncation::identity());

// Same drift through the Wirtinger-coordinate route; agrees with
// transform().drift_rate to rounding and is kept as an independent path for
// cross-checks.
std::vector<ComplexValue> drift_wirtinger_form(const LevyModel& model, const RepFunction& xi,
                                               const Truncation& g = Truncation::identity());

// Levy exponent kappa of the scalar function xi (quasi-left-continuous part
// only; scheduled jumps enter expectations through expectation_factor).
ComplexValue levy_exponent(const LevyModel& model, const RepFunction& xi);

// Product over scheduled times tau <= t of E[1 + xi_tau(jump)].
ComplexValue expectation_factor(const LevyModel& model, const RepFunction& xi, double t);

// E[exp(i u . (X_t - X_0))]
ComplexValue char_fn(const LevyModel& model, const std::vector<double>& u, double t);

// E[|E(X)_t|^alpha], or the sgn-weighted variant. Real-valued models only.
ComplexValue mellin(const LevyModel& model, ComplexValue alpha, double t, bool signed_variant);

// Drift with respect to truncation h: b_h = b - sum_k rate_k (x_k - h(x_k)).
std::vector<ComplexValue> retruncate_drift(const LevyModel& model, const Truncation& h);

}  // namespace emery
