#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emery/characteristics.hpp"
#include "emery/parser.hpp"
#include "test_util.hpp"

using namespace emery;

namespace {

// drift 0.1, sigma 0.3, one atom of size +1 at rate 0.5
LevyModel canonical_model() {
  LevyModel m;
  m.dim = 1;
  m.drift = {ComplexValue(0.1)};
  m.cov_hat = RMat(2);
  m.cov_hat(0, 0) = 0.09;
  m.atoms = {JumpAtom{{ComplexValue(1.0)}, 0.5}};
  return m;
}

LevyModel pure_bm(double sigma) {
  LevyModel m;
  m.dim = 1;
  m.drift = {ComplexValue(0.0)};
  m.cov_hat = RMat(2);
  m.cov_hat(0, 0) = sigma * sigma;
  return m;
}

RepFunction rf(const std::string& s, int dim = 1) { return parse(s, dim); }

}  // namespace

TEST_CASE("transform on the identity returns the model") {
  LevyModel m = canonical_model();
  TransformedCharacteristics tc = transform(m, make_identity_rep());
  CHECK(std::abs(tc.drift_rate[0].re() - 0.1) < 1e-14);
  CHECK(std::abs(tc.drift_rate[0].im()) < 1e-14);
  CHECK(std::abs(tc.cov_rate_bilinear(0, 0) - Cx(0.09)) < 1e-14);
  REQUIRE(tc.pushforward_atoms.size() == 1);
  CHECK(tc.pushforward_atoms[0].x[0] == ComplexValue(1.0));
  CHECK(tc.pushforward_atoms[0].rate == 0.5);
}

TEST_CASE("transform drift of the squared exponential model") {
  // Dxi(0) = 2, D2xi(0) = 2, xi(1) - 2*1 = 1:
  // 2*0.1 + 0.09 + 0.5*1 = 0.79
  LevyModel m = canonical_model();
  TransformedCharacteristics tc = transform(m, rf("(1+id)^2 - 1"));
  CHECK(std::abs(tc.drift_rate[0].re() - 0.79) < 1e-14);
  CHECK(std::abs(tc.drift_rate[0].im()) < 1e-14);
  CHECK(tc.pushforward_atoms[0].x[0] == ComplexValue(3.0));
  CHECK(tc.pushforward_atoms[0].rate == 0.5);
}

TEST_CASE("transform rejects functions outside the class or domain") {
  LevyModel m = canonical_model();
  CHECK_THROWS_AS(transform(m, rf("id^(1/3)")), NotUniversal);

  LevyModel bad = canonical_model();
  bad.atoms[0].x[0] = ComplexValue(-1.0);
  CHECK_THROWS_AS(transform(bad, rf("log(1 + id)")), AtomOutsideDomain);
}

TEST_CASE("levy exponent closed forms") {
  LevyModel m = canonical_model();
  SUBCASE("identity function gives the drift") {
    CHECK(std::abs(levy_exponent(m, make_identity_rep()).std() - Cx(0.1)) < 1e-14);
  }
  SUBCASE("imaginary exponential matches the compensated characteristic exponent") {
    ComplexValue kappa = levy_exponent(m, rf("exp(i * id) - 1"));
    Cx i(0.0, 1.0);
    Cx want = i * 0.1 - 0.5 * 0.09 * 1.0 + 0.5 * (std::exp(i) - 1.0 - i);
    CHECK(std::abs(kappa.std() - want) < 1e-12);
  }
  SUBCASE("squared absolute value on a real model") {
    ComplexValue kappa = levy_exponent(m, rf("abs(1 + id)^2 - 1"));
    double want = 2 * 0.1 + 0.09 + 0.5 * ((1.0 + 1.0) * (1.0 + 1.0) - 1.0 - 2.0);
    CHECK(std::abs(kappa.std() - Cx(want)) < 1e-12);
    // cross-check against the general transform route
    ComplexValue via_transform = transform(m, rf("abs(1 + id)^2 - 1")).drift_rate[0];
    CHECK(std::abs(kappa.std() - via_transform.std()) < 1e-14);
  }
}

TEST_CASE("characteristic function") {
  LevyModel m = canonical_model();
  SUBCASE("normalized at u = 0") {
    ComplexValue v = char_fn(m, {0.0}, 1.0);
    CHECK(std::abs(v.std() - Cx(1.0)) < 1e-14);
  }
  SUBCASE("standard normal for pure Brownian motion") {
    ComplexValue v = char_fn(pure_bm(1.0), {1.0}, 1.0);
    CHECK(std::abs(v.std() - Cx(std::exp(-0.5))) < 1e-14);
  }
  SUBCASE("time scaling composes the exponent") {
    ComplexValue kappa = levy_exponent(m, rf("exp(i * id) - 1"));
    ComplexValue v = char_fn(m, {1.0}, 2.0);
    CHECK(std::abs(v.std() - std::exp(2.0 * kappa.std())) < 1e-12);
  }
  SUBCASE("scheduled jumps contribute a discrete factor") {
    LevyModel m2 = pure_bm(1.0);
    ScheduledJump s;
    s.time = 0.5;
    s.outcomes = {{{ComplexValue(1.0)}, 0.5}, {{ComplexValue(-1.0)}, 0.5}};
    m2.scheduled = {s};
    ComplexValue v = char_fn(m2, {1.0}, 1.0);
    Cx want = std::exp(Cx(-0.5)) * std::cos(1.0);
    CHECK(std::abs(v.std() - want) < 1e-12);
    // before the scheduled time the factor is absent
    ComplexValue early = char_fn(m2, {1.0}, 0.25);
    CHECK(std::abs(early.std() - std::exp(Cx(-0.125))) < 1e-12);
  }
}

TEST_CASE("mellin transform") {
  SUBCASE("martingale normalization") {
    ComplexValue v = mellin(pure_bm(0.4), ComplexValue(1.0), 1.0, false);
    CHECK(std::abs(v.std() - Cx(1.0)) < 1e-12);
  }
  SUBCASE("second moment of the canonical model") {
    ComplexValue v = mellin(canonical_model(), ComplexValue(2.0), 1.0, false);
    CHECK(std::abs(v.std() - Cx(std::exp(0.79))) < 1e-12);
  }
  SUBCASE("signed and unsigned differ when a jump crosses -1") {
    LevyModel m = pure_bm(0.2);
    m.atoms = {JumpAtom{{ComplexValue(-2.0)}, 0.4}};
    ComplexValue plain = mellin(m, ComplexValue(1.0), 1.0, false);
    ComplexValue with_sign = mellin(m, ComplexValue(1.0), 1.0, true);
    CHECK(std::abs(plain.std() - with_sign.std()) > 0.1);
  }
  SUBCASE("atom at -1 violates the domain for non-positive exponents") {
    LevyModel m = pure_bm(0.2);
    m.atoms = {JumpAtom{{ComplexValue(-1.0)}, 0.4}};
    CHECK_THROWS_AS(mellin(m, ComplexValue(-1.0), 1.0, false), AtomAtMinusOne);
    CHECK_THROWS_AS(mellin(m, ComplexValue(0.5, 0.5), 1.0, false), AtomAtMinusOne);
    // positive real exponents stay legal
    CHECK_NOTHROW(mellin(m, ComplexValue(2.0), 1.0, false));
  }
  SUBCASE("complex models are rejected") {
    LevyModel m = pure_bm(0.2);
    m.drift = {ComplexValue(0.0, 0.1)};
    CHECK_THROWS_AS(mellin(m, ComplexValue(2.0), 1.0, false), std::invalid_argument);
  }
}

TEST_CASE("retruncation of the drift") {
  LevyModel m = canonical_model();
  SUBCASE("identity is a no-op") {
    CHECK(retruncate_drift(m, Truncation::identity())[0] == ComplexValue(0.1));
  }
  SUBCASE("zero truncation removes the full jump mean") {
    ComplexValue b0 = retruncate_drift(m, Truncation::zero())[0];
    CHECK(std::abs(b0.re() - (-0.4)) < 1e-14);
  }
  SUBCASE("a ball smaller than the atom acts like zero truncation") {
    ComplexValue bb = retruncate_drift(m, Truncation::ball(0.5))[0];
    CHECK(std::abs(bb.re() - (-0.4)) < 1e-14);
  }
}

TEST_CASE("real-lift and Wirtinger drift routes agree") {
  LevyModel m = canonical_model();
  LevyModel complex_model;
  complex_model.dim = 1;
  complex_model.drift = {ComplexValue(0.05, -0.02)};
  complex_model.cov_hat = RMat(2);
  complex_model.cov_hat(0, 0) = 0.04;
  complex_model.cov_hat(1, 1) = 0.02;
  complex_model.cov_hat(0, 1) = complex_model.cov_hat(1, 0) = 0.01;
  complex_model.atoms = {JumpAtom{{ComplexValue(0.4, 0.3)}, 0.7}};

  for (const CatalogEntry& entry : catalog()) {
    if (entry.fn.dim_in != 1) continue;
    if (entry.name.rfind("signed", 0) == 0) continue;  // real-domain entry
    CAPTURE(entry.name);
    for (const LevyModel* model : {&m, &complex_model}) {
      ComplexValue hat_route = transform(*model, entry.fn).drift_rate[0];
      ComplexValue check_route = drift_wirtinger_form(*model, entry.fn)[0];
      CHECK(std::abs(hat_route.std() - check_route.std()) < 1e-12);
    }
  }
}

TEST_CASE("truncation invariance of the drift") {
  LevyModel m = canonical_model();
  for (const char* expr : {"(1+id)^2 - 1", "exp(id) - 1", "abs(1 + id) - 1"}) {
    CAPTURE(expr);
    RepFunction xi = rf(expr);
    TransformedCharacteristics untruncated = transform(m, xi, Truncation::identity());
    Truncation ball = Truncation::ball(0.25);
    TransformedCharacteristics truncated = transform(m, xi, ball);
    // compensate: sum of rate * (xi(x) - g(xi(x)))
    Cx compensation(0.0);
    for (const JumpAtom& a : m.atoms) {
      std::vector<ComplexValue> y = eval_rep(xi, 0.0, a.x);
      std::vector<ComplexValue> gy = ball.apply(y);
      compensation += a.rate * (y[0].std() - gy[0].std());
    }
    CHECK(std::abs(untruncated.drift_rate[0].std() -
                   (truncated.drift_rate[0].std() + compensation)) < 1e-12);
  }
}

TEST_CASE("analytic functions admit the complex-derivative shortcut") {
  LevyModel complex_model;
  complex_model.dim = 1;
  complex_model.drift = {ComplexValue(0.05, -0.02)};
  complex_model.cov_hat = RMat(2);
  complex_model.cov_hat(0, 0) = 0.04;
  complex_model.cov_hat(1, 1) = 0.02;
  complex_model.atoms = {JumpAtom{{ComplexValue(0.3, 0.1)}, 0.6}};

  for (const CatalogEntry& entry : catalog()) {
    if (!entry.fn.analytic_at_zero || entry.fn.dim_in != 1) continue;
    CAPTURE(entry.name);
    WirtingerJet jet = jet_at_zero(entry.fn);
    Cx d1 = jet.grad_z(0, 0);
    Cx d2 = jet.hess[0](0, 0);
    Cx c = complex_qv_rate(complex_model)(0, 0);
    Cx b = complex_model.drift[0].std();
    Cx drift = d1 * b + 0.5 * d2 * c;
    for (const JumpAtom& a : complex_model.atoms) {
      Cx y = eval_rep(entry.fn, 0.0, a.x)[0].std();
      drift += a.rate * (y - d1 * a.x[0].std());
    }
    ComplexValue general = transform(complex_model, entry.fn).drift_rate[0];
    CHECK(std::abs(general.std() - drift) < 1e-12);
  }
}

TEST_CASE("transform is linear in the function") {
  LevyModel m = canonical_model();
  RepFunction f1 = rf("exp(id) - 1");
  RepFunction f2 = rf("(1+id)^2 - 1");
  ComplexValue lambda(0.5, 1.5);
  Expr combined = Expr::add(f1.components[0],
                            Expr::mul(Expr::constant(lambda), f2.components[0]));
  RepFunction sum = make_rep_function({simplify(combined)}, 1);
  Cx got = transform(m, sum).drift_rate[0].std();
  Cx want = transform(m, f1).drift_rate[0].std() +
            lambda.std() * transform(m, f2).drift_rate[0].std();
  CHECK(std::abs(got - want) < 1e-12);
}

TEST_CASE("conformal models annihilate analytic covariations") {
  // X = (W1 + i W2)/sqrt(2): cov_hat = I/2, bilinear [X,X]^c = 0
  LevyModel m;
  m.dim = 1;
  m.drift = {ComplexValue(0.0)};
  m.cov_hat = RMat(2);
  m.cov_hat(0, 0) = m.cov_hat(1, 1) = 0.5;
  CHECK(std::abs(complex_qv_rate(m)(0, 0)) < 1e-15);

  for (const CatalogEntry& entry : catalog()) {
    if (!entry.fn.analytic_at_zero || entry.fn.dim_in != 1) continue;
    CAPTURE(entry.name);
    TransformedCharacteristics tc = transform(m, entry.fn);
    CHECK(std::abs(tc.cov_rate_bilinear(0, 0)) < 1e-12);
  }
}

TEST_CASE("push-forward composes and merges") {
  LevyModel m = pure_bm(0.1);
  m.atoms = {JumpAtom{{ComplexValue(1.0)}, 0.5}, JumpAtom{{ComplexValue(0.25)}, 2.0}};

  RepFunction xi = rf("(1+id)^2 - 1");
  RepFunction psi = rf("log(1 + id)");
  RepFunction composed = substitute(psi, xi);

  TransformedCharacteristics via_xi = transform(m, xi);
  // feed the push-forward of xi back in as a model
  LevyModel pushed = pure_bm(0.1);
  pushed.atoms = via_xi.pushforward_atoms;
  TransformedCharacteristics two_step = transform(pushed, psi);
  TransformedCharacteristics one_step = transform(m, composed);

  REQUIRE(two_step.pushforward_atoms.size() == one_step.pushforward_atoms.size());
  for (std::size_t i = 0; i < one_step.pushforward_atoms.size(); ++i) {
    CHECK(one_step.pushforward_atoms[i].x[0] == two_step.pushforward_atoms[i].x[0]);
    CHECK(one_step.pushforward_atoms[i].rate == two_step.pushforward_atoms[i].rate);
  }

  SUBCASE("colliding images merge with summed intensity") {
    LevyModel mm = pure_bm(0.1);
    mm.atoms = {JumpAtom{{ComplexValue(0.5)}, 0.25}, JumpAtom{{ComplexValue(-2.5)}, 0.75}};
    // (1+x)^2 - 1 maps both 0.5 and -2.5 to 1.25
    TransformedCharacteristics tc = transform(mm, xi);
    REQUIRE(tc.pushforward_atoms.size() == 1);
    CHECK(tc.pushforward_atoms[0].rate == doctest::Approx(1.0));
  }
  SUBCASE("atoms mapped to zero are dropped with their mass noted") {
    LevyModel mm = pure_bm(0.1);
    mm.atoms = {JumpAtom{{ComplexValue(-2.0)}, 0.3}};  // (1-2)^2 - 1 = 0
    TransformedCharacteristics tc = transform(mm, xi);
    CHECK(tc.pushforward_atoms.empty());
    CHECK(tc.dropped_mass == doctest::Approx(0.3));
  }
}

TEST_CASE("scheduled jumps enter the drift at their exact times") {
  LevyModel m = pure_bm(0.3);
  ScheduledJump s;
  s.time = 0.25;
  s.outcomes = {{{ComplexValue(0.5)}, 0.25}, {{ComplexValue(-0.5)}, 0.75}};
  m.scheduled = {s};
  TransformedCharacteristics tc = transform(m, rf("(1+id)^2 - 1"));
  REQUIRE(tc.scheduled_drift.size() == 1);
  CHECK(tc.scheduled_drift[0].first == 0.25);
  double want = 0.25 * ((1.5 * 1.5) - 1.0) + 0.75 * ((0.5 * 0.5) - 1.0);
  CHECK(tc.scheduled_drift[0].second[0].re() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("model files parse, validate, and reject garbage") {
  const char* text = R"(
# comment
dim = 1
drift = [[0.1, 0.0]]
cov_hat = [
  [0.09, 0.0],
  [0.0, 0.0],
]

[[jumps]]
atom = [[1.0, 0.0]]
rate = 0.5

[[scheduled]]
time = 0.5
[[scheduled.outcomes]]
value = [[1.0, 0.0]]
prob = 0.5
[[scheduled.outcomes]]
value = [[-1.0, 0.0]]
prob = 0.5
)";
  LevyModel m = parse_model_text(text);
  CHECK(m.dim == 1);
  CHECK(m.drift[0] == ComplexValue(0.1));
  CHECK(m.cov_hat(0, 0) == 0.09);
  REQUIRE(m.atoms.size() == 1);
  CHECK(m.atoms[0].rate == 0.5);
  REQUIRE(m.scheduled.size() == 1);
  CHECK(m.scheduled[0].outcomes.size() == 2);

  CHECK_THROWS(parse_model_text("dim = 1\ndrift = [[0, 0]]\nbogus_key = 3\n"));
  CHECK_THROWS(parse_model_text("drift = [[0, 0]]\n"));  // dim missing
  // probabilities must sum to one
  CHECK_THROWS(parse_model_text(
      "dim = 1\n[[scheduled]]\ntime = 0.5\n[[scheduled.outcomes]]\nvalue = [[1, 0]]\nprob = "
      "0.7\n"));
  // non-PSD covariance
  CHECK_THROWS(parse_model_text("dim = 1\ncov_hat = [[-1, 0], [0, 0]]\n"));
}
