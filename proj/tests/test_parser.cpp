#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emery/parser.hpp"
#include "emery/uclass.hpp"
#include "test_util.hpp"

using namespace emery;
using emery::testing::TreeGen;

TEST_CASE("grammar basics") {
  RepFunction f = parse("(1+id)^2 - 1", 1);
  Expr want = Expr::sub(Expr::pow(Expr::add(Expr::constant(1.0), Expr::var(1)), ComplexValue(2.0)),
                        Expr::constant(1.0));
  CHECK(structurally_equal(f.components[0], want));

  RepFunction yor = parse("(1+id1)^2 * (1+id2)^-1 - 1", 2);
  CHECK(structurally_equal(yor.components[0], make_yor(ComplexValue(2.0), ComplexValue(-1.0))
                                                  .components[0]));

  RepFunction a = parse("abs(1+id)^0.5 - 1", 1);
  CHECK(structurally_equal(a.components[0], make_abs_power(ComplexValue(0.5)).components[0]));

  RepFunction vec = parse("id1; id2; id1 * id2", 2);
  CHECK(vec.dim_out == 3);

  // division is multiplication by the inverse power
  RepFunction div = parse("id / (1 + id)", 1);
  Expr want_div = Expr::mul(Expr::var(1), Expr::pow(Expr::add(Expr::constant(1.0), Expr::var(1)),
                                                    ComplexValue(-1.0)));
  CHECK(structurally_equal(div.components[0], want_div));

  // whitespace insensitivity
  CHECK(structurally_equal(parse("exp( id )-1", 1).components[0],
                           parse("exp(id) - 1", 1).components[0]));
}

TEST_CASE("constants fold at parse time") {
  CHECK(parse("2 + 3*i", 1).components[0].kind() == Expr::Kind::Const);
  CHECK(parse("2 + 3*i", 1).components[0].const_value() == ComplexValue(2.0, 3.0));
  CHECK(parse("2^3", 1).components[0].const_value() == ComplexValue(8.0));
  CHECK(parse("-0.5", 1).components[0].const_value() == ComplexValue(-0.5));
}

TEST_CASE("parse errors carry usable spans") {
  auto expect_error = [&](const std::string& text) {
    try {
      parse(text, 1);
      FAIL("expected a parse error for: ", text);
    } catch (const ParseError& e) {
      CHECK(e.span().start <= e.span().end);
      CHECK(e.span().end <= text.size());
    }
  };
  expect_error("1 + ");
  expect_error("exp(id");
  expect_error("unknownfn(id)");
  expect_error("id ^ id");      // exponent must be constant
  expect_error("id2");          // beyond declared dimension 1
  expect_error("theta.");       // missing parameter name
  expect_error("(1+id))");      // stray paren
}

TEST_CASE("exponent must be a constant, with a dedicated error") {
  try {
    parse("(1+id)^(id)", 1);
    FAIL("expected rejection");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("constant") != std::string::npos);
  }
}

TEST_CASE("time-dependent coefficients parse") {
  RepFunction f = parse("t^(-0.5) * id", 1);
  CHECK(f.time_dependent);
  RepFunction g = parse(pretty(f), 1);
  CHECK(structurally_equal(f.components[0], g.components[0]));
}

TEST_CASE("pretty round-trips the catalog") {
  for (const CatalogEntry& entry : catalog()) {
    RepFunction again = parse(pretty(entry.fn), entry.fn.dim_in);
    REQUIRE(again.dim_out == entry.fn.dim_out);
    for (int m = 0; m < again.dim_out; ++m)
      CHECK(structurally_equal(again.components[static_cast<std::size_t>(m)],
                               entry.fn.components[static_cast<std::size_t>(m)]));
  }
  CHECK(pretty(parse("exp(id)-1", 1)) == "exp(id) - 1");
  CHECK(to_string(Expr::constant(ComplexValue(2.0, 3.0))) == "(2 + 3*i)");
}

TEST_CASE("pretty round-trips 200 random trees") {
  TreeGen gen(4242, 2);
  int done = 0;
  while (done < 200) {
    Expr t = gen.tree(6);
    RepFunction f = make_rep_function({t}, 2);
    std::string text = pretty(f);
    CAPTURE(text);
    RepFunction back = parse(text, 2);
    CHECK(structurally_equal(back.components[0], t));
    ++done;
  }
}
