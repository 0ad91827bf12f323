#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "emery/json_io.hpp"
#include "emery/parser.hpp"
#include "emery/paths.hpp"

namespace {

using namespace emery;

ComplexValue parse_constant(const std::string& text, const std::string& flag) {
  RepFunction f = parse(text, 1);
  if (f.components[0].kind() != Expr::Kind::Const)
    throw CLI::ValidationError(flag, "must be a constant expression");
  return f.components[0].const_value();
}

Truncation parse_truncation(const std::string& text) {
  if (text == "id" || text == "identity") return Truncation::identity();
  if (text == "zero") return Truncation::zero();
  if (text.rfind("ball:", 0) == 0) return Truncation::ball(std::stod(text.substr(5)));
  throw CLI::ValidationError("--trunc", "expected id, zero, or ball:R");
}

void emit(const Json& j, const std::string& out_path) {
  std::string text = j.dump(2);
  text += "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    out << text;
  }
}

int dispatch(CLI::App& app, int argc, char** argv);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simplified stochastic calculus engine: representing functions, "
               "Levy characteristics, and pathwise identity verification"};
  try {
    return dispatch(app, argc, argv);
  } catch (const ParseError& e) {
    // re-thrown with the original text attached by the handlers below
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const CompositionRejected& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const NotUniversal& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

namespace {

struct ExprArg {
  std::string text;
  int dim = 1;

  RepFunction parse_or_exit() const {
    try {
      return parse(text, dim);
    } catch (const ParseError& e) {
      std::cerr << format_parse_error(text, e);
      std::exit(2);
    }
  }
};

int dispatch(CLI::App& app, int argc, char** argv) {
  app.require_subcommand(1);

  // diff
  auto* diff_cmd = app.add_subcommand("diff", "symbolic Wirtinger derivative of an expression");
  ExprArg diff_expr;
  int diff_var = 1;
  bool diff_conj = false;
  diff_cmd->add_option("--expr", diff_expr.text, "expression")->required();
  diff_cmd->add_option("--var", diff_var, "variable index (1-based)");
  diff_cmd->add_option("--dim", diff_expr.dim, "input dimension");
  diff_cmd->add_flag("--conj", diff_conj, "differentiate in the conjugated direction");

  // check-u
  auto* check_cmd = app.add_subcommand("check-u", "universality checks for an expression");
  ExprArg check_expr;
  double check_horizon = 1.0;
  check_cmd->add_option("--expr", check_expr.text, "expression")->required();
  check_cmd->add_option("--dim", check_expr.dim, "input dimension");
  check_cmd->add_option("--horizon", check_horizon, "time horizon");

  // compose
  auto* compose_cmd = app.add_subcommand("compose", "gated composition of two functions");
  std::string compose_outer, compose_inner;
  int compose_dim = 1;
  double compose_horizon = 1.0;
  compose_cmd->add_option("--outer", compose_outer, "outer function")->required();
  compose_cmd->add_option("--inner", compose_inner, "inner function")->required();
  compose_cmd->add_option("--dim", compose_dim, "inner input dimension");
  compose_cmd->add_option("--horizon", compose_horizon, "time horizon");

  // transform
  auto* transform_cmd = app.add_subcommand("transform", "characteristics of xi o X");
  std::string transform_model, transform_trunc = "id", transform_out;
  std::string transform_expr;
  transform_cmd->add_option("--model", transform_model, "model file (TOML)")->required();
  transform_cmd->add_option("--expr", transform_expr, "representing function")->required();
  transform_cmd->add_option("--trunc", transform_trunc, "truncation: id, zero, ball:R");
  transform_cmd->add_option("--out", transform_out, "output file (default stdout)");

  // cf
  auto* cf_cmd = app.add_subcommand("cf", "characteristic function E[e^{iu(X_t - X_0)}]");
  std::string cf_model;
  std::vector<double> cf_u;
  double cf_t = 1.0;
  cf_cmd->add_option("--model", cf_model, "model file (TOML)")->required();
  cf_cmd->add_option("--u", cf_u, "grid of u values (scalar models) or one u vector")
      ->required()
      ->delimiter(',');
  cf_cmd->add_option("--t", cf_t, "time");

  // mellin
  auto* mellin_cmd = app.add_subcommand("mellin", "E[|E(X)_t|^alpha] for a real model");
  std::string mellin_model, mellin_alpha = "2";
  double mellin_t = 1.0;
  bool mellin_signed = false;
  mellin_cmd->add_option("--model", mellin_model, "model file (TOML)")->required();
  mellin_cmd->add_option("--alpha", mellin_alpha, "exponent (constant expression)");
  mellin_cmd->add_option("--t", mellin_t, "time");
  mellin_cmd->add_flag("--signed", mellin_signed, "sgn-weighted variant");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "sample paths to CSV");
  std::string sim_model, sim_out;
  double sim_t = 1.0, sim_dt = 1.0 / 256;
  int sim_paths = 16;
  std::uint64_t sim_seed = 1;
  sim_cmd->add_option("--model", sim_model, "model file (TOML)")->required();
  sim_cmd->add_option("--t", sim_t, "horizon");
  sim_cmd->add_option("--dt", sim_dt, "grid step");
  sim_cmd->add_option("--paths", sim_paths, "number of paths");
  sim_cmd->add_option("--seed", sim_seed, "master seed");
  sim_cmd->add_option("--out", sim_out, "output CSV (default stdout)");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "pathwise identity verification");
  std::string v_identity, v_model, v_out;
  VerifyParams v_params;
  std::string v_alpha = "2", v_beta = "-1";
  double v_t = 1.0, v_dt = 1.0 / 512, v_tol = -1.0;
  int v_paths = 64, v_k = 1;
  std::uint64_t v_seed = 1;
  bool v_order = false, v_force = false;
  verify_cmd->add_option("--identity", v_identity, "identity name")->required();
  verify_cmd->add_option("--model", v_model, "model file (TOML)")->required();
  verify_cmd->add_option("--t", v_t, "horizon");
  verify_cmd->add_option("--dt", v_dt, "grid step");
  verify_cmd->add_option("--paths", v_paths, "number of paths");
  verify_cmd->add_option("--seed", v_seed, "master seed");
  verify_cmd->add_option("--alpha", v_alpha, "alpha parameter");
  verify_cmd->add_option("--beta", v_beta, "beta parameter");
  verify_cmd->add_option("--k", v_k, "iteration count (iterated identity)");
  verify_cmd->add_option("--f", v_params.ito_function, "change-of-variables function (ito)");
  verify_cmd->add_option("--outer", v_params.outer, "outer function (composition)");
  verify_cmd->add_option("--inner", v_params.inner, "inner function (composition, partial-sum)");
  verify_cmd->add_option("--tol", v_tol, "pass tolerance (default 50*dt, printed)");
  verify_cmd->add_flag("--order", v_order, "estimate the convergence order (reruns at dt/2, dt/4)");
  verify_cmd->add_flag("--force", v_force, "skip the composition gate");
  verify_cmd->add_option("--out", v_out, "output file (default stdout)");

  app.parse(argc, argv);

  if (*diff_cmd) {
    RepFunction f = diff_expr.parse_or_exit();
    std::string out;
    for (std::size_t m = 0; m < f.components.size(); ++m) {
      if (m) out += "; ";
      out += to_string(simplify(wirtinger_diff(f.components[m], diff_var, diff_conj)),
                       f.dim_in);
    }
    std::cout << out << "\n";
    return 0;
  }

  if (*check_cmd) {
    RepFunction f = check_expr.parse_or_exit();
    UReport report = check_u(f, check_horizon);
    emit(to_json(report), "");
    return report.passes ? 0 : 1;
  }

  if (*compose_cmd) {
    RepFunction inner = ExprArg{compose_inner, compose_dim}.parse_or_exit();
    RepFunction outer = ExprArg{compose_outer, inner.dim_out}.parse_or_exit();
    auto result = compose_check(outer, inner, compose_horizon);
    if (std::holds_alternative<Rejection>(result)) {
      const Rejection& r = std::get<Rejection>(result);
      Json j;
      j["accepted"] = false;
      j["reason"] = to_string(r.code);
      j["detail"] = r.detail;
      emit(j, "");
      return 1;
    }
    const Composition& comp = std::get<Composition>(result);
    Json j;
    j["accepted"] = true;
    j["composed"] = pretty(comp.composed);
    j["chain_rule_error"] = comp.chain_rule_error;
    j["report"] = to_json(comp.report);
    emit(j, "");
    return 0;
  }

  if (*transform_cmd) {
    LevyModel model = load_model(transform_model);
    RepFunction xi = ExprArg{transform_expr, model.dim}.parse_or_exit();
    TransformedCharacteristics tc = transform(model, xi, parse_truncation(transform_trunc));
    emit(to_json(tc), transform_out);
    return 0;
  }

  if (*cf_cmd) {
    LevyModel model = load_model(cf_model);
    if (model.dim == 1) {
      std::cout << "u,re,im\n";
      for (double u : cf_u) {
        ComplexValue v = char_fn(model, {u}, cf_t);
        std::cout << u << "," << v.re() << "," << v.im() << "\n";
      }
    } else {
      if (static_cast<int>(cf_u.size()) != model.dim)
        throw CLI::ValidationError("--u", "needs exactly dim components for a vector model");
      ComplexValue v = char_fn(model, cf_u, cf_t);
      std::cout << "re,im\n" << v.re() << "," << v.im() << "\n";
    }
    return 0;
  }

  if (*mellin_cmd) {
    LevyModel model = load_model(mellin_model);
    ComplexValue alpha = parse_constant(mellin_alpha, "--alpha");
    ComplexValue v = mellin(model, alpha, mellin_t, mellin_signed);
    Json j;
    j["alpha"] = to_json(alpha);
    j["t"] = mellin_t;
    j["signed"] = mellin_signed;
    j["value"] = to_json(v);
    emit(j, "");
    return 0;
  }

  if (*sim_cmd) {
    LevyModel model = load_model(sim_model);
    PathEnsemble ens = simulate(model, sim_t, sim_dt, sim_paths, sim_seed);
    if (sim_out.empty()) {
      dump_csv(ens, std::cout);
    } else {
      std::ofstream out(sim_out);
      dump_csv(ens, out);
    }
    return 0;
  }

  if (*verify_cmd) {
    LevyModel model = load_model(v_model);
    v_params.t_end = v_t;
    v_params.alpha = parse_constant(v_alpha, "--alpha");
    v_params.beta = parse_constant(v_beta, "--beta");
    v_params.k = v_k;
    v_params.force = v_force;
    v_params.estimate_order = v_order;
    v_params.tol = v_tol;
    VerificationReport report = verify_identity(v_identity, model, v_params, v_paths, v_dt, v_seed);
    emit(to_json(report), v_out);
    return report.pass ? 0 : 1;
  }

  return 2;
}

}  // namespace
