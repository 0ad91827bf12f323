#include "emery/json_io.hpp"

namespace emery {

Json to_json(const ComplexValue& v) {
  if (v.is_nan()) return Json::array({"nan", "nan"});
  return Json::array({v.re(), v.im()});
}

Json to_json(const std::vector<ComplexValue>& v) {
  Json out = Json::array();
  for (const ComplexValue& z : v) out.push_back(to_json(z));
  return out;
}

Json to_json(const UReport& report) {
  Json out;
  out["passes"] = report.passes;
  Json checks = Json::array();
  for (const UCheck& c : report.checks) {
    Json item;
    item["condition"] = c.condition;
    item["pass"] = c.pass;
    item["witness"] = c.witness;
    item["bound"] = c.bound;
    checks.push_back(std::move(item));
  }
  out["checks"] = std::move(checks);
  out["remainder_bound"] = report.remainder_bound;
  out["time_singularities"] = report.time_singularities;
  return out;
}

Json to_json(const TransformedCharacteristics& tc) {
  Json out;
  out["truncation"] = tc.truncation.name();
  out["drift_rate"] = to_json(tc.drift_rate);
  Json cov = Json::array();
  for (int i = 0; i < tc.cov_rate_bilinear.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < tc.cov_rate_bilinear.cols(); ++j) {
      const Cx& v = tc.cov_rate_bilinear(i, j);
      row.push_back(Json::array({v.real(), v.imag()}));
    }
    cov.push_back(std::move(row));
  }
  out["cov_rate_bilinear"] = std::move(cov);
  Json atoms = Json::array();
  for (const JumpAtom& a : tc.pushforward_atoms) {
    Json item;
    item["atom"] = to_json(a.x);
    item["rate"] = a.rate;
    atoms.push_back(std::move(item));
  }
  out["pushforward_atoms"] = std::move(atoms);
  out["dropped_mass"] = tc.dropped_mass;
  Json sched = Json::array();
  for (const auto& [time, db] : tc.scheduled_drift) {
    Json item;
    item["time"] = time;
    item["delta_b"] = to_json(db);
    sched.push_back(std::move(item));
  }
  out["scheduled_drift"] = std::move(sched);
  return out;
}

Json to_json(const VerificationReport& report) {
  Json out;
  out["identity"] = report.identity;
  out["n_paths"] = report.n_paths;
  out["dt"] = report.dt;
  out["t_end"] = report.t_end;
  out["tol"] = report.tol;
  out["pass"] = report.pass;
  out["max_sup_discrepancy"] = report.max_sup_discrepancy;
  out["mc_mean_abs_error"] = report.mc_mean_abs_error;
  out["max_jump_increment_error"] = report.max_jump_increment_error;
  out["excluded_paths"] = report.excluded_paths;
  if (report.order_estimate)
    out["order_estimate"] = *report.order_estimate;
  else
    out["order_estimate"] = nullptr;
  out["sup_by_level"] = report.sup_by_level;
  if (!report.mesh_errors.empty()) out["mesh_errors"] = report.mesh_errors;
  return out;
}

}  // namespace emery
