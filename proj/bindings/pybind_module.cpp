#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "reprodiff/model.hpp"
#include "reprodiff/periodic.hpp"
#include "reprodiff/r0.hpp"
#include "reprodiff/spectral.hpp"
#include "reprodiff/zika.hpp"

namespace py = pybind11;
using namespace reprodiff;

namespace {

nlohmann::json parse_config(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

py::dict r0_from_config(const std::string& config_text) {
  nlohmann::json config = parse_config(config_text);
  ModelSpec m = build_model(config);
  if (!m.split) throw ConfigError("r0 requires a split reaction (reaction.form == \"split\")");
  R0Result r = r0_bisect(m, Setting::pde());
  py::dict out;
  out["value"] = r.value;
  out["status"] = to_string(r.status);
  out["mu_lo"] = r.mu_lo;
  out["mu_hi"] = r.mu_hi;
  out["probes"] = r.omega_trace.size();
  return out;
}

double lambda_star_from_config(const std::string& config_text) {
  ModelSpec m = build_model(parse_config(config_text));
  return principal_eigenvalue(m).lambda_star;
}

py::dict validate_config(const std::string& config_text) {
  nlohmann::json config = parse_config(config_text);
  ModelSpec m = build_model(config);
  AssumptionReport rep = validate_assumptions(m);
  py::dict out;
  out["cooperative_ok"] = rep.cooperative_ok;
  out["gain_nonneg_ok"] = rep.F_nonneg_ok;
  out["decay_contracting"] = rep.omega_Gamma_negative;
  out["averaged_decay_contracting"] = rep.omega_Gamma_tilde_negative;
  out["all_ok"] = rep.all_ok();
  std::vector<std::string> violations;
  for (const auto& v : rep.violations) violations.push_back(v.assumption + " at " + v.location);
  out["violations"] = violations;
  return out;
}

std::string sweep_csv(const std::string& config_text, const std::vector<double>& kappas,
                      const std::string& what, int jobs) {
  nlohmann::json config = parse_config(config_text);
  if (what != "r0" && what != "eigenvalue")
    throw ConfigError("what must be r0 or eigenvalue");
  if (config.contains("zika")) {
    if (what != "r0") throw ConfigError("zika sweeps support what == r0 only");
    return zika_sweep(build_zika(config), kappas, {}, jobs).to_csv();
  }
  ModelSpec m = build_model(config);
  return sweep(m, kappas, what == "r0" ? SweepWhat::r0 : SweepWhat::eigenvalue, {}, jobs)
      .to_csv();
}

double spectral_radius_list(const std::vector<std::vector<double>>& rows) {
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw ConfigError("matrix must be square");
    for (int j = 0; j < n; ++j) A(i, j) = rows[i][j];
  }
  return spectral_radius(A).radius;
}

py::dict zika_from_config(const std::string& config_text) {
  ZikaParams p = build_zika(parse_config(config_text));
  R0Result r = zika_r0(p);
  ZikaLimits lim = zika_limits(p);
  py::dict out;
  out["value"] = r.value;
  out["status"] = to_string(r.status);
  out["limit_small"] = lim.small_endpoint;
  out["limit_large"] = lim.large_endpoint;
  return out;
}

py::dict periodic_from_config(const std::string& config_text) {
  nlohmann::json config = parse_config(config_text);
  ModelSpec m = build_model(config);
  ReactionSpec spec = build_reaction_spec(config);
  PeriodicSolution sol = solve_periodic(m, spec, {}, Setting::pde());
  py::dict out;
  out["residual"] = sol.residual;
  out["periods_to_converge"] = sol.periods_to_converge;
  out["w_hat_norm"] = sol.w_hat_norm;
  out["two_sided_gap"] = sol.two_sided_gap;
  out["two_sided_agreement"] = sol.two_sided_agreement;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() =
      "Reproduction ratios and principal eigenvalues of time-periodic "
      "cooperative reaction-diffusion systems on an interval";
  py::register_exception<ConfigError>(mod, "ConfigError");
  py::register_exception<ComputeError>(mod, "ComputeError");
  mod.def("r0", &r0_from_config, py::arg("config_json"),
          "Basic reproduction ratio of a split-form model (PDE setting).");
  mod.def("lambda_star", &lambda_star_from_config, py::arg("config_json"),
          "Principal eigenvalue of the full periodic flow.");
  mod.def("validate", &validate_config, py::arg("config_json"),
          "Assumption checks; returns a dict of flags and violations.");
  mod.def("sweep_csv", &sweep_csv, py::arg("config_json"), py::arg("kappas"),
          py::arg("what") = "r0", py::arg("jobs") = 1,
          "Diffusion-rate sweep; returns the CSV text including endpoint rows.");
  mod.def("spectral_radius", &spectral_radius_list, py::arg("matrix"),
          "Spectral radius of a nonnegative matrix (list of rows).");
  mod.def("zika", &zika_from_config, py::arg("config_json"),
          "Vector-host case study: ratio plus small/large-diffusion endpoints.");
  mod.def("periodic", &periodic_from_config, py::arg("config_json"),
          "Positive periodic solution diagnostics of a nonlinear model.");
}
