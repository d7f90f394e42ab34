#include "reprodiff/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "reprodiff/csvio.hpp"
#include "reprodiff/errors.hpp"
#include "reprodiff/model.hpp"
#include "reprodiff/periodic.hpp"
#include "reprodiff/r0.hpp"
#include "reprodiff/spectral.hpp"
#include "reprodiff/zika.hpp"

namespace reprodiff {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

void apply_overrides(json& config, const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override must look like dotted.key=value (got \"" + ov + "\")");
    std::string key = ov.substr(0, eq), value = ov.substr(eq + 1);
    std::string ptr = "/";
    for (char c : key) ptr += (c == '.') ? '/' : c;
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::parse_error&) {
      parsed = value;  // bare strings stay strings
    }
    try {
      config[json::json_pointer(ptr)] = parsed;
    } catch (const json::exception& e) {
      throw ConfigError("cannot apply override \"" + ov + "\": " + e.what());
    }
  }
}

struct TaskOutput {
  std::vector<std::string> summary;
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
  int exit_code = 0;
  int n_x = 0, n_t = 0;
};

std::string yesno(bool b) { return b ? "yes" : "no"; }

std::string kappa_list(const std::vector<double>& k) {
  std::string s;
  for (size_t i = 0; i < k.size(); ++i) s += (i ? "," : "") + format_num(k[i]);
  return s;
}

R0Options r0_options(const json& config) {
  R0Options o;
  if (config.contains("r0") && config["r0"].is_object()) {
    const json& r = config["r0"];
    o.mu_min = r.value("mu_min", o.mu_min);
    o.mu_max = r.value("mu_max", o.mu_max);
    o.tol_mu = r.value("tol_mu", o.tol_mu);
  }
  return o;
}

PeriodicOptions periodic_options(const json& config) {
  PeriodicOptions o;
  if (config.contains("periodic") && config["periodic"].is_object()) {
    const json& p = config["periodic"];
    o.tol_fp = p.value("tol_fp", o.tol_fp);
    o.max_periods = p.value("max_periods", o.max_periods);
  }
  return o;
}

std::vector<double> number_list(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a non-empty array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(what + " must contain numbers only");
    out.push_back(v.get<double>());
  }
  return out;
}

// Samples of a space-time field as long-form CSV rows (x,t,component,value).
std::string field_csv(const Eigen::MatrixXd& columns, int n_comp, const ModelSpec& m,
                      bool dirichlet_offset) {
  Csv csv;
  csv.header({"x", "t", "component", "value"});
  const int active = static_cast<int>(columns.rows()) / n_comp;
  const int offset = dirichlet_offset ? 1 : 0;
  for (int r = 0; r < active; ++r)
    for (int i = 0; i < n_comp; ++i)
      for (int k = 0; k < columns.cols(); ++k)
        csv.row({format_num(m.domain.node(r + offset)), format_num(m.tgrid.node(k)),
                 std::to_string(i), format_num(columns(r * n_comp + i, k))});
  return csv.text();
}

void do_validate(const json& config, const RunRequest&, TaskOutput& out) {
  if (config.contains("zika")) {
    ZikaParams p = build_zika(config);
    out.n_x = p.domain.n_x;
    out.n_t = p.tgrid.n_t;
    out.summary.push_back("form: zika");
    out.summary.push_back("zika_parameters: valid");
    out.summary.push_back("validation: pass");
    return;
  }
  ModelSpec m = build_model(config);
  out.n_x = m.domain.n_x;
  out.n_t = m.tgrid.n_t;
  const std::string form = config["reaction"].value("form", "");
  out.summary.push_back("form: " + form);

  bool ok = true;
  if (form == "nonlinear") {
    ReactionSpec spec = build_reaction_spec(config);
    ReactionValidation rv = validate_reaction(m, spec);
    out.summary.push_back("state_monotone_offdiag: " + yesno(rv.offdiag_ok));
    out.summary.push_back("lower_certificate: " + yesno(rv.sub_ok));
    out.summary.push_back("upper_certificate: " + yesno(rv.super_ok));
    for (const std::string& v : rv.violations) out.summary.push_back("violation: " + v);
    ok = rv.all_ok();
  } else {
    AssumptionReport rep = validate_assumptions(m);
    out.summary.push_back("cooperative_offdiag: " + yesno(rep.cooperative_ok));
    if (m.split) {
      out.summary.push_back("gain_nonnegative: " + yesno(rep.F_nonneg_ok));
      out.summary.push_back("decay_flow_contracting: " + yesno(rep.omega_Gamma_negative) +
                            " (max pointwise growth " + format_num(rep.max_omega_Gamma_x) + ")");
      out.summary.push_back("averaged_decay_contracting: " +
                            yesno(rep.omega_Gamma_tilde_negative) + " (growth " +
                            format_num(rep.omega_Gamma_tilde) + ")");
    }
    for (const auto& v : rep.violations)
      out.summary.push_back("violation: " + v.assumption + " at " + v.location);
    ok = rep.all_ok();
  }
  out.summary.push_back(std::string("validation: ") + (ok ? "pass" : "fail"));
  out.exit_code = ok ? 0 : 1;
}

void do_eig(const json& config, const RunRequest&, const std::string& tagless, TaskOutput& out) {
  ModelSpec m = build_model(config);
  out.n_x = m.domain.n_x;
  out.n_t = m.tgrid.n_t;
  PrincipalEigenvalue pe = principal_eigenvalue(m);
  out.summary.push_back("lambda_star: " + format_num(pe.lambda_star));
  out.summary.push_back("bc: " + to_string(pe.bc));
  out.summary.push_back("kappa: " + kappa_list(pe.kappa));
  out.summary.push_back("radius_method: " + to_string(pe.diagnostics.method));
  out.summary.push_back("radius_residual: " + format_num(pe.diagnostics.residual));
  out.files.emplace_back(tagless,
                         field_csv(pe.eigenfunction, m.n(), m, pe.bc == BcKind::Dirichlet));
}

void do_r0(const json& config, const RunRequest&, const std::string& tagless, TaskOutput& out) {
  ModelSpec m = build_model(config);
  out.n_x = m.domain.n_x;
  out.n_t = m.tgrid.n_t;
  if (!m.split)
    throw ConfigError("r0 requires a split reaction (reaction.form == \"split\")");
  R0Options opts = r0_options(config);
  R0Result r = r0_bisect(m, Setting::pde(), opts);
  out.summary.push_back("r0: " + format_num(r.value));
  out.summary.push_back("status: " + to_string(r.status));
  out.summary.push_back("bracket: [" + format_num(r.mu_lo) + ", " + format_num(r.mu_hi) + "]");
  out.summary.push_back("probes: " + std::to_string(r.omega_trace.size()));
  Csv csv;
  csv.header({"mu", "omega"});
  for (const auto& [mu, om] : r.omega_trace) csv.row({format_num(mu), format_num(om)});
  out.files.emplace_back(tagless, csv.text());
}

std::vector<double> sweep_grid(const json& config) {
  if (config.contains("sweep") && config["sweep"].is_object() && config["sweep"].contains("kappa"))
    return number_list(config["sweep"]["kappa"], "sweep.kappa");
  if (config.contains("zika") && config["zika"].contains("sweep_kappa"))
    return number_list(config["zika"]["sweep_kappa"], "zika.sweep_kappa");
  throw ConfigError("sweep requires a sweep.kappa (or zika.sweep_kappa) grid in the config");
}

void append_sweep_summary(const SweepReport& rep, TaskOutput& out) {
  out.summary.push_back("points: " + std::to_string(rep.points.size()));
  out.summary.push_back("limit_small: " + format_num(rep.limit_small));
  out.summary.push_back("limit_large: " +
                        (rep.limit_large_infinite ? std::string("inf")
                                                  : format_num(rep.limit_large)));
  if (rep.eta_values) {
    out.summary.push_back("eta: " + format_num(rep.eta_values->first));
    out.summary.push_back("eta_tilde: " + format_num(rep.eta_values->second));
  }
  out.summary.push_back("monotonicity: " + rep.monotonicity_notes);
}

void do_sweep(const json& config, const RunRequest& req, const std::string& tagless,
              TaskOutput& out) {
  std::string what = req.sweep_what.empty() ? "r0" : req.sweep_what;
  if (config.contains("sweep") && config["sweep"].is_object() && req.sweep_what.empty())
    what = config["sweep"].value("what", what);
  if (what != "r0" && what != "eigenvalue")
    throw ConfigError("sweep --what must be r0 or eigenvalue (got \"" + what + "\")");
  const std::vector<double> grid = sweep_grid(config);
  R0Options opts = r0_options(config);

  SweepReport rep;
  if (config.contains("zika")) {
    if (what != "r0") throw ConfigError("zika sweeps support --what r0 only");
    ZikaParams p = build_zika(config);
    out.n_x = p.domain.n_x;
    out.n_t = p.tgrid.n_t;
    rep = zika_sweep(p, grid, opts, req.jobs);
  } else {
    ModelSpec m = build_model(config);
    out.n_x = m.domain.n_x;
    out.n_t = m.tgrid.n_t;
    if (what == "r0" && !m.split)
      throw ConfigError("r0 sweeps require a split reaction (reaction.form == \"split\")");
    rep = sweep(m, grid, what == "r0" ? SweepWhat::r0 : SweepWhat::eigenvalue, opts, req.jobs);
  }
  out.summary.push_back("what: " + what);
  append_sweep_summary(rep, out);
  out.files.emplace_back(tagless, rep.to_csv());
}

void do_periodic(const json& config, const RunRequest&, const std::string& hash8_tag,
                 TaskOutput& out) {
  ModelSpec m = build_model(config);
  out.n_x = m.domain.n_x;
  out.n_t = m.tgrid.n_t;
  ReactionSpec spec = build_reaction_spec(config);
  PeriodicOptions opts = periodic_options(config);

  Setting setting = Setting::pde();
  std::string setting_name = "pde";
  if (config.contains("periodic") && config["periodic"].is_object()) {
    setting_name = config["periodic"].value("setting", "pde");
    if (setting_name == "pde") {
      setting = Setting::pde();
    } else if (setting_name == "averaged") {
      setting = Setting::averaged();
    } else if (setting_name == "frozen_x") {
      int node = config["periodic"].value("node", 0);
      if (node < 0 || node >= m.domain.n_nodes())
        throw ConfigError("periodic.node out of range");
      setting = Setting::frozen_x(node);
    } else {
      throw ConfigError("periodic.setting must be pde, averaged, or frozen_x");
    }
  }

  PeriodicSolution sol = solve_periodic(m, spec, {}, setting, opts);
  out.summary.push_back("setting: " + setting_name);
  out.summary.push_back("kappa: " + kappa_list(sol.kappa));
  out.summary.push_back("periodicity_residual: " + format_num(sol.residual));
  out.summary.push_back("periods_to_converge: " + std::to_string(sol.periods_to_converge));
  out.summary.push_back("w_hat_norm: " + format_num(sol.w_hat_norm));
  out.summary.push_back("two_sided_gap: " + format_num(sol.two_sided_gap) +
                        " (agree: " + yesno(sol.two_sided_agreement) + ")");

  {
    Csv csv;
    csv.header({"x", "t", "component", "value"});
    const bool avg = setting.kind == Setting::Kind::Averaged;
    for (int node = 0; node < sol.w.n_nodes; ++node)
      for (int i = 0; i < sol.w.rows; ++i)
        for (int k = 0; k < sol.w.n_t; ++k) {
          const int gnode = setting.kind == Setting::Kind::FrozenX ? setting.node : node;
          csv.row({avg ? "" : format_num(m.domain.node(gnode)), format_num(m.tgrid.node(k)),
                   std::to_string(i), format_num(sol.w.at(i, 0, node, k))});
        }
    out.files.emplace_back("periodic_" + hash8_tag, csv.text());
  }

  if (config.contains("periodic") && config["periodic"].contains("kappa_zero")) {
    auto grid = number_list(config["periodic"]["kappa_zero"], "periodic.kappa_zero");
    LimitCheckReport rep = limit_check_zero(m, spec, grid, opts);
    out.summary.push_back("small_diffusion_check: " + rep.notes);
    out.files.emplace_back("periodic_zero_" + hash8_tag, rep.to_csv());
  }
  if (config.contains("periodic") && config["periodic"].contains("kappa_infty")) {
    auto grid = number_list(config["periodic"]["kappa_infty"], "periodic.kappa_infty");
    LimitCheckReport rep = limit_check_infty(m, spec, grid, opts);
    out.summary.push_back("large_diffusion_check: " + rep.notes);
    out.files.emplace_back("periodic_infty_" + hash8_tag, rep.to_csv());
  }
}

void do_zika(const json& config, const RunRequest& req, const std::string& tagless,
             TaskOutput& out) {
  ZikaParams p = build_zika(config);
  out.n_x = p.domain.n_x;
  out.n_t = p.tgrid.n_t;
  R0Options opts = r0_options(config);

  R0Result base = zika_r0(p, opts);
  out.summary.push_back("r0: " + format_num(base.value));
  out.summary.push_back("status: " + to_string(base.status));
  out.summary.push_back("kappa: " + format_num(p.kappa1) + "," + format_num(p.kappa2));

  ZikaLimits lim = zika_limits(p, opts);
  out.summary.push_back("limit_small: " + format_num(lim.small_endpoint) + " (argmax x " +
                        format_num(lim.small_argmax_x) + ")");
  out.summary.push_back("limit_large: " + format_num(lim.large_endpoint));

  if (config["zika"].contains("sweep_kappa")) {
    auto grid = number_list(config["zika"]["sweep_kappa"], "zika.sweep_kappa");
    SweepReport rep = zika_sweep(p, grid, opts, req.jobs);
    append_sweep_summary(rep, out);
    out.files.emplace_back(tagless, rep.to_csv());
  } else {
    Csv csv;
    csv.header({"kappa_1", "kappa_2", "value", "status", "omega_at_value", "wall_ms"});
    csv.row({format_num(p.kappa1), format_num(p.kappa2), format_num(base.value),
             to_string(base.status), "", ""});
    csv.row({"", "", format_num(lim.small_endpoint), "limit_small", "", ""});
    csv.row({"", "", format_num(lim.large_endpoint), "limit_large", "", ""});
    out.files.emplace_back(tagless, csv.text());
  }
}

}  // namespace

int run_request(const RunRequest& req) {
  if (req.jobs < 1) throw ConfigError("--jobs must be >= 1");
  json config = load_config(req.config_path);
  apply_overrides(config, req.overrides);

  const std::string resolved = config.dump();
  char full_hash[17];
  std::snprintf(full_hash, sizeof full_hash, "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(resolved + "|seed=" + std::to_string(req.seed))));
  const std::string h8 = std::string(full_hash).substr(0, 8);

  TaskOutput out;
  if (req.subcommand == "validate") {
    do_validate(config, req, out);
  } else if (req.subcommand == "eig") {
    do_eig(config, req, "eig", out);
  } else if (req.subcommand == "r0") {
    do_r0(config, req, "r0", out);
  } else if (req.subcommand == "sweep") {
    do_sweep(config, req, "sweep", out);
  } else if (req.subcommand == "periodic") {
    do_periodic(config, req, h8, out);
  } else if (req.subcommand == "zika") {
    do_zika(config, req, "zika", out);
  } else {
    throw ConfigError("unknown subcommand \"" + req.subcommand + "\"");
  }

  const std::string tag =
      "_" + h8 + "_nx" + std::to_string(out.n_x) + "_nt" + std::to_string(out.n_t);
  fs::create_directories(req.output_dir);

  std::vector<std::string> lines;
  lines.push_back("task: " + req.subcommand);
  lines.push_back("config: " + req.config_path);
  lines.push_back("config_hash: " + std::string(full_hash));
  std::string ovs;
  for (const std::string& ov : req.overrides) ovs += (ovs.empty() ? "" : " ") + ov;
  lines.push_back("overrides: " + (ovs.empty() ? std::string("none") : ovs));
  lines.push_back("seed: " + std::to_string(req.seed));
  lines.push_back("jobs: " + std::to_string(req.jobs));
  lines.push_back("n_x: " + std::to_string(out.n_x));
  lines.push_back("n_t: " + std::to_string(out.n_t));
  lines.insert(lines.end(), out.summary.begin(), out.summary.end());

  for (auto& [stem, content] : out.files) {
    // Stems produced by the periodic task already carry the hash.
    const bool has_hash = stem.find(h8) != std::string::npos;
    const std::string name =
        (has_hash ? stem + "_nx" + std::to_string(out.n_x) + "_nt" + std::to_string(out.n_t)
                  : stem + tag) +
        ".csv";
    std::ofstream f(fs::path(req.output_dir) / name, std::ios::binary);
    if (!f) throw ComputeError("cannot write output file " + name);
    f << content;
    lines.push_back("output: " + name);
  }

  std::ofstream sf(fs::path(req.output_dir) / "summary.txt", std::ios::binary);
  if (!sf) throw ComputeError("cannot write summary.txt");
  for (const std::string& l : lines) sf << l << "\n";
  return out.exit_code;
}

int cli_main(int argc, const char* const* argv) {
  CLI::App app{
      "Reproduction ratios and principal eigenvalues of time-periodic "
      "cooperative reaction-diffusion systems on an interval"};
  app.require_subcommand(1);

  RunRequest req;
  auto add_common = [&req](CLI::App* sub) {
    sub->add_option("--config", req.config_path, "JSON model config")->required();
    sub->add_option("--out", req.output_dir, "output directory (default: current)");
    sub->add_option("--set", req.overrides, "config override dotted.key=value (repeatable)");
    sub->add_option("--jobs", req.jobs, "worker threads for sweep points (default 1)");
    sub->add_option("--seed", req.seed, "seed recorded in the config hash and summary");
  };
  add_common(app.add_subcommand("validate", "check model assumptions and certificates"));
  add_common(app.add_subcommand("eig", "principal eigenvalue of the full flow"));
  add_common(app.add_subcommand("r0", "basic reproduction ratio (bisection on the gain scale)"));
  CLI::App* sw = app.add_subcommand("sweep", "reproduction ratio or eigenvalue vs diffusion rate");
  add_common(sw);
  sw->add_option("--what", req.sweep_what, "r0 | eigenvalue (default r0)");
  add_common(app.add_subcommand("periodic", "positive periodic solution of a nonlinear model"));
  add_common(app.add_subcommand("zika", "vector-host case study: equilibrium, ratio, limits"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  req.subcommand = app.get_subcommands().front()->get_name();

  try {
    return run_request(req);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ComputeError& e) {
    std::cerr << "compute error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace reprodiff
