#include "reprodiff/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reprodiff/csvio.hpp"
#include "reprodiff/discretize.hpp"
#include "reprodiff/errors.hpp"

namespace reprodiff {

namespace {

using nlohmann::json;

constexpr int kMaxNonlinearComp = 9;  // expression grammar exposes q1..q9

Expr parse_entry(const json& j, const std::string& what) {
  if (j.is_number()) return Expr::parse(std::to_string(j.get<double>()));
  if (j.is_string()) return Expr::parse(j.get<std::string>());
  throw ConfigError(what + " must be an expression string or a number");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Evaluates the reaction vector at one spatial location (or its spatial
// average) for a fixed state q.
struct ReactionEval {
  const ModelSpec* model = nullptr;
  const ReactionSpec* reaction = nullptr;
  Setting setting = Setting::pde();

  // g[i] = G_i at active index r (PDE), the frozen node (FrozenX), or the
  // trapezoid average over the domain (Averaged).
  void eval(int active, double t, const double* q, double* g) const {
    const int n = static_cast<int>(reaction->G.size());
    if (setting.kind == Setting::Kind::Averaged) {
      const Domain& dom = model->domain;
      const double h = dom.h(), len = dom.length();
      for (int i = 0; i < n; ++i) {
        double acc = 0;
        for (int node = 0; node < dom.n_nodes(); ++node) {
          double w = (node == 0 || node == dom.n_nodes() - 1) ? 0.5 * h : h;
          acc += w * reaction->G[i].eval(dom.node(node), t, q, n);
        }
        g[i] = acc / len;
      }
      return;
    }
    const int node = (setting.kind == Setting::Kind::FrozenX) ? setting.node : active;
    const double x = model->domain.node(node);
    for (int i = 0; i < n; ++i) g[i] = reaction->G[i].eval(x, t, q, n);
  }
};

struct RunResult {
  CoefficientField w;  // n x 1 x rec_nodes x (n_t + 1)
  double residual = 0;
  int periods = 0;
};

// Whole-period positivity-preserving march: diffusion and the sink part of
// the reaction are implicit (the sink as a diagonal rate g^- / w), the source
// part explicit. Iterated until the period map reaches a fixed point.
RunResult march_to_fixed_point(const ModelSpec& m, const ReactionSpec& reaction, Setting setting,
                               const std::vector<double>& start, const PeriodicOptions& opts) {
  const int n = static_cast<int>(reaction.G.size());
  const int n_t = m.tgrid.n_t;
  const double dt = m.tgrid.dt();
  const bool diffuse = setting.kind == Setting::Kind::PDE;

  std::vector<BandedOperator> ops;
  int n_active = 1;
  if (diffuse) {
    ops.reserve(n_t);
    for (int k = 0; k < n_t; ++k) ops.push_back(assemble_diffusion(m, k));
    n_active = ops[0].n_active;
  }

  ReactionEval re{&m, &reaction, setting};

  // Comp-major state: state[i][r].
  std::vector<std::vector<double>> state(n, std::vector<double>(n_active));
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < n_active; ++r) state[i][r] = start[i];

  RunResult out;
  out.w = CoefficientField::zeros(n, 1, n_active, n_t + 1);

  std::vector<double> qbuf(n), g(n);
  std::vector<std::vector<double>> gplus(n, std::vector<double>(n_active));
  std::vector<std::vector<double>> sink(n, std::vector<double>(n_active));
  std::vector<double> dg(n_active), lo(n_active), up(n_active), rhs(n_active);

  // Bracket for the runaway check, entrywise with relative slack.
  std::vector<double> bound_lo(n), bound_hi(n);
  for (int i = 0; i < n; ++i) {
    bound_lo[i] = opts.tau_lower * reaction.v_lower[i].eval(0.0, 0.0) * (1 - opts.bracket_slack) -
                  opts.bracket_slack;
    bound_hi[i] =
        opts.tau_upper * reaction.v_upper[i] * (1 + opts.bracket_slack) + opts.bracket_slack;
  }

  for (int period = 1; period <= opts.max_periods; ++period) {
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < n_active; ++r) out.w.at(i, 0, r, 0) = state[i][r];

    for (int k = 0; k < n_t; ++k) {
      const double t_next = m.tgrid.node(k + 1);
      const int sample = (k + 1) % n_t;

      for (int r = 0; r < n_active; ++r) {
        for (int i = 0; i < n; ++i) qbuf[i] = state[i][r];
        re.eval(r, t_next, qbuf.data(), g.data());
        for (int i = 0; i < n; ++i) {
          const double gi = g[i];
          gplus[i][r] = gi > 0 ? gi : 0;
          const double wi = std::max(state[i][r], 1e-300);
          sink[i][r] = gi < 0 ? -gi / wi : 0;
        }
      }

      for (int i = 0; i < n; ++i) {
        std::vector<double>& wi = state[i];
        if (diffuse) {
          const BandedOperator::Bands& b = ops[sample].comp[i];
          for (int r = 0; r < n_active; ++r) {
            dg[r] = 1.0 - dt * b.diag[r] + dt * sink[i][r];
            lo[r] = -dt * b.lower[r];
            up[r] = -dt * b.upper[r];
            rhs[r] = wi[r] + dt * gplus[i][r];
          }
          // Thomas elimination; the matrix is strictly diagonally dominant.
          for (int r = 1; r < n_active; ++r) {
            const double f = lo[r] / dg[r - 1];
            dg[r] -= f * up[r - 1];
            rhs[r] -= f * rhs[r - 1];
          }
          wi[n_active - 1] = rhs[n_active - 1] / dg[n_active - 1];
          for (int r = n_active - 2; r >= 0; --r) wi[r] = (rhs[r] - up[r] * wi[r + 1]) / dg[r];
        } else {
          for (int r = 0; r < n_active; ++r)
            wi[r] = (wi[r] + dt * gplus[i][r]) / (1.0 + dt * sink[i][r]);
        }
      }

      for (int i = 0; i < n; ++i)
        for (int r = 0; r < n_active; ++r) out.w.at(i, 0, r, k + 1) = state[i][r];
    }

    double defect = 0;
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < n_active; ++r) {
        defect = std::max(defect, std::abs(state[i][r] - out.w.at(i, 0, r, 0)));
        if (!(state[i][r] >= bound_lo[i] && state[i][r] <= bound_hi[i]))
          throw ComputeError(
              "periodic march left the certified bracket (component " + std::to_string(i) +
              " reached " + fmt(state[i][r]) +
              "); the sub/super solution certificate looks misconfigured");
      }
    if (defect < opts.tol_fp) {
      out.residual = defect;
      out.periods = period;
      return out;
    }
  }
  throw ComputeError("periodic march did not reach a fixed point within " +
                     std::to_string(opts.max_periods) + " periods");
}

double sup_gap(const CoefficientField& a, const CoefficientField& b) {
  double g = 0;
  for (size_t s = 0; s < a.samples.size(); ++s)
    g = std::max(g, std::abs(a.samples[s] - b.samples[s]));
  return g;
}

void check_grid(const std::vector<double>& grid, bool descending, const char* what) {
  if (grid.empty()) throw ConfigError(std::string(what) + ": kappa grid must be non-empty");
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0)) throw ConfigError(std::string(what) + ": kappa values must be > 0");
    if (i > 0 && (descending ? grid[i] >= grid[i - 1] : grid[i] <= grid[i - 1]))
      throw ConfigError(std::string(what) + ": kappa grid must be strictly " +
                        (descending ? "descending" : "ascending"));
  }
}

void trend_notes(LimitCheckReport& rep, const char* gap_name,
                 double LimitCheckRow::*field) {
  int bad = 0;
  for (size_t i = 0; i + 1 < rep.rows.size(); ++i)
    if (rep.rows[i + 1].*field > rep.rows[i].*field * 1.1 + 1e-15) ++bad;
  if (bad > 0) {
    rep.monotone_trend = false;
    rep.notes += std::string(gap_name) + ": " + std::to_string(bad) +
                 " step(s) grew beyond the 10% noise band. ";
  } else {
    rep.notes += std::string(gap_name) + " shrinks along the grid. ";
  }
}

}  // namespace

ReactionSpec build_reaction_spec(const json& config) {
  if (!config.is_object()) throw ConfigError("config root must be a JSON object");
  if (!config.contains("reaction")) throw ConfigError("config is missing \"reaction\"");
  const json& rea = config["reaction"];
  const std::string form = rea.value("form", "");
  if (form != "nonlinear")
    throw ConfigError("reaction.form must be \"nonlinear\" for periodic-solution tasks");
  if (!rea.contains("G") || !rea["G"].is_array() || rea["G"].empty())
    throw ConfigError("reaction.G must be a non-empty array of expressions");

  ReactionSpec spec;
  const size_t n = rea["G"].size();
  if (n > kMaxNonlinearComp)
    throw ConfigError("nonlinear reactions support at most 9 components (state slots q1..q9)");
  for (size_t i = 0; i < n; ++i)
    spec.G.push_back(parse_entry(rea["G"][i], "reaction.G[" + std::to_string(i) + "]"));

  if (!rea.contains("v_lower") || !rea["v_lower"].is_array() || rea["v_lower"].size() != n)
    throw ConfigError("reaction.v_lower must list one expression per component");
  for (size_t i = 0; i < n; ++i)
    spec.v_lower.push_back(parse_entry(rea["v_lower"][i], "reaction.v_lower[" + std::to_string(i) + "]"));

  if (!rea.contains("v_upper") || !rea["v_upper"].is_array() || rea["v_upper"].size() != n)
    throw ConfigError("reaction.v_upper must list one positive number per component");
  for (size_t i = 0; i < n; ++i) {
    if (!rea["v_upper"][i].is_number())
      throw ConfigError("reaction.v_upper entries must be numbers");
    double v = rea["v_upper"][i].get<double>();
    if (!(v > 0)) throw ConfigError("reaction.v_upper entries must be > 0");
    spec.v_upper.push_back(v);
  }

  spec.h = rea.value("h", 0.0);
  if (spec.h < 0) throw ConfigError("reaction.h must be >= 0");
  return spec;
}

ReactionValidation validate_reaction(const ModelSpec& model, const ReactionSpec& reaction) {
  const int n = static_cast<int>(reaction.G.size());
  if (n == 0 || reaction.v_lower.size() != static_cast<size_t>(n) ||
      reaction.v_upper.size() != static_cast<size_t>(n))
    throw ConfigError("reaction spec must define G, v_lower, v_upper of equal size");

  ReactionValidation out;
  const Domain& dom = model.domain;
  const TimeGrid& tg = model.tgrid;
  const int node_stride = std::max(1, dom.n_nodes() / 16);
  const int time_stride = std::max(1, tg.n_t / 16);

  std::vector<double> vl(n), q(n), gp(n), gm(n);
  auto eval_lower = [&](double t, double* v) {
    for (int i = 0; i < n; ++i) v[i] = reaction.v_lower[i].eval(0.0, t);
  };

  // Positivity of the lower certificate itself (structural).
  for (int k = 0; k < tg.n_t; k += time_stride) {
    eval_lower(tg.node(k), vl.data());
    for (int i = 0; i < n; ++i)
      if (!(vl[i] > 0))
        throw ConfigError("reaction.v_lower must be strictly positive (component " +
                          std::to_string(i) + " at t=" + fmt(tg.node(k)) + ")");
  }

  int reported = 0;
  auto report = [&](bool& flag, const std::string& msg) {
    flag = false;
    if (reported < 8) out.violations.push_back(msg);
    ++reported;
  };

  // Off-diagonal monotonicity of G in the state, probed by central
  // differences at bracket corners and midpoints.
  for (int node = 0; node < dom.n_nodes(); node += node_stride) {
    const double x = dom.node(node);
    for (int k = 0; k < tg.n_t; k += time_stride) {
      const double t = tg.node(k);
      eval_lower(t, vl.data());
      for (int which = 0; which < 3; ++which) {
        for (int i = 0; i < n; ++i)
          q[i] = which == 0 ? vl[i]
               : which == 1 ? reaction.v_upper[i]
                            : 0.5 * (vl[i] + reaction.v_upper[i]);
        for (int j = 0; j < n; ++j) {
          const double hq = 1e-6 * std::max(1.0, std::abs(q[j]));
          const double qj = q[j];
          q[j] = qj + hq;
          for (int i = 0; i < n; ++i) gp[i] = reaction.G[i].eval(x, t, q.data(), n);
          q[j] = qj - hq;
          for (int i = 0; i < n; ++i) gm[i] = reaction.G[i].eval(x, t, q.data(), n);
          q[j] = qj;
          for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            const double d = (gp[i] - gm[i]) / (2 * hq);
            if (d < -1e-7 * std::max(1.0, std::abs(gp[i])))
              report(out.offdiag_ok, "dG_" + std::to_string(i) + "/dq_" + std::to_string(j) +
                                         " = " + fmt(d) + " < 0 at x=" + fmt(x) + ", t=" + fmt(t));
          }
        }
      }
    }
  }
  // Lower certificate: tau * v_lower'(t) <= G(x, t, tau * v_lower(t)).
  const double dt_fd = 1e-6 * tg.period;
  std::vector<double> vplus(n), vminus(n);
  for (int node = 0; node < dom.n_nodes(); node += node_stride) {
    const double x = dom.node(node);
    for (int k = 0; k < tg.n_t; k += time_stride) {
      const double t = tg.node(k);
      eval_lower(t, vl.data());
      eval_lower(t + dt_fd, vplus.data());
      eval_lower(t - dt_fd, vminus.data());
      for (int s = 1; s <= 10; ++s) {
        const double tau = 0.1 * s;
        for (int i = 0; i < n; ++i) q[i] = tau * vl[i];
        for (int i = 0; i < n; ++i) {
          const double lhs = tau * (vplus[i] - vminus[i]) / (2 * dt_fd);
          const double rhs = reaction.G[i].eval(x, t, q.data(), n);
          if (lhs > rhs + 1e-6 * std::max(1.0, std::abs(rhs)))
            report(out.sub_ok, "lower certificate fails for component " + std::to_string(i) +
                                   " at x=" + fmt(x) + ", t=" + fmt(t) + ", tau=" + fmt(tau) +
                                   " (" + fmt(lhs) + " > " + fmt(rhs) + ")");
        }
      }
    }
  }

  // Upper certificate: G_i(x, t, tau * v_upper) <= -h for tau >= 1.
  static const double kTaus[] = {1.0, 1.25, 1.5, 2.0, 4.0};
  for (int node = 0; node < dom.n_nodes(); node += node_stride) {
    const double x = dom.node(node);
    for (int k = 0; k < tg.n_t; k += time_stride) {
      const double t = tg.node(k);
      for (double tau : kTaus) {
        for (int i = 0; i < n; ++i) q[i] = tau * reaction.v_upper[i];
        for (int i = 0; i < n; ++i) {
          const double g = reaction.G[i].eval(x, t, q.data(), n);
          if (g > -reaction.h + 1e-9 * std::max(1.0, reaction.h))
            report(out.super_ok, "upper certificate fails for component " + std::to_string(i) +
                                     " at x=" + fmt(x) + ", t=" + fmt(t) + ", tau=" + fmt(tau) +
                                     " (G=" + fmt(g) + " > -h=" + fmt(-reaction.h) + ")");
        }
      }
    }
  }

  return out;
}

PeriodicSolution solve_periodic(const ModelSpec& model, const ReactionSpec& reaction,
                                const std::vector<double>& kappa, Setting setting,
                                const PeriodicOptions& opts) {
  const int n = static_cast<int>(reaction.G.size());
  if (setting.kind == Setting::Kind::PDE && model.boundary.kind != BcKind::Neumann)
    throw ConfigError("periodic PDE solves require no-flux (neumann) boundaries");
  if (model.n() != n)
    throw ConfigError("reaction spec component count does not match the model");

  ReactionValidation rv = validate_reaction(model, reaction);
  if (!rv.all_ok())
    throw ConfigError("reaction certificate validation failed: " +
                      (rv.violations.empty() ? std::string("(no detail)") : rv.violations[0]));

  ModelSpec m = model;
  if (!kappa.empty()) {
    if (kappa.size() != static_cast<size_t>(n))
      throw ConfigError("kappa override must list one rate per component");
    for (double v : kappa)
      if (v < 0) throw ConfigError("kappa override entries must be >= 0");
    m.diffusion.kappa = kappa;
  }

  std::vector<double> start_hi(n), start_lo(n);
  for (int i = 0; i < n; ++i) {
    start_hi[i] = opts.tau_upper * reaction.v_upper[i];
    start_lo[i] = opts.tau_lower * reaction.v_lower[i].eval(0.0, 0.0);
  }

  RunResult upper = march_to_fixed_point(m, reaction, setting, start_hi, opts);
  RunResult lower = march_to_fixed_point(m, reaction, setting, start_lo, opts);

  PeriodicSolution sol;
  sol.w = std::move(upper.w);
  sol.residual = upper.residual;
  sol.periods_to_converge = upper.periods;
  sol.kappa = m.diffusion.kappa;
  sol.two_sided_gap = sup_gap(sol.w, lower.w);
  sol.two_sided_agreement = sol.two_sided_gap <= 10 * opts.tol_fp;

  if (setting.kind == Setting::Kind::PDE) {
    sol.w_tilde = spatial_average(sol.w, m.domain);
    double hat = 0;
    for (int i = 0; i < n; ++i)
      for (int node = 0; node < sol.w.n_nodes; ++node)
        for (int k = 0; k <= m.tgrid.n_t; ++k)
          hat = std::max(hat, std::abs(sol.w.at(i, 0, node, k) - sol.w_tilde.at(i, 0, 0, k)));
    sol.w_hat_norm = hat;
  } else {
    sol.w_tilde = sol.w;
    sol.w_hat_norm = 0;
  }
  return sol;
}

std::string LimitCheckReport::to_csv() const {
  Csv csv;
  std::vector<std::string> names;
  for (int i = 1; i <= n_components; ++i) names.push_back("kappa_" + std::to_string(i));
  names.insert(names.end(),
               {"gap_avg", "gap_hat", "periodicity_residual", "periods_to_converge"});
  csv.header(names);
  for (const LimitCheckRow& r : rows) {
    std::vector<std::string> cells;
    for (int i = 0; i < n_components; ++i) cells.push_back(format_num(r.kappa));
    cells.push_back(format_num(r.gap_avg));
    cells.push_back(format_num(r.gap_hat));
    cells.push_back(format_num(r.periodicity_residual));
    cells.push_back(std::to_string(r.periods_to_converge));
    csv.row(cells);
  }
  return csv.text();
}

LimitCheckReport limit_check_zero(const ModelSpec& model, const ReactionSpec& reaction,
                                  const std::vector<double>& kappa_desc,
                                  const PeriodicOptions& opts) {
  check_grid(kappa_desc, /*descending=*/true, "limit_check_zero");
  const int n = static_cast<int>(reaction.G.size());
  const int n_nodes = model.domain.n_nodes();
  const int n_t = model.tgrid.n_t;

  // Zero-diffusion limit object: the pointwise-frozen periodic solutions.
  CoefficientField w0 = CoefficientField::zeros(n, 1, n_nodes, n_t + 1);
  for (int node = 0; node < n_nodes; ++node) {
    PeriodicSolution s = solve_periodic(model, reaction, {}, Setting::frozen_x(node), opts);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k <= n_t; ++k) w0.at(i, 0, node, k) = s.w.at(i, 0, 0, k);
  }

  LimitCheckReport rep;
  rep.n_components = n;
  for (double kap : kappa_desc) {
    PeriodicSolution s =
        solve_periodic(model, reaction, std::vector<double>(n, kap), Setting::pde(), opts);
    LimitCheckRow row;
    row.kappa = kap;
    row.gap_avg = sup_gap(s.w, w0);
    row.gap_hat = s.w_hat_norm;
    row.periodicity_residual = s.residual;
    row.periods_to_converge = s.periods_to_converge;
    rep.rows.push_back(row);
  }
  trend_notes(rep, "gap to the pointwise-frozen limit", &LimitCheckRow::gap_avg);
  return rep;
}

LimitCheckReport limit_check_infty(const ModelSpec& model, const ReactionSpec& reaction,
                                   const std::vector<double>& kappa_asc,
                                   const PeriodicOptions& opts) {
  check_grid(kappa_asc, /*descending=*/false, "limit_check_infty");
  const int n = static_cast<int>(reaction.G.size());

  PeriodicSolution avg = solve_periodic(model, reaction, {}, Setting::averaged(), opts);

  LimitCheckReport rep;
  rep.n_components = n;
  for (double kap : kappa_asc) {
    PeriodicSolution s =
        solve_periodic(model, reaction, std::vector<double>(n, kap), Setting::pde(), opts);
    LimitCheckRow row;
    row.kappa = kap;
    row.gap_avg = sup_gap(s.w_tilde, avg.w);
    row.gap_hat = s.w_hat_norm;
    row.periodicity_residual = s.residual;
    row.periods_to_converge = s.periods_to_converge;
    rep.rows.push_back(row);
  }
  trend_notes(rep, "gap of the spatial average to the averaged limit", &LimitCheckRow::gap_avg);
  trend_notes(rep, "spatial deviation norm", &LimitCheckRow::gap_hat);
  return rep;
}

}  // namespace reprodiff
