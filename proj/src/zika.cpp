#include "reprodiff/zika.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "reprodiff/errors.hpp"

namespace reprodiff {

namespace {

using nlohmann::json;

double num(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ConfigError(what + " must be an integer");
  return j.get<int>();
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(where + " is missing \"" + std::string(key) + "\"");
  return j[key];
}

Expr parse_field(const json& section, const char* key) {
  const json& j = require(section, key, "zika");
  if (j.is_number()) return Expr::parse(std::to_string(j.get<double>()));
  if (j.is_string()) return Expr::parse(j.get<std::string>());
  throw ConfigError(std::string("zika.") + key + " must be an expression string or a number");
}

struct RateStats {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
};

RateStats scan(const Expr& e, const Domain& dom, const TimeGrid& tg) {
  RateStats s;
  for (int node = 0; node < dom.n_nodes(); ++node)
    for (int k = 0; k < tg.n_t; ++k) {
      double v = e.eval(dom.node(node), tg.node(k));
      s.lo = std::min(s.lo, v);
      s.hi = std::max(s.hi, v);
    }
  return s;
}

void require_positive(const Expr& e, const char* name, const ZikaParams& p) {
  if (!(scan(e, p.domain, p.tgrid).lo > 0))
    throw ConfigError(std::string("zika.") + name + " must be strictly positive on the grid");
}

// Logistic growth model for the vector population, with sub/super solution
// constants derived from the sampled rate ranges:
//   lower c_lo = r_lo / (2 m_hi)  keeps G(tau c_lo) >= 0 for tau <= 1,
//   upper c_up = 2 r_hi / m_lo    gives G(tau c_up) <= -c_up r_hi for tau >= 1.
struct LogisticSetup {
  ModelSpec model;
  ReactionSpec reaction;
};

LogisticSetup logistic_setup(const ZikaParams& p, double kappa2) {
  RateStats growth;  // beta - mu1
  for (int node = 0; node < p.domain.n_nodes(); ++node)
    for (int k = 0; k < p.tgrid.n_t; ++k) {
      double x = p.domain.node(node), t = p.tgrid.node(k);
      double v = p.beta.eval(x, t) - p.mu1.eval(x, t);
      growth.lo = std::min(growth.lo, v);
      growth.hi = std::max(growth.hi, v);
    }
  if (!(growth.lo > 0))
    throw ConfigError("zika requires beta - mu1 > 0 on the grid (vector growth), found min " +
                      std::to_string(growth.lo));
  RateStats death = scan(p.mu2, p.domain, p.tgrid);

  LogisticSetup s;
  s.model.domain = p.domain;
  s.model.tgrid = p.tgrid;
  s.model.split = false;
  s.model.M = CoefficientField::zeros(1, 1, p.domain.n_nodes(), p.tgrid.n_t);
  s.model.boundary.kind = BcKind::Neumann;
  s.model.diffusion.kappa = {kappa2};
  CoefficientField a = CoefficientField::zeros(1, 1, p.domain.n_nodes(), p.tgrid.n_t);
  for (int node = 0; node < p.domain.n_nodes(); ++node)
    for (int k = 0; k < p.tgrid.n_t; ++k)
      a.at(0, 0, node, k) = p.delta2.eval(p.domain.node(node), p.tgrid.node(k));
  s.model.diffusion.a_lo = scan(p.delta2, p.domain, p.tgrid).lo;
  s.model.diffusion.a_hi = scan(p.delta2, p.domain, p.tgrid).hi;
  s.model.diffusion.a = std::move(a);

  const double c_lo = 0.5 * growth.lo / death.hi;
  const double c_up = 2.0 * growth.hi / death.lo;
  s.reaction.G.push_back(Expr::parse("((" + p.beta.text() + ") - (" + p.mu1.text() +
                                     "))*q1 - (" + p.mu2.text() + ")*q1*q1"));
  s.reaction.v_lower.push_back(Expr::parse(std::to_string(c_lo)));
  s.reaction.v_upper.push_back(c_up);
  s.reaction.h = 0.5 * c_up * growth.hi;
  return s;
}

}  // namespace

ZikaParams build_zika(const json& config) {
  if (!config.is_object()) throw ConfigError("config root must be a JSON object");
  ZikaParams p;

  const json& dom = require(config, "domain", "config");
  p.domain.x_lo = num(require(dom, "x_lo", "domain"), "domain.x_lo");
  p.domain.x_hi = num(require(dom, "x_hi", "domain"), "domain.x_hi");
  p.domain.n_x = integer(require(dom, "n_x", "domain"), "domain.n_x");
  if (!(p.domain.x_hi > p.domain.x_lo)) throw ConfigError("domain requires x_hi > x_lo");
  if (p.domain.n_x < 1) throw ConfigError("domain.n_x must be >= 1");

  const json& tim = require(config, "time", "config");
  p.tgrid.period = num(require(tim, "period", "time"), "time.period");
  p.tgrid.n_t = integer(require(tim, "n_t", "time"), "time.n_t");
  if (!(p.tgrid.period > 0)) throw ConfigError("time.period must be > 0");
  if (p.tgrid.n_t < 1) throw ConfigError("time.n_t must be >= 1");

  const json& z = require(config, "zika", "config");
  p.H_u = parse_field(z, "H_u");
  p.beta = parse_field(z, "beta");
  p.gamma = parse_field(z, "gamma");
  p.mu1 = parse_field(z, "mu1");
  p.mu2 = parse_field(z, "mu2");
  p.sigma1 = parse_field(z, "sigma1");
  p.sigma2 = parse_field(z, "sigma2");
  p.delta1 = parse_field(z, "delta1");
  p.delta2 = parse_field(z, "delta2");
  p.kappa1 = num(require(z, "kappa1", "zika"), "zika.kappa1");
  p.kappa2 = num(require(z, "kappa2", "zika"), "zika.kappa2");
  if (!(p.kappa1 > 0) || !(p.kappa2 > 0))
    throw ConfigError("zika.kappa1 and zika.kappa2 must be > 0");

  require_positive(p.H_u, "H_u", p);
  require_positive(p.gamma, "gamma", p);
  require_positive(p.mu1, "mu1", p);
  require_positive(p.mu2, "mu2", p);
  require_positive(p.delta1, "delta1", p);
  require_positive(p.delta2, "delta2", p);
  // The infection coefficients may vanish (zero kills the transmission cycle
  // and the ratio degenerates to the zero case), but never go negative.
  if (scan(p.sigma1, p.domain, p.tgrid).lo < 0)
    throw ConfigError("zika.sigma1 must be nonnegative on the grid");
  if (scan(p.sigma2, p.domain, p.tgrid).lo < 0)
    throw ConfigError("zika.sigma2 must be nonnegative on the grid");
  if (!(scan(p.beta, p.domain, p.tgrid).lo > 0))
    throw ConfigError("zika.beta must be strictly positive on the grid");

  // The growth condition beta - mu1 > 0 is checked here so bad configs fail
  // fast rather than inside the equilibrium solve.
  logistic_setup(p, p.kappa2);
  return p;
}

PeriodicSolution solve_vector_equilibrium(const ZikaParams& params, double kappa2,
                                          Setting setting, const PeriodicOptions& opts) {
  LogisticSetup s = logistic_setup(params, kappa2);
  return solve_periodic(s.model, s.reaction, {kappa2}, setting, opts);
}

ModelSpec zika_linearized_model(const ZikaParams& p, const CoefficientField& vstar) {
  if (vstar.rows != 1 || vstar.n_nodes != p.domain.n_nodes())
    throw ComputeError("vector equilibrium field does not match the grid");
  const int n_nodes = p.domain.n_nodes();
  const int n_t = p.tgrid.n_t;

  ModelSpec m;
  m.domain = p.domain;
  m.tgrid = p.tgrid;
  m.split = true;
  m.boundary.kind = BcKind::Neumann;
  m.diffusion.kappa = {p.kappa1, p.kappa2};
  m.V = CoefficientField::zeros(2, 2, n_nodes, n_t);
  m.F = CoefficientField::zeros(2, 2, n_nodes, n_t);
  CoefficientField a = CoefficientField::zeros(2, 1, n_nodes, n_t);
  double a_lo = std::numeric_limits<double>::infinity(), a_hi = 0;

  for (int node = 0; node < n_nodes; ++node) {
    const double x = p.domain.node(node);
    for (int k = 0; k < n_t; ++k) {
      const double t = p.tgrid.node(k);
      const double vs = vstar.at(0, 0, node, k);
      m.V.at(0, 0, node, k) = p.gamma.eval(x, t);
      m.V.at(1, 1, node, k) = p.mu1.eval(x, t) + p.mu2.eval(x, t) * vs;
      m.F.at(0, 1, node, k) = p.sigma1.eval(x, t) * p.H_u.eval(x, t);
      m.F.at(1, 0, node, k) = p.sigma2.eval(x, t) * vs;
      a.at(0, 0, node, k) = p.delta1.eval(x, t);
      a.at(1, 0, node, k) = p.delta2.eval(x, t);
      a_lo = std::min({a_lo, a.at(0, 0, node, k), a.at(1, 0, node, k)});
      a_hi = std::max({a_hi, a.at(0, 0, node, k), a.at(1, 0, node, k)});
    }
  }
  m.diffusion.a = std::move(a);
  m.diffusion.a_lo = a_lo;
  m.diffusion.a_hi = a_hi;
  return m;
}

R0Result zika_r0(const ZikaParams& params, const R0Options& opts) {
  PeriodicSolution vstar = solve_vector_equilibrium(params, params.kappa2);
  ModelSpec m = zika_linearized_model(params, vstar.w);
  return r0_bisect(m, Setting::pde(), opts);
}

ZikaLimits zika_limits(const ZikaParams& params, const R0Options& opts) {
  ZikaLimits out;
  const Domain& dom = params.domain;
  const TimeGrid& tg = params.tgrid;
  const int n_nodes = dom.n_nodes();
  const int n_t = tg.n_t;

  // Small-diffusion endpoint: pointwise-frozen vector equilibria assembled
  // into a field, then the max over x of the frozen-x ratio.
  CoefficientField v0 = CoefficientField::zeros(1, 1, n_nodes, n_t);
  for (int node = 0; node < n_nodes; ++node) {
    PeriodicSolution s =
        solve_vector_equilibrium(params, params.kappa2, Setting::frozen_x(node));
    for (int k = 0; k < n_t; ++k) v0.at(0, 0, node, k) = s.w.at(0, 0, 0, k);
  }
  ModelSpec small_model = zika_linearized_model(params, v0);
  PointwiseR0 pw = r0_pointwise_max(small_model, opts);
  out.small_endpoint = pw.max_value;
  out.small_argmax_x = pw.argmax_x;

  // Large-diffusion endpoint: averaged-equation equilibrium and averaged
  // coefficient products (the products are averaged, not the factors).
  PeriodicSolution vtilde = solve_vector_equilibrium(params, params.kappa2, Setting::averaged());

  CoefficientField raw = CoefficientField::zeros(4, 1, n_nodes, n_t);
  for (int node = 0; node < n_nodes; ++node) {
    const double x = dom.node(node);
    for (int k = 0; k < n_t; ++k) {
      const double t = tg.node(k);
      raw.at(0, 0, node, k) = params.gamma.eval(x, t);
      raw.at(1, 0, node, k) = params.mu1.eval(x, t);
      raw.at(2, 0, node, k) = params.mu2.eval(x, t);
      raw.at(3, 0, node, k) = params.sigma1.eval(x, t) * params.H_u.eval(x, t);
    }
  }
  CoefficientField avg = spatial_average(raw, dom);
  CoefficientField s2avg =
      spatial_average([&] {
        CoefficientField f = CoefficientField::zeros(1, 1, n_nodes, n_t);
        for (int node = 0; node < n_nodes; ++node)
          for (int k = 0; k < n_t; ++k)
            f.at(0, 0, node, k) = params.sigma2.eval(dom.node(node), tg.node(k));
        return f;
      }(), dom);

  ModelSpec big;
  big.domain = {0.0, 1.0, 1};  // placeholder interval; the averaged setting is x-free
  big.tgrid = tg;
  big.split = true;
  big.boundary.kind = BcKind::Neumann;
  big.diffusion.kappa = {0.0, 0.0};
  const int bn = big.domain.n_nodes();
  big.V = CoefficientField::zeros(2, 2, bn, n_t);
  big.F = CoefficientField::zeros(2, 2, bn, n_t);
  big.diffusion.a = CoefficientField::zeros(2, 1, bn, n_t);
  for (double& v : big.diffusion.a.samples) v = 1.0;
  big.diffusion.a_lo = big.diffusion.a_hi = 1.0;
  for (int node = 0; node < bn; ++node)
    for (int k = 0; k < n_t; ++k) {
      const double vt = vtilde.w.at(0, 0, 0, k);
      big.V.at(0, 0, node, k) = avg.at(0, 0, 0, k);
      big.V.at(1, 1, node, k) = avg.at(1, 0, 0, k) + avg.at(2, 0, 0, k) * vt;
      big.F.at(0, 1, node, k) = avg.at(3, 0, 0, k);
      big.F.at(1, 0, node, k) = s2avg.at(0, 0, 0, k) * vt;
    }
  R0Result big_r = r0_bisect(big, Setting::averaged(), opts);
  out.large_endpoint = big_r.value;
  return out;
}

SweepReport zika_sweep(const ZikaParams& params, const std::vector<double>& kappa_grid,
                       const R0Options& opts, int jobs) {
  if (kappa_grid.empty()) throw ConfigError("zika sweep: kappa grid must be non-empty");
  for (size_t i = 0; i < kappa_grid.size(); ++i) {
    if (!(kappa_grid[i] > 0)) throw ConfigError("zika sweep: kappa values must be > 0");
    if (i > 0 && kappa_grid[i] <= kappa_grid[i - 1])
      throw ConfigError("zika sweep: kappa grid must be strictly ascending");
  }

  SweepReport rep;
  rep.what = SweepWhat::r0;
  rep.n_components = 2;
  rep.points.resize(kappa_grid.size());

  std::atomic<size_t> next{0};
  std::vector<std::string> errors(kappa_grid.size());
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= kappa_grid.size()) return;
      try {
        ZikaParams local = params;
        local.kappa1 = local.kappa2 = kappa_grid[i];
        const auto t0 = std::chrono::steady_clock::now();
        PeriodicSolution vstar = solve_vector_equilibrium(local, local.kappa2);
        ModelSpec m = zika_linearized_model(local, vstar.w);
        R0Result r = r0_bisect(m, Setting::pde(), opts);
        SweepPoint& pt = rep.points[i];
        pt.kappa = kappa_grid[i];
        pt.value = r.value;
        pt.status = to_string(r.status);
        pt.omega_at_value = r.value > 0 ? omega_psi(m, r.value, Setting::pde(), opts.ctrl) : 0;
        pt.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(kappa_grid.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const std::string& e : errors)
    if (!e.empty()) throw ComputeError("zika sweep point failed: " + e);

  ZikaLimits lim = zika_limits(params, opts);
  rep.limit_small = lim.small_endpoint;
  rep.limit_large = lim.large_endpoint;

  int up = 0, down = 0;
  for (size_t i = 0; i + 1 < rep.points.size(); ++i) {
    if (rep.points[i + 1].value > rep.points[i].value * (1 + 1e-9)) ++up;
    if (rep.points[i + 1].value < rep.points[i].value * (1 - 1e-9)) ++down;
  }
  rep.monotonicity_notes = up == 0   ? "values do not increase along the grid"
                           : down == 0 ? "values do not decrease along the grid"
                                       : std::to_string(up) + " up / " + std::to_string(down) +
                                             " down steps along the grid";
  return rep;
}

}  // namespace reprodiff
