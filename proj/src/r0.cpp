#include "reprodiff/r0.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "reprodiff/csvio.hpp"
#include "reprodiff/spectral.hpp"

namespace reprodiff {

std::string to_string(R0Result::Status s) {
  switch (s) {
    case R0Result::Status::positive: return "positive";
    case R0Result::Status::zero_case: return "zero_case";
    case R0Result::Status::bracket_failure: return "bracket_failure";
  }
  return "?";
}

double omega_psi(const ModelSpec& model, double mu, Setting setting, const StepControl& ctrl) {
  if (!(mu > 0)) throw ComputeError("omega_psi requires mu > 0");
  StepControl c = ctrl;
  c.mu = mu;
  const MonodromyMap map = monodromy(model, setting, GeneratorMode::SplitWithMu, c);
  return growth_bound(map, model.tgrid.period);
}

R0Result r0_bisect(const ModelSpec& model, Setting setting, const R0Options& opts) {
  if (!model.split) throw ComputeError("reproduction ratio requires a split (decay/gain) reaction");
  if (!(opts.mu_min > 0 && opts.mu_min < opts.mu_max))
    throw ComputeError("r0_bisect requires 0 < mu_min < mu_max");

  R0Result res;
  res.setting = setting;
  res.bc = model.boundary.kind;
  auto probe = [&](double mu) {
    const double w = omega_psi(model, mu, setting, opts.ctrl);
    res.omega_trace.emplace_back(mu, w);
    return w;
  };

  double mu = std::clamp(1.0, opts.mu_min, opts.mu_max);
  double w = probe(mu);
  double lo = 0, hi = 0;
  if (w == 0.0) {
    res.value = mu;
    res.mu_lo = res.mu_hi = mu;
    res.status = R0Result::Status::positive;
    return res;
  }
  if (w > 0) {  // omega positive means mu < R0: expand upward
    lo = mu;
    for (;;) {
      const double next = lo * 10.0;
      if (next > opts.mu_max) {
        res.status = R0Result::Status::bracket_failure;
        res.value = opts.mu_max;
        res.mu_lo = lo;
        res.mu_hi = opts.mu_max;
        return res;
      }
      const double wn = probe(next);
      if (wn <= 0) {
        hi = next;
        break;
      }
      lo = next;
    }
  } else {  // omega negative means mu > R0: expand downward
    hi = mu;
    for (;;) {
      const double next = hi / 10.0;
      if (next < opts.mu_min) {
        res.status = R0Result::Status::zero_case;
        res.value = 0;
        res.mu_lo = opts.mu_min;
        res.mu_hi = hi;
        return res;
      }
      const double wn = probe(next);
      if (wn >= 0) {
        lo = next;
        break;
      }
      hi = next;
    }
  }

  while (std::log(hi / lo) > opts.tol_mu) {
    const double mid = std::sqrt(lo * hi);
    const double wm = probe(mid);
    if (wm > 0)
      lo = mid;
    else
      hi = mid;
  }
  res.value = std::sqrt(lo * hi);
  res.mu_lo = lo;
  res.mu_hi = hi;
  res.status = R0Result::Status::positive;
  return res;
}

namespace {

// Spectral radius that tolerates the tiny negative round-off the one-step
// propagator products leave behind (they are not positivity-preserving to
// machine precision); genuine negativity is refused.
double radius_clamped(Eigen::MatrixXd G) {
  const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
  const double mn = G.minCoeff();
  if (mn < -1e-8 * scale)
    throw ComputeError("next-generation matrix has structurally negative entries");
  G = G.cwiseMax(0.0);
  return spectral_radius(G).radius;
}

}  // namespace

double r0_direct(const ModelSpec& model, Setting setting, const DirectOptions& opts) {
  if (!model.split) throw ComputeError("reproduction ratio requires a split (decay/gain) reaction");
  const int n_t = model.tgrid.n_t;
  const double dt = model.tgrid.dt();
  const int dim = state_dim(model, setting);

  // One-step propagators of the decay flow between consecutive time nodes
  // (trapezoidal/one-step theta=1/2 scheme, second order, so the oracle's own
  // bias stays inside the comparison budget).
  std::vector<Eigen::MatrixXd> S(n_t);
  std::vector<Eigen::MatrixXd> Fk(n_t);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
  for (int j = 0; j < n_t; ++j) {
    const Eigen::MatrixXd Aj = dense_generator(model, setting, GeneratorMode::DecayOnly, 1.0, j);
    const Eigen::MatrixXd Aj1 =
        dense_generator(model, setting, GeneratorMode::DecayOnly, 1.0, (j + 1) % n_t);
    S[j] = (I - 0.5 * dt * Aj1).partialPivLu().solve(I + 0.5 * dt * Aj);
    Fk[j] = dense_gain(model, setting, j);
  }

  // Geometric tail: pick the fewest whole periods K with r^K below tol_tail.
  Eigen::MatrixXd Phi_T = I;
  for (int j = 0; j < n_t; ++j) Phi_T = (S[j] * Phi_T).eval();
  const double r_decay = spectral_radius(Phi_T.cwiseAbs()).radius;
  if (r_decay >= 1.0)
    throw ComputeError("decay flow is not contracting over a period; generation integral diverges");
  int K = 1;
  double rk = r_decay;
  while (rk >= opts.tol_tail && K < opts.n_periods_cap) {
    rk *= r_decay;
    ++K;
  }
  if (rk >= opts.tol_tail)
    throw ComputeError("geometric tail bound not reached within the period cap");

  // G[(k,:),(k',:)] accumulates quadrature slices of the generation integral:
  // weight * Phi(t_k, t_k - s) * F(t_k - s) at s = m dt, trapezoid in s.
  const int M = K * n_t;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim * n_t, dim * n_t);
  for (int k = 0; k < n_t; ++k) {
    Eigen::MatrixXd cur = I;
    {
      const double w0 = 0.5 * dt;  // s = 0 endpoint
      G.block(k * dim, k * dim, dim, dim) += w0 * Fk[k];
    }
    for (int m = 1; m <= M; ++m) {
      const int src = ((k - m) % n_t + n_t) % n_t;  // time node of t_k - s
      cur = (cur * S[src]).eval();
      const double w = (m == M) ? 0.5 * dt : dt;
      G.block(k * dim, src * dim, dim, dim) += w * cur * Fk[src];
    }
  }
  return radius_clamped(std::move(G));
}

PointwiseR0 r0_pointwise_max(const ModelSpec& model, const R0Options& opts) {
  PointwiseR0 out;
  out.max_value = -std::numeric_limits<double>::infinity();
  for (int node = 0; node < model.domain.n_nodes(); ++node) {
    const R0Result r = r0_bisect(model, Setting::frozen_x(node), opts);
    const double x = model.domain.node(node);
    out.table.emplace_back(x, r.value);
    if (r.value > out.max_value) {
      out.max_value = r.value;
      out.argmax_x = x;
    }
  }
  return out;
}

double r0_averaged(const ModelSpec& model, const R0Options& opts) {
  return r0_bisect(model, Setting::averaged(), opts).value;
}

namespace {

SweepPoint sweep_point(const ModelSpec& base, double kappa, SweepWhat what, const R0Options& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelSpec m = base;
  m.diffusion.kappa.assign(base.n(), kappa);
  SweepPoint p;
  p.kappa = kappa;
  if (what == SweepWhat::r0) {
    R0Result r = r0_bisect(m, Setting::pde(), opts);
    p.value = r.value;
    p.status = to_string(r.status);
    p.omega_at_value = (r.status == R0Result::Status::positive && r.value > 0)
                           ? omega_psi(m, r.value, Setting::pde(), opts.ctrl)
                           : (r.omega_trace.empty() ? 0.0 : r.omega_trace.back().second);
  } else {
    const PrincipalEigenvalue pe = principal_eigenvalue(m, std::nullopt, opts.ctrl);
    p.value = pe.lambda_star;
    p.status = "ok";
    p.omega_at_value = -pe.lambda_star;
  }
  p.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return p;
}

}  // namespace

SweepReport sweep(const ModelSpec& model, const std::vector<double>& kappa_grid, SweepWhat what,
                  const R0Options& opts, int jobs) {
  if (kappa_grid.empty()) throw ConfigError("sweep requires a nonempty kappa grid");
  for (size_t i = 0; i < kappa_grid.size(); ++i) {
    if (!(kappa_grid[i] > 0)) throw ConfigError("sweep kappa grid must be positive");
    if (i && !(kappa_grid[i] > kappa_grid[i - 1]))
      throw ConfigError("sweep kappa grid must be strictly ascending");
  }
  if (what == SweepWhat::r0 && !model.split)
    throw ConfigError("reproduction-ratio sweep requires a split reaction");

  SweepReport rep;
  rep.what = what;
  rep.n_components = model.n();
  rep.points.resize(kappa_grid.size());

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(kappa_grid.size())));
  if (workers == 1) {
    for (size_t i = 0; i < kappa_grid.size(); ++i)
      rep.points[i] = sweep_point(model, kappa_grid[i], what, opts);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::string> errors(kappa_grid.size());
    for (int wkr = 0; wkr < workers; ++wkr)
      pool.emplace_back([&]() {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= kappa_grid.size()) return;
          try {
            rep.points[i] = sweep_point(model, kappa_grid[i], what, opts);
          } catch (const std::exception& e) {
            errors[i] = e.what();
          }
        }
      });
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (!e.empty()) throw ComputeError("sweep point failed: " + e);
  }

  if (what == SweepWhat::r0) {
    rep.limit_small = r0_pointwise_max(model, opts).max_value;
    rep.limit_large =
        model.boundary.kind == BcKind::Neumann ? r0_averaged(model, opts) : 0.0;
  } else {
    double eta = -std::numeric_limits<double>::infinity();
    for (int node = 0; node < model.domain.n_nodes(); ++node) {
      const MonodromyMap om =
          monodromy(model, Setting::frozen_x(node), GeneratorMode::Combined, opts.ctrl);
      eta = std::max(eta, growth_bound(om, model.tgrid.period));
    }
    const MonodromyMap am = monodromy(model, Setting::averaged(), GeneratorMode::Combined, opts.ctrl);
    const double eta_tilde = growth_bound(am, model.tgrid.period);
    rep.eta_values = std::make_pair(eta, eta_tilde);
    rep.limit_small = -eta;
    if (model.boundary.kind == BcKind::Neumann) {
      rep.limit_large = -eta_tilde;
    } else {
      rep.limit_large_infinite = true;
      rep.limit_large = std::numeric_limits<double>::infinity();
    }
  }

  int up = 0, down = 0;
  for (size_t i = 1; i < rep.points.size(); ++i) {
    if (rep.points[i].value > rep.points[i - 1].value) ++up;
    if (rep.points[i].value < rep.points[i - 1].value) ++down;
  }
  if (up == 0 && down == 0)
    rep.monotonicity_notes = "constant along the grid";
  else if (up == 0)
    rep.monotonicity_notes = "nonincreasing along ascending kappa";
  else if (down == 0)
    rep.monotonicity_notes = "nondecreasing along ascending kappa";
  else
    rep.monotonicity_notes = "not monotone (" + std::to_string(up) + " up, " +
                             std::to_string(down) + " down steps)";
  return rep;
}

std::string SweepReport::to_csv() const {
  Csv csv;
  std::vector<std::string> head;
  for (int i = 1; i <= n_components; ++i) head.push_back("kappa_" + std::to_string(i));
  head.insert(head.end(), {"value", "status", "omega_at_value", "wall_ms"});
  csv.header(head);
  for (const SweepPoint& p : points) {
    std::vector<std::string> cells(n_components, format_num(p.kappa));
    cells.push_back(format_num(p.value));
    cells.push_back(p.status);
    cells.push_back(format_num(p.omega_at_value));
    cells.push_back(format_num(p.wall_ms));
    csv.row(cells);
  }
  auto limit_row = [&](const std::string& status, double value) {
    std::vector<std::string> cells(n_components, "");
    cells.push_back(format_num(value));
    cells.push_back(status);
    cells.push_back("");
    cells.push_back("");
    csv.row(cells);
  };
  limit_row("limit_small", limit_small);
  limit_row("limit_large", limit_large);
  return csv.text();
}

}  // namespace reprodiff
