#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "reprodiff/errors.hpp"
#include "reprodiff/periodic.hpp"

using namespace reprodiff;
using nlohmann::json;

namespace {

// logistic-style nonlinear config: dq/dt = growth(x,t) q - q^2
json logistic_config(const std::string& growth, double v_lo, double v_up, double h_margin,
                     int n_x, int n_t, const std::string& bc = "neumann") {
  json cfg = oracle::base_config(n_x, n_t);
  cfg["diffusion"]["kappa"] = {1.0};
  cfg["diffusion"]["a"] = {"1"};
  cfg["boundary"]["kind"] = bc;
  cfg["reaction"]["form"] = "nonlinear";
  cfg["reaction"]["G"] = {"(" + growth + ")*q1 - q1*q1"};
  cfg["reaction"]["v_lower"] = {std::to_string(v_lo)};
  cfg["reaction"]["v_upper"] = {v_up};
  cfg["reaction"]["h"] = h_margin;
  return cfg;
}

}  // namespace

TEST_CASE("reaction spec parses the nonlinear section") {
  json cfg = logistic_config("2", 0.5, 4.0, 1.0, 4, 50);
  ReactionSpec spec = build_reaction_spec(cfg);
  REQUIRE(spec.G.size() == 1);
  REQUIRE(spec.v_lower.size() == 1);
  REQUIRE(spec.v_upper.size() == 1);
  CHECK(spec.h == doctest::Approx(1.0));
  double q = 3.0;
  CHECK(spec.G[0].eval(0, 0, &q, 1) == doctest::Approx(2 * 3 - 9));
}

TEST_CASE("reaction spec shape errors") {
  json cfg = logistic_config("2", 0.5, 4.0, 1.0, 4, 50);
  json bad = cfg;
  bad["reaction"].erase("G");
  CHECK_THROWS_AS(build_reaction_spec(bad), ConfigError);
  bad = cfg;
  bad["reaction"]["v_upper"] = {4.0, 5.0};  // one component, two bounds
  CHECK_THROWS_AS(build_reaction_spec(bad), ConfigError);
  bad = cfg;
  bad["reaction"]["v_upper"] = {-1.0};
  CHECK_THROWS_AS(build_reaction_spec(bad), ConfigError);
  bad = cfg;
  bad["reaction"]["h"] = -0.5;
  CHECK_THROWS_AS(build_reaction_spec(bad), ConfigError);
}

TEST_CASE("certificate checks accept a proper logistic bracket") {
  json cfg = logistic_config("2", 0.5, 4.0, 1.0, 4, 50);
  ModelSpec m = build_model(cfg);
  ReactionValidation v = validate_reaction(m, build_reaction_spec(cfg));
  CHECK(v.all_ok());
  CHECK(v.violations.empty());
}

TEST_CASE("certificate checks flag a non-cooperative coupling") {
  json cfg = oracle::base_config(4, 50);
  cfg["diffusion"]["kappa"] = {1.0, 1.0};
  cfg["diffusion"]["a"] = {"1", "1"};
  cfg["boundary"]["kind"] = "neumann";
  cfg["reaction"]["form"] = "nonlinear";
  // dG1/dq2 = -1 < 0 breaks the order-preserving structure
  cfg["reaction"]["G"] = {"q1 - q1*q1 - q2", "q2 - q2*q2"};
  cfg["reaction"]["v_lower"] = {"0.1", "0.1"};
  cfg["reaction"]["v_upper"] = {3.0, 3.0};
  cfg["reaction"]["h"] = 0.5;
  ModelSpec m = build_model(cfg);
  ReactionValidation v = validate_reaction(m, build_reaction_spec(cfg));
  CHECK_FALSE(v.offdiag_ok);
  CHECK_FALSE(v.all_ok());
  CHECK_FALSE(v.violations.empty());
}

TEST_CASE("certificate checks flag a lower bound that is not a sub-solution") {
  // 3 sits above the carrying capacity 1: G(3) < 0 while the bound is static
  json cfg = logistic_config("1", 3.0, 4.0, 0.5, 4, 50);
  ModelSpec m = build_model(cfg);
  ReactionValidation v = validate_reaction(m, build_reaction_spec(cfg));
  CHECK_FALSE(v.sub_ok);
}

TEST_CASE("certificate checks flag an upper bound without decay margin") {
  // 0.5 sits below the carrying capacity: G(0.5) > 0 > -h
  json cfg = logistic_config("1", 0.1, 0.5, 0.25, 4, 50);
  ModelSpec m = build_model(cfg);
  ReactionValidation v = validate_reaction(m, build_reaction_spec(cfg));
  CHECK_FALSE(v.super_ok);
}

TEST_CASE("constant logistic equilibrium is hit exactly") {
  json cfg = logistic_config("2", 0.5, 4.0, 1.0, 2, 50);
  ModelSpec m = build_model(cfg);
  PeriodicSolution sol =
      solve_periodic(m, build_reaction_spec(cfg), {1.0}, Setting::averaged());
  // the implicit-source update has w = growth/saturation as its exact fixed point
  for (int k = 0; k <= 50; ++k) CHECK(sol.w.at(0, 0, 0, k) == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(sol.residual <= 1e-9);
  CHECK(sol.two_sided_agreement);
  CHECK(sol.two_sided_gap <= 1e-8);
  CHECK(sol.periods_to_converge >= 1);
  CHECK(sol.w_hat_norm <= 1e-12);
}

TEST_CASE("oscillating growth follows the reciprocal-substitution solution") {
  const int n_t = 1600;
  json cfg = logistic_config("1 + 0.5*sin(2*pi*t)", 0.2, 4.0, 0.5, 2, n_t);
  ModelSpec m = build_model(cfg);
  PeriodicSolution sol =
      solve_periodic(m, build_reaction_spec(cfg), {1.0}, Setting::averaged());
  std::vector<double> times(n_t + 1);
  for (int k = 0; k <= n_t; ++k) times[k] = m.tgrid.dt() * k;
  std::vector<double> exact = oracle::logistic_periodic(
      [](double t) { return 1.0 + 0.5 * std::sin(2 * M_PI * t); }, [](double) { return 1.0; },
      1.0, times, 48000);
  double sup = 0, scale = 0;
  for (int k = 0; k <= n_t; ++k) {
    sup = std::max(sup, std::abs(sol.w.at(0, 0, 0, k) - exact[k]));
    scale = std::max(scale, std::abs(exact[k]));
  }
  CHECK(sup <= 5e-3 * scale);
}

TEST_CASE("space-independent data keeps the solution flat") {
  json cfg = logistic_config("1", 0.2, 3.0, 0.25, 8, 50);
  ModelSpec m = build_model(cfg);
  PeriodicSolution sol = solve_periodic(m, build_reaction_spec(cfg), {0.7}, Setting::pde());
  CHECK(sol.w_hat_norm <= 1e-9);
  CHECK(sol.w.at(0, 0, 3, 20) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("weak spread tracks the frozen-coefficient profile") {
  const int n_x = 64;
  json cfg = logistic_config("1 + x", 0.2, 4.0, 0.5, n_x, 100);
  ModelSpec m = build_model(cfg);
  ReactionSpec spec = build_reaction_spec(cfg);
  PeriodicSolution sol = solve_periodic(m, spec, {1e-4}, Setting::pde());
  double sup = 0;
  for (int node = 0; node < m.domain.n_nodes(); ++node) {
    const double want = 1.0 + m.domain.node(node);
    sup = std::max(sup, std::abs(sol.w.at(0, 0, node, 50) - want));
  }
  CHECK(sup <= 0.02 * 2.0);

  // the spatial deviation field averages to zero at every time sample
  const double h = m.domain.h();
  for (int k = 0; k <= 100; k += 10) {
    double avg = 0;
    for (int node = 0; node < m.domain.n_nodes(); ++node) {
      const double weight = (node == 0 || node == m.domain.n_nodes() - 1) ? 0.5 : 1.0;
      avg += weight * (sol.w.at(0, 0, node, k) - sol.w_tilde.at(0, 0, 0, k));
    }
    avg *= h / m.domain.length();
    CHECK(std::abs(avg) <= 1e-12 * 4.0);
  }

  // every sample respects the certificate bracket
  for (int node = 0; node < m.domain.n_nodes(); ++node)
    for (int k = 0; k <= 100; ++k) {
      CHECK(sol.w.at(0, 0, node, k) >= 0.2 * (1 - 1e-6) - 1e-6);
      CHECK(sol.w.at(0, 0, node, k) <= 4.0 * (1 + 1e-6) + 1e-6);
    }
}

TEST_CASE("frozen-coefficient setting solves the site equation") {
  json cfg = logistic_config("1 + x", 0.2, 4.0, 0.5, 8, 50);
  ModelSpec m = build_model(cfg);
  ReactionSpec spec = build_reaction_spec(cfg);
  PeriodicSolution sol = solve_periodic(m, spec, {1.0}, Setting::frozen_x(5));
  const double x5 = m.domain.node(5);
  CHECK(sol.w.at(0, 0, 0, 25) == doctest::Approx(1.0 + x5).epsilon(1e-7));
}

TEST_CASE("pde setting demands no-flux walls") {
  json cfg = logistic_config("1", 0.2, 3.0, 0.25, 6, 50, "dirichlet");
  ModelSpec m = build_model(cfg);
  CHECK_THROWS_AS(solve_periodic(m, build_reaction_spec(cfg), {1.0}, Setting::pde()),
                  ConfigError);
}

TEST_CASE("invalid certificates are rejected before marching") {
  json cfg = logistic_config("1", 0.1, 0.5, 0.25, 6, 50);  // upper bound too low
  ModelSpec m = build_model(cfg);
  CHECK_THROWS_AS(solve_periodic(m, build_reaction_spec(cfg), {1.0}, Setting::pde()),
                  ConfigError);
}

TEST_CASE("diffusion override must match the component count") {
  json cfg = logistic_config("1", 0.2, 3.0, 0.25, 6, 50);
  ModelSpec m = build_model(cfg);
  CHECK_THROWS_AS(solve_periodic(m, build_reaction_spec(cfg), {1.0, 2.0}, Setting::pde()),
                  ConfigError);
}

TEST_CASE("a one-period budget is not enough to converge") {
  json cfg = logistic_config("1 + 0.5*sin(2*pi*t)", 0.2, 4.0, 0.5, 2, 100);
  ModelSpec m = build_model(cfg);
  PeriodicOptions opts;
  opts.max_periods = 1;
  CHECK_THROWS_AS(
      solve_periodic(m, build_reaction_spec(cfg), {1.0}, Setting::averaged(), opts),
      ComputeError);
}

TEST_CASE("small-diffusion check drives the gap down") {
  json cfg = logistic_config("1 + x", 0.2, 4.0, 0.5, 48, 100);
  ModelSpec m = build_model(cfg);
  ReactionSpec spec = build_reaction_spec(cfg);
  LimitCheckReport rep = limit_check_zero(m, spec, {1e-2, 1e-3, 1e-4});
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].kappa == doctest::Approx(1e-2));
  CHECK(rep.rows[2].gap_avg < rep.rows[0].gap_avg);
  CHECK(rep.monotone_trend);
  for (const auto& row : rep.rows) {
    CHECK(row.periodicity_residual <= 1e-9);
    CHECK(row.gap_hat > 0);  // genuinely x-dependent profile
  }
  const std::string csv = rep.to_csv();
  CHECK(csv.rfind("kappa_1,gap_avg,gap_hat,periodicity_residual,periods_to_converge", 0) == 0);
  CHECK(csv.find("nan") == std::string::npos);
}

TEST_CASE("large-diffusion check flattens the profile") {
  json cfg = logistic_config("1 + x", 0.2, 4.0, 0.5, 32, 100);
  ModelSpec m = build_model(cfg);
  ReactionSpec spec = build_reaction_spec(cfg);
  LimitCheckReport rep = limit_check_infty(m, spec, {1.0, 10.0, 100.0});
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.monotone_trend);
  CHECK(rep.rows[2].gap_hat < rep.rows[0].gap_hat);
  CHECK(rep.rows[2].gap_avg < rep.rows[0].gap_avg);
  // deviation dies roughly like 1/kappa
  CHECK(rep.rows[2].gap_hat <= rep.rows[0].gap_hat / 20.0);
}

TEST_CASE("space-independent data floors both limit gaps") {
  json cfg = logistic_config("1 + 0.25*sin(2*pi*t)", 0.2, 4.0, 0.5, 8, 200);
  ModelSpec m = build_model(cfg);
  ReactionSpec spec = build_reaction_spec(cfg);
  LimitCheckReport zero = limit_check_zero(m, spec, {1.0, 1e-2});
  for (const auto& row : zero.rows) CHECK(row.gap_avg <= 1e-6);
  LimitCheckReport infty = limit_check_infty(m, spec, {1.0, 1e2});
  for (const auto& row : infty.rows) {
    CHECK(row.gap_avg <= 1e-6);
    CHECK(row.gap_hat <= 1e-9);
  }
}
