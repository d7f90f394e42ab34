#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "reprodiff/errors.hpp"
#include "reprodiff/r0.hpp"

using namespace reprodiff;

namespace {

// scalar split model: clearance gamma, gain beta (expression strings)
ModelSpec scalar_split(const std::string& gamma, const std::string& beta, int n_x = 2,
                       int n_t = 200, const std::string& bc = "neumann") {
  return build_model(oracle::split_config(n_x, n_t, {{gamma}}, {{beta}}, {1.0}, bc));
}

}  // namespace

TEST_CASE("mu-scaled growth rate hits zero at the true ratio") {
  ModelSpec m = scalar_split("1", "2");
  // mu = 2 cancels clearance against the scaled gain: the flow is frozen
  CHECK(std::abs(omega_psi(m, 2.0, Setting::averaged())) <= 1e-12);
  // mu = 1 leaves net growth 1, seen to first order in dt
  CHECK(omega_psi(m, 1.0, Setting::averaged()) == doctest::Approx(1.0).epsilon(5e-3));
  // larger mu weakens the gain: strictly smaller growth
  CHECK(omega_psi(m, 4.0, Setting::averaged()) < omega_psi(m, 2.0, Setting::averaged()));
}

TEST_CASE("mu-scaled growth rate for a cross-infection pair") {
  ModelSpec m = build_model(oracle::split_config(2, 100, {{"1", "0"}, {"0", "1"}},
                                                 {{"0", "2"}, {"2", "0"}}, {1.0, 1.0}));
  CHECK(std::abs(omega_psi(m, 2.0, Setting::averaged())) <= 1e-12);
  CHECK(omega_psi(m, 1.0, Setting::averaged()) > 0);
  CHECK(omega_psi(m, 4.0, Setting::averaged()) < 0);
}

TEST_CASE("bisection recovers the constant-rate ratio") {
  R0Result r = r0_bisect(scalar_split("1", "2"), Setting::averaged());
  CHECK(r.status == R0Result::Status::positive);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(r.mu_lo <= r.value);
  CHECK(r.value <= r.mu_hi);
  CHECK_FALSE(r.omega_trace.empty());
}

TEST_CASE("bisection recovers the geometric mean of a cross pair") {
  ModelSpec m = build_model(oracle::split_config(2, 100, {{"1", "0"}, {"0", "1"}},
                                                 {{"0", "1"}, {"4", "0"}}, {1.0, 1.0}));
  R0Result r = r0_bisect(m, Setting::averaged());
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-5));  // sqrt(1 * 4)
}

TEST_CASE("bisection recovers the time-averaged ratio") {
  // gain 2 + sin(2 pi t) against unit clearance: the ratio is the mean gain
  R0Result r = r0_bisect(scalar_split("1", "2 + sin(2*pi*t)", 2, 400), Setting::averaged());
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("vanishing gain is the zero case") {
  R0Result r = r0_bisect(scalar_split("1", "0"), Setting::averaged());
  CHECK(r.status == R0Result::Status::zero_case);
  CHECK(r.value == doctest::Approx(0.0));
}

TEST_CASE("an unstable clearance part fails the bracket upward") {
  // no decay at all: the scaled flow grows for every tested mu
  R0Result r = r0_bisect(scalar_split("0", "1"), Setting::averaged());
  CHECK(r.status == R0Result::Status::bracket_failure);
  CHECK(r.value == doctest::Approx(1e8));
}

TEST_CASE("probe trace is nonincreasing in mu") {
  R0Result r = r0_bisect(scalar_split("1", "2 + sin(2*pi*t)", 2, 100), Setting::averaged());
  auto trace = r.omega_trace;
  std::sort(trace.begin(), trace.end());
  for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i].second <= trace[i - 1].second + 1e-9);
}

TEST_CASE("direct operator assembly agrees with bisection") {
  struct Fixture {
    std::vector<std::vector<std::string>> V, F;
  };
  const std::vector<Fixture> fixtures = {
      {{{"1"}}, {{"2"}}},
      {{{"1", "0"}, {"0", "1"}}, {{"0", "2"}, {"2", "0"}}},
      {{{"1"}}, {{"2 + sin(2*pi*t)"}}},
      {{{"1.5", "0"}, {"0", "0.7"}}, {{"0.3", "1"}, {"0.9", "0.2 + 0.1*sin(2*pi*t)"}}},
  };
  for (const auto& fx : fixtures) {
    ModelSpec m = build_model(
        oracle::split_config(2, 400, fx.V, fx.F, std::vector<double>(fx.V.size(), 1.0)));
    const double bis = r0_bisect(m, Setting::averaged()).value;
    const double dir = r0_direct(m, Setting::averaged());
    CHECK(std::abs(bis - dir) <= 1e-3 * std::max(1.0, std::abs(bis)));
  }
}

TEST_CASE("direct operator of a vanishing gain is zero") {
  CHECK(r0_direct(scalar_split("1", "0"), Setting::averaged()) <= 1e-9);
}

TEST_CASE("frozen-coefficient ratios tabulate the pointwise quotient") {
  // gain 1 + x against unit clearance: the frozen ratio at x is 1 + x
  ModelSpec m = scalar_split("1", "1 + x", 8, 100);
  PointwiseR0 p = r0_pointwise_max(m);
  REQUIRE(p.table.size() == static_cast<size_t>(m.domain.n_nodes()));
  for (const auto& [x, r] : p.table) CHECK(r == doctest::Approx(1.0 + x).epsilon(1e-5));
  CHECK(p.max_value == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(p.argmax_x == doctest::Approx(1.0));
}

TEST_CASE("averaged ratio uses the mean coefficients") {
  ModelSpec m = scalar_split("1", "1 + x", 16, 100);
  CHECK(r0_averaged(m) == doctest::Approx(1.5).epsilon(1e-5));
}

TEST_CASE("spatial spread interpolates between the pointwise max and the mean") {
  ModelSpec m = scalar_split("1", "1 + x", 32, 100);
  R0Options opts;
  auto at_kappa = [&](double k) {
    ModelSpec mk = m;
    mk.diffusion.kappa = {k};
    return r0_bisect(mk, Setting::pde(), opts).value;
  };
  const double r_small = at_kappa(1e-4);
  const double r_mid = at_kappa(1.0);
  const double r_large = at_kappa(1e3);
  const double lo = r0_averaged(m), hi = r0_pointwise_max(m).max_value;
  for (double r : {r_small, r_mid, r_large}) {
    CHECK(r >= lo - 1e-3);
    CHECK(r <= hi + 1e-3);
  }
  // weak spread concentrates mass near the best site; strong spread averages
  CHECK(r_small > r_mid);
  CHECK(r_mid > r_large);
  CHECK(r_large == doctest::Approx(lo).epsilon(2e-3));
}

TEST_CASE("small coefficient changes move the ratio continuously") {
  const double base = r0_bisect(scalar_split("1", "2 + sin(2*pi*t)", 2, 100),
                                Setting::averaged()).value;
  const double bumped = r0_bisect(
      scalar_split("1", "(2 + sin(2*pi*t)) * 1.001", 2, 100), Setting::averaged()).value;
  CHECK(std::abs(bumped - base) <= 1e-2 * std::max(1.0, base));
  CHECK(bumped > base);  // larger gain, larger ratio
}

TEST_CASE("tighter bisection tolerance sharpens the root") {
  R0Options tight;
  tight.tol_mu = 1e-9;
  R0Result r = r0_bisect(scalar_split("1", "2"), Setting::averaged(), tight);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("ratio sweep endpoints and ordering") {
  ModelSpec m = scalar_split("1", "1 + x", 32, 100);
  SweepReport rep = sweep(m, {1e-3, 1.0, 1e3}, SweepWhat::r0);
  REQUIRE(rep.points.size() == 3);
  CHECK(rep.limit_small == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(rep.limit_large == doctest::Approx(1.5).epsilon(1e-4));
  CHECK_FALSE(rep.limit_large_infinite);
  CHECK(rep.points[0].kappa == doctest::Approx(1e-3));
  for (const auto& pt : rep.points) {
    CHECK(pt.status == "positive");
    CHECK(std::abs(pt.omega_at_value) <= 1e-4);
    CHECK(pt.value <= rep.limit_small + 0.05);
    CHECK(pt.value >= rep.limit_large - 0.05);
  }
  // no-flux sweep decreases toward the averaged value
  CHECK(rep.points[0].value > rep.points[2].value);

  const std::string csv = rep.to_csv();
  CHECK(csv.rfind("kappa_1,value,status,omega_at_value,wall_ms", 0) == 0);
  CHECK(csv.find("limit_small") != std::string::npos);
  CHECK(csv.find("limit_large") != std::string::npos);
  CHECK(csv.find("nan") == std::string::npos);
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 3 + 2);  // header + grid rows + two endpoint rows
}

TEST_CASE("absorbing walls drive the sweep toward extinction") {
  ModelSpec m = scalar_split("1", "1 + x", 32, 100, "dirichlet");
  SweepReport rep = sweep(m, {1.0, 10.0, 100.0}, SweepWhat::r0);
  CHECK(rep.limit_large == doctest::Approx(0.0));
  CHECK(rep.points[0].value > rep.points[1].value);
  CHECK(rep.points[1].value > rep.points[2].value);
}

TEST_CASE("eigenvalue sweep carries the pointwise growth references") {
  ModelSpec m = build_model(oracle::combined_config(16, 100, {{"0.4"}}, {1.0}));
  SweepReport rep = sweep(m, {1e-3, 1e2}, SweepWhat::eigenvalue);
  REQUIRE(rep.eta_values.has_value());
  // constant reaction: both growth references equal the rate itself
  CHECK(rep.eta_values->first == doctest::Approx(0.4).epsilon(1e-2));
  CHECK(rep.eta_values->second == doctest::Approx(0.4).epsilon(1e-2));
  for (const auto& pt : rep.points)
    CHECK(pt.value == doctest::Approx(-0.4).epsilon(1e-2));
}

TEST_CASE("worker pool does not change sweep values") {
  ModelSpec m = scalar_split("1", "1 + x", 24, 80);
  SweepReport a = sweep(m, {1e-2, 1.0, 50.0}, SweepWhat::r0, R0Options{}, 1);
  SweepReport b = sweep(m, {1e-2, 1.0, 50.0}, SweepWhat::r0, R0Options{}, 3);
  REQUIRE(a.points.size() == b.points.size());
  for (size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].value == b.points[i].value);  // bitwise equal
    CHECK(a.points[i].status == b.points[i].status);
  }
  CHECK(a.limit_small == b.limit_small);
  CHECK(a.limit_large == b.limit_large);
}

TEST_CASE("ratio queries demand the split reaction form") {
  ModelSpec m = build_model(oracle::combined_config(2, 50, {{"-1"}}, {1.0}));
  CHECK_THROWS_AS(r0_bisect(m, Setting::averaged()), ComputeError);
}
