#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "reprodiff/discretize.hpp"
#include "reprodiff/errors.hpp"

using namespace reprodiff;

namespace {

// Dense matrix of one component's tridiagonal bands.
Eigen::MatrixXd bands_to_dense(const BandedOperator& op, int comp) {
  const auto& b = op.comp[comp];
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(op.n_active, op.n_active);
  for (int j = 0; j < op.n_active; ++j) {
    A(j, j) = b.diag[j];
    if (j > 0) A(j, j - 1) = b.lower[j];
    if (j + 1 < op.n_active) A(j, j + 1) = b.upper[j];
  }
  return A;
}

}  // namespace

TEST_CASE("dirichlet laplacian on three interior points") {
  // h = 1/4, kappa = a = 1: interior row stencil (16, -32, 16)
  ModelSpec m = build_model(oracle::combined_config(3, 4, {{"0"}}, {1.0}, "dirichlet"));
  BandedOperator op = assemble_diffusion(m, 0);
  CHECK(op.kind == BcKind::Dirichlet);
  CHECK(op.n_active == 3);
  CHECK(op.node_offset == 1);
  const auto& b = op.comp[0];
  for (int j = 0; j < 3; ++j) CHECK(b.diag[j] == doctest::Approx(-32.0));
  CHECK(b.upper[0] == doctest::Approx(16.0));
  CHECK(b.lower[1] == doctest::Approx(16.0));
  CHECK(b.upper[1] == doctest::Approx(16.0));
  CHECK(b.lower[2] == doctest::Approx(16.0));
}

TEST_CASE("neumann rows all sum to zero") {
  auto cfg = oracle::combined_config(12, 4, {{"0"}}, {0.7});
  cfg["diffusion"]["a"] = {"1 + 0.5*x"};
  ModelSpec m = build_model(cfg);
  BandedOperator op = assemble_diffusion(m, 0);
  CHECK(op.n_active == 14);
  CHECK(op.node_offset == 0);
  Eigen::MatrixXd A = bands_to_dense(op, 0);
  for (int j = 0; j < op.n_active; ++j)
    CHECK(std::abs(A.row(j).sum()) <= 1e-9 * op.max_row_abs_sum());
}

TEST_CASE("robin boundary row matches the ghost-point reduction") {
  // a = 1, b = 1, kappa = 1, h = 1/5. Eliminating the ghost value through the
  // flux condition -u' + b u = 0 gives diag -2/h^2 - 2b/h and neighbor 2/h^2.
  ModelSpec m = build_model(oracle::combined_config(4, 4, {{"0"}}, {1.0}, "robin"));
  BandedOperator op = assemble_diffusion(m, 0);
  const double h = m.domain.h();
  const auto& b = op.comp[0];
  CHECK(b.diag[0] == doctest::Approx(-2.0 / (h * h) - 2.0 / h));
  CHECK(b.upper[0] == doctest::Approx(2.0 / (h * h)));
  const int last = op.n_active - 1;
  CHECK(b.diag[last] == doctest::Approx(-2.0 / (h * h) - 2.0 / h));
  CHECK(b.lower[last] == doctest::Approx(2.0 / (h * h)));
  // interior rows are untouched by the boundary condition
  CHECK(b.diag[2] == doctest::Approx(-2.0 / (h * h)));
}

TEST_CASE("variable coefficient uses arithmetic face averages") {
  auto cfg = oracle::combined_config(2, 4, {{"0"}}, {2.0}, "dirichlet");
  cfg["diffusion"]["a"] = {"1 + x"};
  ModelSpec m = build_model(cfg);
  BandedOperator op = assemble_diffusion(m, 0);
  const double h = m.domain.h();  // 1/3
  // nodes at x = 0, 1/3, 2/3, 1; faces between them average the endpoints
  auto a_at = [](double x) { return 1.0 + x; };
  const double aw = 0.5 * (a_at(0.0) + a_at(1.0 / 3));
  const double ae = 0.5 * (a_at(1.0 / 3) + a_at(2.0 / 3));
  const auto& b = op.comp[0];
  CHECK(b.diag[0] == doctest::Approx(-2.0 * (aw + ae) / (h * h)));
  CHECK(b.upper[0] == doctest::Approx(2.0 * ae / (h * h)));
}

TEST_CASE("bands scale linearly in the diffusion rate") {
  ModelSpec m1 = build_model(oracle::combined_config(6, 4, {{"0"}}, {1.0}));
  ModelSpec m3 = build_model(oracle::combined_config(6, 4, {{"0"}}, {3.0}));
  BandedOperator o1 = assemble_diffusion(m1, 0);
  BandedOperator o3 = assemble_diffusion(m3, 0);
  for (int j = 0; j < o1.n_active; ++j)
    CHECK(o3.comp[0].diag[j] == doctest::Approx(3.0 * o1.comp[0].diag[j]));
}

TEST_CASE("time-dependent profile is sampled per time index") {
  auto cfg = oracle::combined_config(4, 4, {{"0"}}, {1.0});
  cfg["diffusion"]["a"] = {"1 + 0.5*t"};
  ModelSpec m = build_model(cfg);
  BandedOperator o0 = assemble_diffusion(m, 0);   // t = 0: a = 1
  BandedOperator o2 = assemble_diffusion(m, 2);   // t = 0.5: a = 1.25
  CHECK(o2.comp[0].diag[1] == doctest::Approx(1.25 * o0.comp[0].diag[1]));
}

TEST_CASE("smallest dirichlet eigenvalue approaches pi squared") {
  ModelSpec m = build_model(oracle::combined_config(64, 4, {{"0"}}, {1.0}, "dirichlet"));
  Eigen::MatrixXd A = bands_to_dense(assemble_diffusion(m, 0), 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-A);
  const double lam_min = es.eigenvalues()(0);
  const double h = m.domain.h();
  const double discrete_exact = 4.0 * std::pow(std::sin(M_PI * h / 2.0), 2) / (h * h);
  CHECK(lam_min == doctest::Approx(discrete_exact).epsilon(1e-9));
  CHECK(lam_min == doctest::Approx(M_PI * M_PI).epsilon(0.01));
}

TEST_CASE("sign structure supports the comparison principle") {
  for (const char* bc : {"dirichlet", "neumann", "robin"}) {
    auto cfg = oracle::combined_config(8, 4, {{"0"}}, {0.3}, bc);
    cfg["diffusion"]["a"] = {"1 + 0.25*sin(pi*x)"};
    ModelSpec m = build_model(cfg);
    BandedOperator op = assemble_diffusion(m, 0);
    const auto& b = op.comp[0];
    for (int j = 0; j < op.n_active; ++j) {
      CHECK(b.diag[j] <= 0);
      if (j > 0) CHECK(b.lower[j] >= 0);
      if (j + 1 < op.n_active) CHECK(b.upper[j] >= 0);
    }
    // (L u)_j >= 0 wherever a nonnegative vector vanishes
    std::vector<double> u(op.n_active, 0.0), y;
    for (int j = 0; j < op.n_active; j += 2) u[j] = 1.0 + 0.1 * j;
    op.apply(u, y);
    for (int j = 1; j < op.n_active; j += 2) CHECK(y[j] >= 0);
  }
}

TEST_CASE("apply matches the dense matrix and the row bound") {
  auto cfg = oracle::split_config(7, 4, {{"1", "0"}, {"0", "1"}}, {{"0", "1"}, {"1", "0"}},
                                  {0.4, 1.7});
  cfg["diffusion"]["a"] = {"1 + x", "2 - x"};
  ModelSpec m = build_model(cfg);
  BandedOperator op = assemble_diffusion(m, 1);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> u(static_cast<size_t>(op.n_active) * op.n);
  for (auto& v : u) v = dist(rng);
  std::vector<double> y;
  op.apply(u, y);
  double max_row = 0;
  for (int c = 0; c < op.n; ++c) {
    Eigen::MatrixXd A = bands_to_dense(op, c);
    for (int j = 0; j < op.n_active; ++j) {
      double want = 0;
      for (int i = 0; i < op.n_active; ++i) want += A(j, i) * u[static_cast<size_t>(i) * op.n + c];
      CHECK(y[static_cast<size_t>(j) * op.n + c] == doctest::Approx(want).epsilon(1e-12));
      max_row = std::max(max_row, A.row(j).cwiseAbs().sum());
    }
  }
  CHECK(op.max_row_abs_sum() == doctest::Approx(max_row).epsilon(1e-12));
}
