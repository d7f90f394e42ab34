#pragma once
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reprodiff/evolve.hpp"
#include "reprodiff/model.hpp"

namespace reprodiff {

struct R0Result {
  // For status=positive, the bisection root; 0 for zero_case; the upper
  // probe cap for bracket_failure (the gain flow outgrows every tested mu,
  // which signals a decay part that is not actually stable).
  double value = 0;
  enum class Status { positive, zero_case, bracket_failure } status = Status::positive;
  double mu_lo = 0, mu_hi = 0;  // final bracket
  std::vector<std::pair<double, double>> omega_trace;  // (mu, omega(Psi_mu)) probes in order
  Setting setting;
  BcKind bc = BcKind::Neumann;
};

std::string to_string(R0Result::Status);

struct R0Options {
  double mu_min = 1e-8;  // zero_case declared when omega < 0 all the way down here
  double mu_max = 1e8;
  double tol_mu = 1e-6;  // relative; bisection runs on log mu (values span decades)
  StepControl ctrl;
};

// omega of the mu-scaled flow u' = (kappa L - V + F/mu) u in the given
// setting; the reproduction ratio is the unique root in mu of this function.
double omega_psi(const ModelSpec& model, double mu, Setting setting, const StepControl& ctrl = {});

// Root of omega_psi by sign bisection: the bracket starts at mu = 1 and
// expands by factors of 10 until the sign changes; negative omega all the way
// to mu_min is the zero case, positive omega at mu_max is a bracket failure.
R0Result r0_bisect(const ModelSpec& model, Setting setting, const R0Options& opts = {});

struct DirectOptions {
  int n_periods_cap = 40;  // truncation cap K on the generation integral
  double tol_tail = 1e-6;  // required geometric tail bound r(decay map)^K
};

// Independent check: assembles the next-generation integral operator on
// T-periodic grid functions (one-step propagators between time nodes,
// composite trapezoid in the age variable, truncated at K periods with a
// geometric tail bound) and returns its spectral radius. Meant for ODE
// settings or coarse PDE grids: the assembled matrix is dense of size
// (state_dim * n_t) squared.
double r0_direct(const ModelSpec& model, Setting setting, const DirectOptions& opts = {});

struct PointwiseR0 {
  double max_value = 0;
  double argmax_x = 0;
  std::vector<std::pair<double, double>> table;  // (x_node, R0 at frozen x)
};

// Frozen-x reproduction ratio at every grid node including both endpoints;
// the max realizes the small-diffusion limit of the PDE value.
PointwiseR0 r0_pointwise_max(const ModelSpec& model, const R0Options& opts = {});

// Reproduction ratio of the spatially averaged system; the large-diffusion
// limit of the PDE value under no-flux boundaries.
double r0_averaged(const ModelSpec& model, const R0Options& opts = {});

enum class SweepWhat { r0, eigenvalue };

struct SweepPoint {
  double kappa = 0;
  double value = 0;
  std::string status;
  double omega_at_value = 0;
  double wall_ms = 0;
};

struct SweepReport {
  SweepWhat what = SweepWhat::r0;
  std::vector<SweepPoint> points;  // ascending kappa
  double limit_small = 0;
  double limit_large = 0;          // finite limit; see limit_large_infinite
  bool limit_large_infinite = false;  // Dirichlet/Robin eigenvalues diverge
  std::optional<std::pair<double, double>> eta_values;  // (eta, eta_tilde), eigenvalue sweeps
  std::string monotonicity_notes;
  int n_components = 1;

  // Columns: kappa_1..kappa_n,value,status,omega_at_value,wall_ms. The sweep
  // sets every component's diffusion rate to the grid value, so the kappa
  // columns repeat it. Two endpoint rows (status limit_small / limit_large)
  // carry the analytic limits with empty kappa/omega/wall cells.
  std::string to_csv() const;
};

// Per-kappa reproduction ratios (PDE bisection) or principal eigenvalues,
// plus the analytic small/large-diffusion endpoints. `jobs` > 1 computes
// sweep points in a worker pool; output is independent of the schedule.
SweepReport sweep(const ModelSpec& model, const std::vector<double>& kappa_grid, SweepWhat what,
                  const R0Options& opts = {}, int jobs = 1);

}  // namespace reprodiff
