#pragma once
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reprodiff/evolve.hpp"
#include "reprodiff/expr.hpp"
#include "reprodiff/model.hpp"

namespace reprodiff {

// Nonlinear cooperative reaction G_i(x, t, q_1..q_n) with a sub/super
// solution certificate: v_lower(t) positive periodic (expressions in t),
// v_upper positive constants, h the decay margin of the upper certificate.
struct ReactionSpec {
  std::vector<Expr> G;
  std::vector<Expr> v_lower;
  std::vector<double> v_upper;
  double h = 0;
  bool jacobian_offdiag_nonneg = true;  // set by validate_reaction
};

// Parse the `reaction` section in its nonlinear form:
//   reaction.{form:"nonlinear", G:[...], v_lower:[...], v_upper:[...], h}
ReactionSpec build_reaction_spec(const nlohmann::json& config);

struct ReactionValidation {
  bool offdiag_ok = true;  // dG_i/dq_j >= 0 off the diagonal on the probe set
  bool sub_ok = true;      // tau v_lower' <= G(x,t,tau v_lower), tau in {0.1..1.0}
  bool super_ok = true;    // G_i(x,t,tau v_upper) <= -h for tau in {1,1.25,1.5,2,4}
  std::vector<std::string> violations;
  bool all_ok() const { return offdiag_ok && sub_ok && super_ok; }
};

// Sampled certificate checks on the grid (finite probe sets, not symbolic).
ReactionValidation validate_reaction(const ModelSpec& model, const ReactionSpec& reaction);

struct PeriodicSolution {
  CoefficientField w;        // n x 1 x n_nodes x (n_t + 1); ODE settings use n_nodes = 1
  CoefficientField w_tilde;  // spatial average per time, n x 1 x 1 x (n_t + 1)
  double w_hat_norm = 0;     // sup |w - w_tilde|
  double residual = 0;       // final Poincare defect sup |w(., T) - w(., 0)|
  int periods_to_converge = 0;
  std::vector<double> kappa;
  // The march reruns from the lower certificate; uniqueness is heuristic,
  // witnessed by both runs landing within 10 * tol_fp of each other.
  double two_sided_gap = 0;
  bool two_sided_agreement = true;
};

struct PeriodicOptions {
  double tol_fp = 1e-9;  // sup-norm Poincare fixed-point defect
  int max_periods = 5000;
  double tau_lower = 1.0, tau_upper = 1.0;  // certificate scalings for the two starts
  double bracket_slack = 1e-6;              // relative tolerance on bracket violation
};

// Positive periodic solution by whole-period time marching (diffusion and the
// sink part of the reaction implicit, source part explicit) from
// tau_upper * v_upper; a second run starts from tau_lower * v_lower. The PDE
// setting requires no-flux boundaries. kappa overrides the model's rates.
PeriodicSolution solve_periodic(const ModelSpec& model, const ReactionSpec& reaction,
                                const std::vector<double>& kappa, Setting setting,
                                const PeriodicOptions& opts = {});

struct LimitCheckRow {
  double kappa = 0;
  double gap_avg = 0;  // sup-norm gap to the limit object (see to_csv comment)
  double gap_hat = 0;  // sup-norm of the spatial deviation w - w_tilde
  double periodicity_residual = 0;
  int periods_to_converge = 0;
};

struct LimitCheckReport {
  std::vector<LimitCheckRow> rows;  // in the order of the requested grid
  bool monotone_trend = true;       // within a 10% noise band
  std::string notes;
  int n_components = 1;
  // Columns: kappa_1..kappa_n,gap_avg,gap_hat,periodicity_residual,
  // periods_to_converge. gap_avg measures the distance to the limit object:
  // the frozen-x solution w0 for the small-diffusion check, the averaged-ODE
  // solution for the large-diffusion check.
  std::string to_csv() const;
};

// Small-diffusion limit: the PDE solution approaches the frozen-x solutions
// assembled pointwise; grid given in descending kappa.
LimitCheckReport limit_check_zero(const ModelSpec& model, const ReactionSpec& reaction,
                                  const std::vector<double>& kappa_desc,
                                  const PeriodicOptions& opts = {});

// Large-diffusion limit: the spatial average approaches the averaged-ODE
// solution and the deviation norm dies; grid given in ascending kappa.
LimitCheckReport limit_check_infty(const ModelSpec& model, const ReactionSpec& reaction,
                                   const std::vector<double>& kappa_asc,
                                   const PeriodicOptions& opts = {});

}  // namespace reprodiff
