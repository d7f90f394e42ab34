#pragma once
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reprodiff/errors.hpp"
#include "reprodiff/expr.hpp"

namespace reprodiff {

// Uniform grid on [x_lo, x_hi] with n_x interior points; nodes 0..n_x+1
// include both endpoints, h = (x_hi - x_lo)/(n_x + 1).
struct Domain {
  double x_lo = 0, x_hi = 1;
  int n_x = 0;
  double h() const { return (x_hi - x_lo) / (n_x + 1); }
  int n_nodes() const { return n_x + 2; }
  double node(int j) const { return x_lo + h() * j; }
  double length() const { return x_hi - x_lo; }
};

// One period split into n_t backward-Euler steps; sample k lives at t_k = k*dt.
struct TimeGrid {
  double period = 1;
  int n_t = 0;
  double dt() const { return period / n_t; }
  double node(int k) const { return dt() * k; }
};

enum class BcKind { Dirichlet, Neumann, Robin };

std::string to_string(BcKind);
BcKind bc_from_string(const std::string&);

// rows x cols matrix-valued function of (x, t), sampled on the full node set
// (boundary columns included) over one period. Reaction fields use
// rows = cols = n; per-component scalar fields (diffusion a_i, robin b_i)
// use cols = 1.
struct CoefficientField {
  int rows = 0, cols = 0, n_nodes = 0, n_t = 0;
  std::vector<double> samples;

  static CoefficientField zeros(int rows, int cols, int n_nodes, int n_t) {
    CoefficientField f;
    f.rows = rows;
    f.cols = cols;
    f.n_nodes = n_nodes;
    f.n_t = n_t;
    f.samples.assign(static_cast<size_t>(rows) * cols * n_nodes * n_t, 0.0);
    return f;
  }
  size_t idx(int i, int j, int node, int k) const {
    return ((static_cast<size_t>(i) * cols + j) * n_nodes + node) * n_t + k;
  }
  double& at(int i, int j, int node, int k) { return samples[idx(i, j, node, k)]; }
  double at(int i, int j, int node, int k) const { return samples[idx(i, j, node, k)]; }
  bool empty() const { return samples.empty(); }
  double max_abs() const;
};

struct DiffusionSpec {
  std::vector<double> kappa;  // one per component; all > 0 in the PDE setting
  CoefficientField a;         // n x 1 field, uniform ellipticity 0 < a_lo <= a <= a_hi
  double a_lo = 0, a_hi = 0;
};

struct BoundarySpec {
  BcKind kind = BcKind::Neumann;
  // Robin only: b_i at the two endpoints over time (n x 1, n_nodes = 2:
  // node 0 = left endpoint, node 1 = right endpoint). Strictly positive.
  CoefficientField robin_b;
};

// Reaction given either combined (M) or split (-V + F with F >= 0 and -V
// cooperative). mu scales F only: generator kappa L - V + F/mu.
struct ModelSpec {
  Domain domain;
  TimeGrid tgrid;
  DiffusionSpec diffusion;
  BoundarySpec boundary;
  bool split = false;
  CoefficientField M;  // valid when !split
  CoefficientField V, F;  // valid when split

  int n() const { return split ? V.rows : M.rows; }
  // Combined reaction M (= -V + F for split models), sampled.
  CoefficientField combined() const;
};

struct AssumptionReport {
  bool cooperative_ok = true;       // off-diagonal reaction samples >= 0 (strict sign)
  bool F_nonneg_ok = true;          // split form only
  bool omega_Gamma_negative = true; // max_x omega(Gamma_x) < 0, split form only
  bool omega_Gamma_tilde_negative = true;
  double max_omega_Gamma_x = 0;     // over the closed node set
  double omega_Gamma_tilde = 0;
  struct Violation {
    std::string assumption;
    std::string location;
  };
  std::vector<Violation> violations;
  bool all_ok() const {
    return cooperative_ok && F_nonneg_ok && omega_Gamma_negative && omega_Gamma_tilde_negative;
  }
};

/// Build a ModelSpec from the documented config schema:
//   domain.{x_lo,x_hi,n_x}, time.{period,n_t}, diffusion.{kappa[],a[]},
//   boundary.{kind,b[]}, reaction.{form, entries[][] | V[][] + F[][]}
// Field entries are expression strings in the Expr grammar.
ModelSpec build_model(const nlohmann::json& config);

// Composite trapezoid average over x per (i,j,t); result has n_nodes = 1.
CoefficientField spatial_average(const CoefficientField& field, const Domain& domain);

// Sign checks on every sample plus omega(Gamma_x) per grid node and
// omega(Gamma_tilde) for the averaged decay part (split models).
AssumptionReport validate_assumptions(const ModelSpec& model);

}  // namespace reprodiff
