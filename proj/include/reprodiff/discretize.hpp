#pragma once
#include <vector>

#include "reprodiff/model.hpp"

namespace reprodiff {

// Discrete diffusion operator kappa_i * d/dx(a_i(x,t) d/dx) at one time
// sample, second-order finite volumes on the uniform grid. Components do not
// couple through diffusion, so each gets its own tridiagonal band set over
// the active nodes:
//   Dirichlet: interior nodes only (n_active = n_x, boundary values are 0)
//   Neumann / Robin: all nodes including endpoints (n_active = n_x + 2)
struct BandedOperator {
  int n = 0;         // components
  int n_active = 0;  // active nodes per component
  int node_offset = 0;  // active index -> global node index shift
  BcKind kind = BcKind::Neumann;
  struct Bands {
    std::vector<double> lower, diag, upper;  // lower[0], upper[last] unused
  };
  std::vector<Bands> comp;

  int global_node(int active) const { return active + node_offset; }
  // y = L u on node-major state (u[node * n + comp]), diffusion part only.
  void apply(const std::vector<double>& u, std::vector<double>& y) const;
  // max_i sum_j |L_ij| over all rows; used for the positivity step bound.
  double max_row_abs_sum() const;
};

int active_node_count(const ModelSpec& model);

// Assemble the diffusion bands from the a-field at time sample k (face values
// are arithmetic averages of adjacent node samples; Neumann rows have zero
// row sum; Robin adds the -2 a_face b / (a h) diagonal sink).
BandedOperator assemble_diffusion(const ModelSpec& model, int time_sample);

}  // namespace reprodiff
