#pragma once
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reprodiff/expr.hpp"
#include "reprodiff/model.hpp"
#include "reprodiff/periodic.hpp"
#include "reprodiff/r0.hpp"

namespace reprodiff {

// Two-compartment vector-host infection model on an interval with no-flux
// boundaries: infected hosts (component 0) and infected vectors (component 1).
// The vector population first settles on its positive periodic equilibrium
// V*(x,t) of the logistic equation
//   dV/dt = kappa2 div(delta2 grad V) + (beta - mu1) V - mu2 V^2,
// and the infection dynamics are linearized around it:
//   clearance  diag(gamma, mu1 + mu2 V*)
//   gains      F12 = sigma1 H_u (hosts infected by vectors),
//              F21 = sigma2 V* (vectors infected by hosts)
//   diffusion  kappa1 delta1, kappa2 delta2.
struct ZikaParams {
  Domain domain;
  TimeGrid tgrid;
  Expr H_u;                    // host density, positive
  Expr beta, gamma, mu1, mu2;  // vector recruitment / host recovery / vector death rates
  Expr sigma1, sigma2;         // cross-infection coefficients
  Expr delta1, delta2;         // diffusivity profiles (positive)
  double kappa1 = 1, kappa2 = 1;
};

// Parse config sections domain.{x_lo,x_hi,n_x}, time.{period,n_t}, and
// zika.{H_u,beta,gamma,mu1,mu2,sigma1,sigma2,delta1,delta2,kappa1,kappa2}.
// All rates must be positive on the grid and beta - mu1 must stay positive
// (the vector population persists).
ZikaParams build_zika(const nlohmann::json& config);

// Positive periodic vector equilibrium at diffusion rate kappa2 (PDE march
// with auto-derived logistic certificates). Setting follows the caller:
// pde / frozen_x(node) / averaged.
PeriodicSolution solve_vector_equilibrium(const ZikaParams& params, double kappa2,
                                          Setting setting = Setting::pde(),
                                          const PeriodicOptions& opts = {});

// Linearized infection model around a supplied vector equilibrium field
// (1 x 1 x n_nodes x (n_t+1) samples; the trailing sample is ignored).
ModelSpec zika_linearized_model(const ZikaParams& params, const CoefficientField& vstar);

// Reproduction ratio of the linearized infection model at the params' rates.
R0Result zika_r0(const ZikaParams& params, const R0Options& opts = {});

struct ZikaLimits {
  // Small joint diffusion: max over x of the frozen-x ratio built with the
  // pointwise vector equilibrium V0(x, .).
  double small_endpoint = 0;
  double small_argmax_x = 0;
  // Large joint diffusion: ratio of the averaged system built with the
  // averaged-equation equilibrium and averaged coefficient products.
  double large_endpoint = 0;
};

ZikaLimits zika_limits(const ZikaParams& params, const R0Options& opts = {});

// Joint sweep kappa1 = kappa2 = kappa over an ascending grid, endpoints from
// zika_limits. The vector equilibrium is re-solved at every grid point.
SweepReport zika_sweep(const ZikaParams& params, const std::vector<double>& kappa_grid,
                       const R0Options& opts = {}, int jobs = 1);

}  // namespace reprodiff
