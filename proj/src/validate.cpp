#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "reprodiff/errors.hpp"
#include "reprodiff/evolve.hpp"
#include "reprodiff/model.hpp"

namespace reprodiff {

namespace {

std::string sample_loc(const ModelSpec& m, int i, int j, int node, int k) {
  return "entry (" + std::to_string(i) + "," + std::to_string(j) + ") at x=" +
         std::to_string(m.domain.node(node)) + ", t=" + std::to_string(m.tgrid.node(k));
}

}  // namespace

AssumptionReport validate_assumptions(const ModelSpec& m) {
  AssumptionReport rep;
  const int n = m.n();
  const int n_nodes = m.domain.n_nodes();
  const int n_t = m.tgrid.n_t;

  // Cooperativity: off-diagonal entries of the combined reaction are >= 0.
  // The tolerance absorbs only floating-point noise from sampling.
  const CoefficientField combined = m.combined();
  const double coop_tol = -1e-12 * std::max(1.0, combined.max_abs());
  int coop_reported = 0;
  for (int i = 0; i < n && coop_reported < 8; ++i)
    for (int j = 0; j < n && coop_reported < 8; ++j) {
      if (i == j) continue;
      for (int node = 0; node < n_nodes; ++node)
        for (int k = 0; k < n_t; ++k)
          if (combined.at(i, j, node, k) < coop_tol) {
            rep.cooperative_ok = false;
            rep.violations.push_back({"cooperative off-diagonal", sample_loc(m, i, j, node, k)});
            if (++coop_reported >= 8) break;
          }
    }

  if (!m.split) {
    // The decay-part checks only apply to split reactions.
    rep.max_omega_Gamma_x = -std::numeric_limits<double>::infinity();
    rep.omega_Gamma_tilde = -std::numeric_limits<double>::infinity();
    return rep;
  }

  const double f_tol = -1e-12 * std::max(1.0, m.F.max_abs());
  int f_reported = 0;
  for (int i = 0; i < n && f_reported < 8; ++i)
    for (int j = 0; j < n && f_reported < 8; ++j)
      for (int node = 0; node < n_nodes; ++node)
        for (int k = 0; k < n_t; ++k)
          if (m.F.at(i, j, node, k) < f_tol) {
            rep.F_nonneg_ok = false;
            rep.violations.push_back({"gain matrix nonnegative", sample_loc(m, i, j, node, k)});
            if (++f_reported >= 8) break;
          }

  // Growth bound of the pure-decay flow frozen at each node: all must be < 0.
  StepControl ctl;
  rep.max_omega_Gamma_x = -std::numeric_limits<double>::infinity();
  int worst_node = 0;
  for (int node = 0; node < n_nodes; ++node) {
    MonodromyMap map = monodromy(m, Setting::frozen_x(node), GeneratorMode::DecayOnly, ctl);
    double w = growth_bound(map, m.tgrid.period);
    if (w > rep.max_omega_Gamma_x) {
      rep.max_omega_Gamma_x = w;
      worst_node = node;
    }
  }
  if (!(rep.max_omega_Gamma_x < 0)) {
    rep.omega_Gamma_negative = false;
    rep.violations.push_back({"decay flow contracting at every point",
                              "growth bound " + std::to_string(rep.max_omega_Gamma_x) + " at x=" +
                                  std::to_string(m.domain.node(worst_node))});
  }

  MonodromyMap tmap = monodromy(m, Setting::averaged(), GeneratorMode::DecayOnly, ctl);
  rep.omega_Gamma_tilde = growth_bound(tmap, m.tgrid.period);
  if (!(rep.omega_Gamma_tilde < 0)) {
    rep.omega_Gamma_tilde_negative = false;
    rep.violations.push_back({"averaged decay flow contracting",
                              "growth bound " + std::to_string(rep.omega_Gamma_tilde)});
  }

  return rep;
}

}  // namespace reprodiff
