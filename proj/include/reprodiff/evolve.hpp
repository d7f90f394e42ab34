#pragma once
#include <Eigen/Core>

#include "reprodiff/discretize.hpp"
#include "reprodiff/model.hpp"

namespace reprodiff {

// Which linear reaction generator drives the flow.
enum class GeneratorMode {
  Combined,     // full reaction M (= -V + F when split)
  SplitWithMu,  // -V + F / mu  (split models only)
  DecayOnly,    // -V           (split models only)
};

// Where the flow lives: the full discretized PDE, the reaction ODE with
// coefficients frozen at one grid node (no diffusion), or the reaction ODE
// with spatially averaged coefficients (no diffusion).
struct Setting {
  enum class Kind { PDE, FrozenX, Averaged };
  Kind kind = Kind::PDE;
  int node = 0;  // FrozenX only: global node index, 0 .. n_x+1

  static Setting pde() { return {Kind::PDE, 0}; }
  static Setting frozen_x(int node) { return {Kind::FrozenX, node}; }
  static Setting averaged() { return {Kind::Averaged, 0}; }
};

struct StepControl {
  double mu = 1.0;       // SplitWithMu scaling of the gain part
  double safety = 0.5;   // substep bound: dt_sub * max row |A| <= safety
  double eps_pos = 1e-12;  // tolerated negative round-off, relative to map scale
  int max_positivity_retries = 6;
};

// One-period backward-Euler propagator. The true period map equals
// matrix * exp(log_scale); the split keeps extreme decay/growth finite.
struct MonodromyMap {
  Eigen::MatrixXd matrix;
  double log_scale = 0;
  int dim = 0;
  long steps_per_period = 0;  // implicit substeps actually taken
  long clamped_entries = 0;  // negative round-off entries zeroed
};

// Assemble the period map of u' = kappa L u + R(t) u by backward Euler.
// Coefficients are sampled on the coarse time grid only; when the positivity
// bound demands a smaller step, each coarse interval is sub-stepped with the
// interval's right-endpoint sample reused. If the assembled map still has
// entries below -eps the substep count doubles and assembly reruns (up to
// max_positivity_retries), after which a genuine violation throws.
MonodromyMap monodromy(const ModelSpec& model, Setting setting, GeneratorMode mode,
                       const StepControl& ctrl = {});

// Exponential growth bound omega = (ln r + log_scale) / period where r is the
// spectral radius of the scaled map; -infinity when the map is nilpotent to
// round-off (radius 0).
double growth_bound(const MonodromyMap& map, double period);

// March one nonnegative state over a period with the same stepping policy as
// monodromy, recording the state after every coarse step: n_t + 1 columns,
// each renormalized to max-norm 1 with its log scale in scales[k]. Used to
// sample eigenfunctions along the period.
struct MarchedStates {
  Eigen::MatrixXd columns;     // dim x (n_t + 1)
  std::vector<double> scales;  // log of the factor divided out per column
};
MarchedStates march_states(const ModelSpec& model, Setting setting, GeneratorMode mode,
                           const Eigen::VectorXd& start, const StepControl& ctrl = {});

// Dense generator A(sample) = kappa L + R(sample) on the active unknowns
// (node-major: state[node * n + comp]). Used by the direct next-generation
// assembly and by tests; intended for coarse resolutions.
Eigen::MatrixXd dense_generator(const ModelSpec& model, Setting setting, GeneratorMode mode,
                                double mu, int sample);

// Dense block-diagonal gain matrix F(sample) on the active unknowns (split
// models; zero matrix for FrozenX/Averaged of a combined model is an error).
Eigen::MatrixXd dense_gain(const ModelSpec& model, Setting setting, int sample);

// Number of active unknowns for the setting (PDE: active nodes * n; else n).
int state_dim(const ModelSpec& model, Setting setting);

}  // namespace reprodiff
