#pragma once
#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "reprodiff/evolve.hpp"
#include "reprodiff/model.hpp"

namespace reprodiff {

struct SpectralResult {
  double radius = 0;
  Eigen::VectorXd vector;  // nonnegative, max-norm 1
  int iterations = 0;
  enum class Method { power, gelfand, dense } method = Method::power;
  double residual = 0;  // ||A v - radius v||_inf
};

std::string to_string(SpectralResult::Method);

// Power iteration on B = A + I from the all-ones vector (the +I shift makes
// every diagonal block aperiodic); r(A) = r(B) - 1. Falls back to a Gelfand
// norm estimate ||A^k||^(1/k) with k doubling when the Rayleigh sequence
// fails to settle. Throws on negative or NaN entries.
SpectralResult spectral_radius(const Eigen::MatrixXd& A, double tol = 1e-10);

struct BlockDecomposition {
  std::vector<int> permutation;          // new position -> original index
  std::vector<std::vector<int>> blocks;  // diagonal blocks, feeders first
  std::vector<double> block_radii;
};

// Strongly-connected-component structure of the nonneg pattern (entry >
// eps_edge means j feeds i); blocks ordered so the permuted matrix is block
// lower triangular.
BlockDecomposition block_structure(const Eigen::MatrixXd& A, double eps_edge = 1e-12);

struct PrincipalEigenvalue {
  double lambda_star = 0;
  BcKind bc = BcKind::Neumann;
  std::vector<double> kappa;
  // Periodic eigenfunction samples, columns t_0..t_{n_t} (node-major rows),
  // nonnegative, max entry 1.
  Eigen::MatrixXd eigenfunction;
  SpectralResult diagnostics;
};

// lambda* = -growth_bound(period map) of the full reaction-diffusion flow;
// optional bc override replaces the model's boundary condition first.
PrincipalEigenvalue principal_eigenvalue(const ModelSpec& model,
                                         std::optional<BoundarySpec> bc = std::nullopt,
                                         const StepControl& ctrl = {});

// Reducibility bookkeeping on the spatially averaged period map: every
// structural zero of the map must come with identically-zero reaction
// coupling, and each diagonal block must reproduce the sub-system's period
// map and growth rate. Violations indicate discretization bugs.
struct BlockConsistencyReport {
  BlockDecomposition decomposition;  // of the averaged period map
  bool consistent = true;
  struct Violation {
    std::string what;
    int i = 0, j = 0;
    double magnitude = 0;
  };
  std::vector<Violation> violations;
  double max_block_equality_gap = 0;  // sub-system map vs extracted block
  double max_block_omega_gap = 0;     // omega(sub-system) vs ln(r(block))/T
};

BlockConsistencyReport verify_block_consistency(const ModelSpec& model);

}  // namespace reprodiff
