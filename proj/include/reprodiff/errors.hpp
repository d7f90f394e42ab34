#pragma once
#include <stdexcept>
#include <string>

namespace reprodiff {

// Bad user input: config parse failures, shape mismatches, sign guards.
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation that was set up correctly but failed to produce a result
// (non-convergence, bracket failure, singular step). CLI exit code 1.
struct ComputeError : std::runtime_error {
  explicit ComputeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace reprodiff
