// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "evomax/function_space.hpp"
#include "evomax/model.hpp"

namespace evomax {

struct SolverSettings {
  /// Spatial refinement of the model grid used by the solver.
  int refine = 1;
  /// Target time step; 0 picks min(cfl h / max|v|, eps / 8).
  double dt = 0.0;
  double cfl = 0.8;
};

struct DirectSolution {
  SpatialGrid grid;
  std::vector<double> times;
  std::vector<StateField> snapshots;
  double dt;  // largest step actually taken
  double h;
  int steps;
  /// Estimated max error of the snapshots, NaN when not computed.
  double error_estimate;
};

/// Strang splitting for d/dt Phi = (Q / eps + V) Phi: half-step semi-Lagrangian
/// transport per state, an exact coupling step exp(Q dt / eps), another half-step
/// transport. `times` must be non-decreasing and non-negative. Throws
/// CflViolation when an explicit dt exceeds cfl h / max|v|.
DirectSolution direct_solve(const Model& model, double epsilon, const std::vector<double>& times,
                            const SolverSettings& settings = {});

/// Runs the solver at `settings` and at twice the resolution in both dt and h,
/// returns the finer run with error_estimate = max |fine - coarse| / 3 on the
/// coarse nodes (second order in time).
DirectSolution direct_solve_checked(const Model& model, double epsilon,
                                    const std::vector<double>& times,
                                    const SolverSettings& settings = {});

/// Restriction of a field on a refined grid to the nodes of `coarse`.
StateField restrict_to(const StateField& fine, const SpatialGrid& coarse);

/// Counter-based stream: output k is splitmix64 finalisation of
/// key + k * golden, with key derived from (seed, stream).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;
  std::uint64_t next() noexcept;
  /// Uniform in the open interval (0, 1).
  double uniform() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

/// Final position of one switched trajectory started at (u0, x0).
double simulate_path(const Model& model, double epsilon, double t_end, double u0,
                     Eigen::Index x0, CounterRng& rng);

struct McEstimate {
  double mean;
  double stderr_;
  std::int64_t n_paths;
  std::uint64_t seed;
  double t;
  double u;
  Eigen::Index x;
};

/// Worker count from EVOMAX_THREADS (1 when unset or invalid).
int worker_count_from_env();

/// Monte Carlo estimate of E[phi(u(t)) | u(0) = u, x(0) = x]. Path i draws from
/// CounterRng(seed, i); partial sums are merged in a fixed block order, so the
/// result is bit-identical for any `workers`. workers = 0 reads EVOMAX_THREADS.
McEstimate mc_estimate(const Model& model, double epsilon, double t, double u, Eigen::Index x,
                       std::int64_t n_paths, std::uint64_t seed, int workers = 0);

}  // namespace evomax
