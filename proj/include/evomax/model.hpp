// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "evomax/function_space.hpp"
#include "evomax/markov_core.hpp"

namespace evomax {

/// A fully specified random evolution: switching chain, per-state velocities,
/// test function and the spatial grid everything is sampled on.
struct Model {
  MarkovStructure markov;
  VelocityField velocity;
  ScalarFunction phi;
  SpatialGrid grid;

  Eigen::Index states() const noexcept { return markov.states(); }
  ScalarFunction averaged_velocity() const {
    return average_velocity(velocity, markov.stationary);
  }
  /// max |v(u; x)| over all grid nodes and states.
  double max_speed() const {
    double m = 0.0;
    for (Eigen::Index x = 0; x < states(); ++x) {
      for (int i = 0; i < grid.size(); ++i) m = std::max(m, std::abs(velocity(x, grid.node(i))));
    }
    return m;
  }
  /// The interval trajectories must stay inside (padded grids only).
  std::optional<Domain> domain() const {
    if (grid.is_periodic()) return std::nullopt;
    return Domain{grid.lower(), grid.upper()};
  }
};

}  // namespace evomax
