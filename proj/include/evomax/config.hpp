// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "evomax/expansion.hpp"
#include "evomax/model.hpp"

namespace evomax {

struct GridConfig {
  double u_min = 0.0;
  double u_max = 6.283185307179586;
  int n_points = 401;
  BoundaryMode mode = BoundaryMode::periodic;
  /// Padding beyond [u_min, u_max] in padded mode; negative picks t_end max|v|.
  double pad = -1.0;
};

/// Validated contents of a JSON model file with all defaults applied.
struct ModelConfig {
  std::vector<std::string> states;
  Matrix q;
  std::vector<std::string> velocity;
  std::string phi;
  GridConfig grid;
  double t_end = 1.0;
  int n_steps = 200;
  int n_tau = 600;
  double tau_max_factor = 30.0;
  int order = 3;
  std::vector<double> sweep_epsilons{0.2, 0.1, 0.05, 0.025};
  double sweep_t = 0.5;
  int max_refine_level = 6;
  std::int64_t mc_paths = 100000;
  std::uint64_t mc_seed = 42;
  /// FNV-1a 64 of the canonical JSON rendering, as 16 hex digits.
  std::string hash;
};

/// Throws ParseError (not JSON), SchemaError (missing, unknown or mistyped
/// fields, length mismatches) or ValidationError (invariant failures, with the
/// offending field named in the message).
ModelConfig parse_config(std::string_view text);
ModelConfig load_config(const std::string& path);

Model build_model(const ModelConfig& config);
ExpansionSettings expansion_settings(const ModelConfig& config);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t value);

}  // namespace evomax
