// SPDX-License-Identifier: Apache-2.0
#include "evomax/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "evomax/error.hpp"
#include "evomax/expression.hpp"

namespace evomax {
namespace {

using json = nlohmann::json;

[[noreturn]] void schema(const std::string& message) { fail(ErrorCode::SchemaError, message); }
[[noreturn]] void invalid(const std::string& message) {
  fail(ErrorCode::ValidationError, message);
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& path) {
  if (!obj.is_object()) schema(path + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      schema("unknown field " + path + (path.empty() ? "" : ".") + item.key());
    }
  }
}

const json* optional_field(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& required_field(const json& obj, const std::string& key) {
  const auto* f = optional_field(obj, key);
  if (f == nullptr) schema("missing field " + key);
  return *f;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) schema(path + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) invalid(path + " must be finite");
  return v;
}

std::int64_t integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) schema(path + " must be an integer");
  if (j.is_number_unsigned() &&
      j.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    invalid(path + " is out of range");
  }
  return j.get<std::int64_t>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) schema(path + " must be a string");
  return j.get<std::string>();
}

std::vector<std::string> string_list(const json& j, const std::string& path) {
  if (!j.is_array()) schema(path + " must be an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(text(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void read_grid(const json& j, GridConfig& g) {
  check_keys(j, {"u_min", "u_max", "n_points", "boundary_mode", "pad"}, "grid");
  if (const auto* f = optional_field(j, "u_min")) g.u_min = number(*f, "grid.u_min");
  if (const auto* f = optional_field(j, "u_max")) g.u_max = number(*f, "grid.u_max");
  if (const auto* f = optional_field(j, "n_points")) {
    g.n_points = static_cast<int>(std::clamp<std::int64_t>(integer(*f, "grid.n_points"), -1, 1 << 24));
  }
  if (const auto* f = optional_field(j, "boundary_mode")) {
    const auto mode = text(*f, "grid.boundary_mode");
    if (mode == "periodic") {
      g.mode = BoundaryMode::periodic;
    } else if (mode == "padded") {
      g.mode = BoundaryMode::padded;
    } else {
      invalid("grid.boundary_mode must be \"periodic\" or \"padded\"");
    }
  }
  if (const auto* f = optional_field(j, "pad")) {
    g.pad = number(*f, "grid.pad");
    if (g.pad < 0.0) invalid("grid.pad must be non-negative");
  }
  if (!(g.u_max > g.u_min)) invalid("grid.u_max must exceed grid.u_min");
  if (g.n_points < 16) invalid("grid.n_points must be at least 16");
}

void check_expression(const std::string& source, const std::string& path) {
  try {
    parse_expression(source);
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.what());
  }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, value >>= 4) out[static_cast<std::size_t>(i)] = digits[value & 0xF];
  return out;
}

ModelConfig parse_config(std::string_view source) {
  json root;
  try {
    root = json::parse(source.begin(), source.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, e.what());
  }
  check_keys(root, {"states", "Q", "velocity", "phi", "grid", "time", "layer", "expansion", "sweep",
                    "oracle", "mc"},
             "");
  ModelConfig c;
  c.states = string_list(required_field(root, "states"), "states");
  const auto n = c.states.size();
  if (n < 2) invalid("states must list at least 2 states");

  const json& q = required_field(root, "Q");
  if (!q.is_array() || q.size() != n) schema("Q must have one row per state");
  c.q = Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row = "Q[" + std::to_string(i) + "]";
    if (!q[i].is_array() || q[i].size() != n) schema(row + " must have one entry per state");
    for (std::size_t k = 0; k < n; ++k) {
      c.q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          number(q[i][k], row + "[" + std::to_string(k) + "]");
    }
  }
  try {
    validate_generator(c.q);
  } catch (const Error& e) {
    invalid(e.what());
  }

  c.velocity = string_list(required_field(root, "velocity"), "velocity");
  if (c.velocity.size() != n) schema("velocity must have one expression per state");
  for (std::size_t i = 0; i < n; ++i) {
    check_expression(c.velocity[i], "velocity[" + std::to_string(i) + "]");
  }
  c.phi = text(required_field(root, "phi"), "phi");
  check_expression(c.phi, "phi");

  if (const auto* g = optional_field(root, "grid")) read_grid(*g, c.grid);
  if (const auto* t = optional_field(root, "time")) {
    check_keys(*t, {"t_end", "n_steps"}, "time");
    if (const auto* f = optional_field(*t, "t_end")) c.t_end = number(*f, "time.t_end");
    if (const auto* f = optional_field(*t, "n_steps")) {
      c.n_steps = static_cast<int>(std::clamp<std::int64_t>(integer(*f, "time.n_steps"), -1, 1 << 24));
    }
  }
  if (!(c.t_end > 0.0)) invalid("time.t_end must be positive");
  if (c.n_steps < 8) invalid("time.n_steps must be at least 8");
  if (const auto* l = optional_field(root, "layer")) {
    check_keys(*l, {"n_tau", "tau_max_factor"}, "layer");
    if (const auto* f = optional_field(*l, "n_tau")) {
      c.n_tau = static_cast<int>(std::clamp<std::int64_t>(integer(*f, "layer.n_tau"), -1, 1 << 24));
    }
    if (const auto* f = optional_field(*l, "tau_max_factor")) {
      c.tau_max_factor = number(*f, "layer.tau_max_factor");
    }
  }
  if (c.n_tau < 8) invalid("layer.n_tau must be at least 8");
  if (!(c.tau_max_factor > 0.0)) invalid("layer.tau_max_factor must be positive");
  if (const auto* e = optional_field(root, "expansion")) {
    check_keys(*e, {"order"}, "expansion");
    if (const auto* f = optional_field(*e, "order")) {
      c.order = static_cast<int>(std::clamp<std::int64_t>(integer(*f, "expansion.order"), -1, 100));
    }
  }
  if (c.order < 0 || c.order > 8) invalid("expansion.order must lie in 0..8");
  if (const auto* s = optional_field(root, "sweep")) {
    check_keys(*s, {"epsilons", "t"}, "sweep");
    if (const auto* f = optional_field(*s, "epsilons")) {
      if (!f->is_array()) schema("sweep.epsilons must be an array");
      c.sweep_epsilons.clear();
      for (std::size_t i = 0; i < f->size(); ++i) {
        c.sweep_epsilons.push_back(number((*f)[i], "sweep.epsilons[" + std::to_string(i) + "]"));
      }
    }
    if (const auto* f = optional_field(*s, "t")) c.sweep_t = number(*f, "sweep.t");
  }
  for (double e : c.sweep_epsilons) {
    if (!(e > 0.0)) invalid("sweep.epsilons must be positive");
  }
  if (!(c.sweep_t > 0.0 && c.sweep_t <= c.t_end)) invalid("sweep.t must lie in (0, time.t_end]");
  if (const auto* o = optional_field(root, "oracle")) {
    check_keys(*o, {"max_refine_level"}, "oracle");
    if (const auto* f = optional_field(*o, "max_refine_level")) {
      c.max_refine_level =
          static_cast<int>(std::clamp<std::int64_t>(integer(*f, "oracle.max_refine_level"), -1, 100));
    }
  }
  if (c.max_refine_level < 1 || c.max_refine_level > 10) {
    invalid("oracle.max_refine_level must lie in 1..10");
  }
  if (const auto* m = optional_field(root, "mc")) {
    check_keys(*m, {"n_paths", "seed"}, "mc");
    if (const auto* f = optional_field(*m, "n_paths")) c.mc_paths = integer(*f, "mc.n_paths");
    if (const auto* f = optional_field(*m, "seed")) {
      if (!f->is_number_unsigned()) schema("mc.seed must be a non-negative integer");
      c.mc_seed = f->get<std::uint64_t>();
    }
  }
  if (c.mc_paths < 100) invalid("mc.n_paths must be at least 100");
  c.hash = hex64(fnv1a64(root.dump()));
  return c;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

Model build_model(const ModelConfig& config) {
  const auto generator = validate_generator(config.q);
  VelocityField velocity;
  for (const auto& v : config.velocity) velocity.per_state.push_back(to_function(parse_expression(v)));
  const auto phi = to_function(parse_expression(config.phi));
  const auto& g = config.grid;
  SpatialGrid grid = SpatialGrid::periodic(g.u_min, g.u_max, g.n_points);
  if (g.mode == BoundaryMode::padded) {
    double pad = g.pad;
    if (pad < 0.0) {
      const auto core = SpatialGrid::padded(g.u_min, g.u_max, g.n_points, 0.0);
      double vmax = 0.0;
      for (Eigen::Index x = 0; x < velocity.states(); ++x) {
        for (int i = 0; i < core.size(); ++i) vmax = std::max(vmax, std::abs(velocity(x, core.node(i))));
      }
      pad = config.t_end * vmax;
    }
    grid = SpatialGrid::padded(g.u_min, g.u_max, g.n_points, pad);
  }
  Model model{analyze(generator), std::move(velocity), phi, grid};
  for (Eigen::Index x = 0; x < model.states(); ++x) {
    for (int i = 0; i < grid.size(); ++i) {
      if (!std::isfinite(model.velocity(x, grid.node(i)))) {
        fail(ErrorCode::NonFiniteValue, "velocity[" + std::to_string(x) + "] is not finite at u = " +
                                            std::to_string(grid.node(i)));
      }
    }
  }
  for (int i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(phi(grid.node(i)))) {
      fail(ErrorCode::NonFiniteValue, "phi is not finite at u = " + std::to_string(grid.node(i)));
    }
  }
  return model;
}

ExpansionSettings expansion_settings(const ModelConfig& config) {
  ExpansionSettings s;
  s.order = config.order;
  s.t_end = config.t_end;
  s.n_steps = config.n_steps;
  s.n_tau = config.n_tau;
  s.tau_max_factor = config.tau_max_factor;
  return s;
}

}  // namespace evomax
