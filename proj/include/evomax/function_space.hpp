// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "evomax/markov_core.hpp"

namespace evomax {

using ScalarFunction = std::function<double(double)>;

enum class BoundaryMode { periodic, padded };

/// Uniform 1-D grid.
///
/// Periodic grids hold n nodes on [u_min, u_max) with spacing (u_max-u_min)/n.
/// Padded grids hold n core nodes on [u_min, u_max] with spacing
/// (u_max-u_min)/(n-1), extended on both sides by enough nodes to cover `pad`.
class SpatialGrid {
 public:
  static SpatialGrid periodic(double u_min, double u_max, int n_points);
  static SpatialGrid padded(double u_min, double u_max, int n_points, double pad);

  BoundaryMode mode() const noexcept { return mode_; }
  bool is_periodic() const noexcept { return mode_ == BoundaryMode::periodic; }
  int size() const noexcept { return core_points_ + 2 * pad_nodes_; }
  int core_points() const noexcept { return core_points_; }
  int core_begin() const noexcept { return pad_nodes_; }
  int core_end() const noexcept { return pad_nodes_ + core_points_; }
  double spacing() const noexcept { return h_; }
  double u_min() const noexcept { return u_min_; }
  double u_max() const noexcept { return u_max_; }
  double period() const noexcept { return u_max_ - u_min_; }
  /// Leftmost and rightmost node positions (equal to the core for periodic grids).
  double lower() const noexcept { return node(0); }
  double upper() const noexcept { return node(size() - 1); }
  double node(int i) const noexcept { return u_min_ + (i - pad_nodes_) * h_; }
  Eigen::VectorXd nodes() const;

  /// Same domain with `factor` times finer spacing; node i of this grid is
  /// node i*factor of the refined grid.
  SpatialGrid refined(int factor) const;
  /// True when `fine` is refined(k) of this grid for some k >= 1.
  bool nested_in(const SpatialGrid& fine, int* factor = nullptr) const;

  bool operator==(const SpatialGrid& other) const = default;

 private:
  SpatialGrid(BoundaryMode mode, double u_min, double u_max, int core_points, int pad_nodes);

  BoundaryMode mode_;
  double u_min_;
  double u_max_;
  int core_points_;
  int pad_nodes_;
  double h_;
};

struct GridFunction {
  SpatialGrid grid;
  Eigen::VectorXd values;
};

/// f(u, x): one row per Markov state, one column per grid node.
struct StateField {
  SpatialGrid grid;
  Eigen::MatrixXd values;

  Eigen::Index states() const noexcept { return values.rows(); }
  static StateField zero(const SpatialGrid& grid, Eigen::Index states);
};

/// Per-state velocity v(u; x).
struct VelocityField {
  std::vector<ScalarFunction> per_state;

  Eigen::Index states() const noexcept { return static_cast<Eigen::Index>(per_state.size()); }
  double operator()(Eigen::Index state, double u) const {
    return per_state[static_cast<std::size_t>(state)](u);
  }
};

struct TimeGrid {
  double t_end;
  int n_steps;

  TimeGrid(double t_end, int n_steps);
  double dt() const noexcept { return t_end / n_steps; }
  double time(int j) const noexcept { return j * dt(); }
  int size() const noexcept { return n_steps + 1; }
};

/// Four-point Lagrange stencil on a uniform index line.
struct CubicStencil {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

/// Stencil for interpolating at fractional node position `x` on a non-periodic
/// line of `n` nodes (n >= 4); the stencil is shifted inward near the ends.
CubicStencil cubic_stencil(double x, int n);

/// Cubic interpolation of grid data at an arbitrary position. Periodic grids
/// wrap; padded grids throw DomainEscape outside [lower, upper].
double interpolate(const Eigen::VectorXd& values, const SpatialGrid& grid, double u);

GridFunction sample(const ScalarFunction& f, const SpatialGrid& grid);

/// Fourth-order finite-difference d/du (periodic wrap or one-sided edges).
Eigen::VectorXd differentiate(const Eigen::VectorXd& values, const SpatialGrid& grid);
GridFunction spatial_derivative(const GridFunction& f);
StateField spatial_derivative(const StateField& f);

/// v(u_i; x) at every node, as a StateField.
StateField sample_velocity(const VelocityField& v, const SpatialGrid& grid);

/// (V f)(u, x) = v(u; x) d/du f(u, x).
StateField apply_V(const StateField& velocity_samples, const StateField& f);
StateField apply_V(const VelocityField& v, const StateField& f);

/// (Pi f)(u, x) = sum_y pi_y f(u, y), identical in every state.
StateField project(const ErgodicProjector& proj, const StateField& f);
/// The pi-average itself, as a scalar grid function.
GridFunction average(const ErgodicProjector& proj, const StateField& f);
/// c(u) (x) 1.
StateField lift(const GridFunction& c, Eigen::Index states);
/// R f applied state-wise at each node, for any n x n matrix R.
StateField apply_matrix(const Matrix& m, const StateField& f);

ScalarFunction average_velocity(const VelocityField& v, const StationaryDistribution& pi);

/// Closed interval a trajectory must stay inside.
struct Domain {
  double lower;
  double upper;
};

/// Solves du/dt = vhat(u), u(0) = u0, up to time t with an adaptive
/// Dormand-Prince 5(4) integrator (local tolerance 1e-10). Throws DomainEscape
/// if the trajectory leaves `domain`.
double flow_map(const ScalarFunction& vhat, double u0, double t,
                std::optional<Domain> domain = std::nullopt);

/// m-th time derivative of a uniformly sampled series by repeated fourth-order
/// differences (one-sided at the ends). Needs at least m + 4 samples.
std::vector<Eigen::MatrixXd> time_derivative(const std::vector<Eigen::MatrixXd>& series,
                                             double dt, int order);
std::vector<StateField> time_derivative(const std::vector<StateField>& series, double dt,
                                        int order);
std::vector<GridFunction> time_derivative(const std::vector<GridFunction>& series, double dt,
                                          int order);

/// Richardson self-check of time_derivative: compares the derivative on the
/// full series with the one on every other sample and returns the estimated
/// max error of the fine result, |D_dt - D_2dt| / 15.
double time_derivative_error_estimate(const std::vector<Eigen::MatrixXd>& series, double dt,
                                      int order);

double max_abs(const Eigen::MatrixXd& m);

}  // namespace evomax
