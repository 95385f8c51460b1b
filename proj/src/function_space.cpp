// SPDX-License-Identifier: Apache-2.0
#include "evomax/function_space.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include "evomax/error.hpp"

namespace evomax {
namespace {

constexpr int kMinGridPoints = 16;
constexpr int kMinTimeSteps = 8;
constexpr double kFlowTolerance = 1e-10;

// Fourth-order first-derivative stencils (numerators over 12 h).
template <class In, class Out>
void differentiate_line(int n, double h, bool periodic, In in, Out out) {
  const double scale = 1.0 / (12.0 * h);
  if (periodic) {
    auto at = [&](int i) { return in(((i % n) + n) % n); };
    for (int i = 0; i < n; ++i) {
      out(i, (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) * scale);
    }
    return;
  }
  for (int i = 2; i <= n - 3; ++i) {
    out(i, (in(i - 2) - 8.0 * in(i - 1) + 8.0 * in(i + 1) - in(i + 2)) * scale);
  }
  out(0, (-25.0 * in(0) + 48.0 * in(1) - 36.0 * in(2) + 16.0 * in(3) - 3.0 * in(4)) * scale);
  out(1, (-3.0 * in(0) - 10.0 * in(1) + 18.0 * in(2) - 6.0 * in(3) + in(4)) * scale);
  out(n - 2, (-in(n - 5) + 6.0 * in(n - 4) - 18.0 * in(n - 3) + 10.0 * in(n - 2) +
              3.0 * in(n - 1)) * scale);
  out(n - 1, (3.0 * in(n - 5) - 16.0 * in(n - 4) + 36.0 * in(n - 3) - 48.0 * in(n - 2) +
              25.0 * in(n - 1)) * scale);
}

std::vector<Matrix> first_time_derivative(const std::vector<Matrix>& f, double dt) {
  const int n = static_cast<int>(f.size());
  std::vector<Matrix> out(f.size());
  differentiate_line(
      n, dt, false, [&](int i) -> const Matrix& { return f[static_cast<std::size_t>(i)]; },
      [&](int i, Matrix value) { out[static_cast<std::size_t>(i)] = std::move(value); });
  return out;
}

}  // namespace

SpatialGrid::SpatialGrid(BoundaryMode mode, double u_min, double u_max, int core_points,
                         int pad_nodes)
    : mode_(mode), u_min_(u_min), u_max_(u_max), core_points_(core_points), pad_nodes_(pad_nodes) {
  if (!(u_max > u_min)) fail(ErrorCode::InvalidArgument, "grid requires u_max > u_min");
  if (core_points < kMinGridPoints) {
    fail(ErrorCode::InvalidArgument, "grid requires at least 16 points");
  }
  h_ = mode == BoundaryMode::periodic ? (u_max - u_min) / core_points
                                      : (u_max - u_min) / (core_points - 1);
}

SpatialGrid SpatialGrid::periodic(double u_min, double u_max, int n_points) {
  return SpatialGrid(BoundaryMode::periodic, u_min, u_max, n_points, 0);
}

SpatialGrid SpatialGrid::padded(double u_min, double u_max, int n_points, double pad) {
  if (!(pad >= 0.0)) fail(ErrorCode::InvalidArgument, "pad must be non-negative");
  SpatialGrid probe(BoundaryMode::padded, u_min, u_max, n_points, 0);
  // Two extra nodes keep the one-sided derivative stencils off the pad edge.
  const int nodes = static_cast<int>(std::ceil(pad / probe.h_ - 1e-9)) + 2;
  return SpatialGrid(BoundaryMode::padded, u_min, u_max, n_points, nodes);
}

Eigen::VectorXd SpatialGrid::nodes() const {
  Eigen::VectorXd u(size());
  for (int i = 0; i < size(); ++i) u(i) = node(i);
  return u;
}

SpatialGrid SpatialGrid::refined(int factor) const {
  if (factor < 1) fail(ErrorCode::InvalidArgument, "refinement factor must be >= 1");
  if (is_periodic()) return periodic(u_min_, u_max_, core_points_ * factor);
  return SpatialGrid(mode_, u_min_, u_max_, (core_points_ - 1) * factor + 1, pad_nodes_ * factor);
}

bool SpatialGrid::nested_in(const SpatialGrid& fine, int* factor) const {
  if (fine.mode_ != mode_ || fine.u_min_ != u_min_ || fine.u_max_ != u_max_) return false;
  const double ratio = h_ / fine.h_;
  const int k = static_cast<int>(std::lround(ratio));
  if (k < 1 || std::abs(ratio - k) > 1e-9 * k) return false;
  if (!(refined(k) == fine)) return false;
  if (factor) *factor = k;
  return true;
}

StateField StateField::zero(const SpatialGrid& grid, Eigen::Index states) {
  return {grid, Matrix::Zero(states, grid.size())};
}

TimeGrid::TimeGrid(double t_end_, int n_steps_) : t_end(t_end_), n_steps(n_steps_) {
  if (!(t_end > 0.0)) fail(ErrorCode::InvalidArgument, "time grid requires t_end > 0");
  if (n_steps < kMinTimeSteps) fail(ErrorCode::InvalidArgument, "time grid requires n_steps >= 8");
}

CubicStencil cubic_stencil(double x, int n) {
  int first = static_cast<int>(std::floor(x)) - 1;
  first = std::clamp(first, 0, n - 4);
  const double s = x - first;
  CubicStencil st;
  st.index = {first, first + 1, first + 2, first + 3};
  st.weight = {-(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0, s * (s - 2.0) * (s - 3.0) / 2.0,
               -s * (s - 1.0) * (s - 3.0) / 2.0, s * (s - 1.0) * (s - 2.0) / 6.0};
  return st;
}

double interpolate(const Eigen::VectorXd& values, const SpatialGrid& grid, double u) {
  const int n = grid.size();
  if (grid.is_periodic()) {
    const double x = (u - grid.u_min()) / grid.spacing();
    const double base = std::floor(x);
    const double s = x - base + 1.0;
    const long long i0 = static_cast<long long>(base) - 1;
    const double w[4] = {-(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0, s * (s - 2.0) * (s - 3.0) / 2.0,
                         -s * (s - 1.0) * (s - 3.0) / 2.0, s * (s - 1.0) * (s - 2.0) / 6.0};
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      const long long idx = ((i0 + k) % n + n) % n;
      sum += w[k] * values(static_cast<Eigen::Index>(idx));
    }
    return sum;
  }
  const double slack = 1e-12 * grid.spacing();
  if (u < grid.lower() - slack || u > grid.upper() + slack) {
    fail(ErrorCode::DomainEscape, "position " + std::to_string(u) + " is outside the padded domain");
  }
  const auto st = cubic_stencil((u - grid.lower()) / grid.spacing(), n);
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) sum += st.weight[k] * values(st.index[k]);
  return sum;
}

GridFunction sample(const ScalarFunction& f, const SpatialGrid& grid) {
  Eigen::VectorXd v(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    v(i) = f(grid.node(i));
    if (!std::isfinite(v(i))) {
      fail(ErrorCode::NonFiniteValue, "non-finite value at u = " + std::to_string(grid.node(i)));
    }
  }
  return {grid, std::move(v)};
}

Eigen::VectorXd differentiate(const Eigen::VectorXd& values, const SpatialGrid& grid) {
  Eigen::VectorXd out(values.size());
  differentiate_line(
      static_cast<int>(values.size()), grid.spacing(), grid.is_periodic(),
      [&](int i) { return values(i); }, [&](int i, double d) { out(i) = d; });
  return out;
}

GridFunction spatial_derivative(const GridFunction& f) {
  return {f.grid, differentiate(f.values, f.grid)};
}

StateField spatial_derivative(const StateField& f) {
  StateField out{f.grid, Matrix(f.values.rows(), f.values.cols())};
  for (Eigen::Index r = 0; r < f.values.rows(); ++r) {
    differentiate_line(
        static_cast<int>(f.values.cols()), f.grid.spacing(), f.grid.is_periodic(),
        [&](int i) { return f.values(r, i); }, [&](int i, double d) { out.values(r, i) = d; });
  }
  return out;
}

StateField sample_velocity(const VelocityField& v, const SpatialGrid& grid) {
  StateField out = StateField::zero(grid, v.states());
  for (Eigen::Index x = 0; x < v.states(); ++x) {
    for (int i = 0; i < grid.size(); ++i) {
      const double value = v(x, grid.node(i));
      if (!std::isfinite(value)) {
        fail(ErrorCode::NonFiniteValue, "velocity of state " + std::to_string(x) +
                                            " is not finite at u = " + std::to_string(grid.node(i)));
      }
      out.values(x, i) = value;
    }
  }
  return out;
}

StateField apply_V(const StateField& velocity_samples, const StateField& f) {
  if (velocity_samples.values.rows() != f.values.rows() || !(velocity_samples.grid == f.grid)) {
    fail(ErrorCode::GridMismatch, "apply_V: velocity and field disagree on grid or state count");
  }
  StateField d = spatial_derivative(f);
  d.values.array() *= velocity_samples.values.array();
  return d;
}

StateField apply_V(const VelocityField& v, const StateField& f) {
  return apply_V(sample_velocity(v, f.grid), f);
}

GridFunction average(const ErgodicProjector& proj, const StateField& f) {
  if (proj.weights.size() != f.values.rows()) {
    fail(ErrorCode::GridMismatch, "projector and field disagree on state count");
  }
  return {f.grid, f.values.transpose() * proj.weights};
}

StateField lift(const GridFunction& c, Eigen::Index states) {
  return {c.grid, Eigen::VectorXd::Ones(states) * c.values.transpose()};
}

StateField project(const ErgodicProjector& proj, const StateField& f) {
  return lift(average(proj, f), f.values.rows());
}

StateField apply_matrix(const Matrix& m, const StateField& f) {
  if (m.cols() != f.values.rows()) {
    fail(ErrorCode::GridMismatch, "matrix and field disagree on state count");
  }
  return {f.grid, m * f.values};
}

ScalarFunction average_velocity(const VelocityField& v, const StationaryDistribution& pi) {
  return [v, w = pi.weights](double u) {
    double sum = 0.0;
    for (Eigen::Index x = 0; x < w.size(); ++x) sum += w(x) * v(x, u);
    return sum;
  };
}

double flow_map(const ScalarFunction& vhat, double u0, double t, std::optional<Domain> domain) {
  namespace odeint = boost::numeric::odeint;
  if (t < 0.0) fail(ErrorCode::NegativeTime, "flow_map requires t >= 0");
  auto check = [&](double u) {
    if (!std::isfinite(u)) fail(ErrorCode::NonFiniteValue, "flow_map: trajectory is not finite");
    if (domain && (u < domain->lower || u > domain->upper)) {
      fail(ErrorCode::DomainEscape, "trajectory from u = " + std::to_string(u0) +
                                        " leaves [" + std::to_string(domain->lower) + ", " +
                                        std::to_string(domain->upper) + "]");
    }
  };
  check(u0);
  const double v0 = vhat(u0);
  if (!std::isfinite(v0)) fail(ErrorCode::NonFiniteValue, "flow_map: velocity is not finite");
  // An equilibrium of an autonomous field never moves.
  if (t == 0.0 || v0 == 0.0) return u0;

  using State = std::array<double, 1>;
  State state{u0};
  auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(kFlowTolerance,
                                                                            kFlowTolerance);
  odeint::integrate_adaptive(
      stepper, [&](const State& s, State& ds, double) { ds[0] = vhat(s[0]); }, state, 0.0, t,
      std::min(t, 1e-2), [&](const State& s, double) { check(s[0]); });
  return state[0];
}

std::vector<Matrix> time_derivative(const std::vector<Matrix>& series, double dt, int order) {
  if (order < 1) fail(ErrorCode::InvalidArgument, "derivative order must be >= 1");
  if (static_cast<int>(series.size()) < std::max(5, order + 4)) {
    fail(ErrorCode::TooFewSamples, "time_derivative of order " + std::to_string(order) +
                                       " needs at least " + std::to_string(order + 4) +
                                       " samples, got " + std::to_string(series.size()));
  }
  std::vector<Matrix> out = first_time_derivative(series, dt);
  for (int m = 1; m < order; ++m) out = first_time_derivative(out, dt);
  return out;
}

std::vector<StateField> time_derivative(const std::vector<StateField>& series, double dt,
                                        int order) {
  std::vector<Matrix> raw;
  raw.reserve(series.size());
  for (const auto& f : series) raw.push_back(f.values);
  auto d = time_derivative(raw, dt, order);
  std::vector<StateField> out;
  out.reserve(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) out.push_back({series[j].grid, std::move(d[j])});
  return out;
}

std::vector<GridFunction> time_derivative(const std::vector<GridFunction>& series, double dt,
                                          int order) {
  std::vector<Matrix> raw;
  raw.reserve(series.size());
  for (const auto& f : series) raw.emplace_back(f.values);
  auto d = time_derivative(raw, dt, order);
  std::vector<GridFunction> out;
  out.reserve(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) {
    out.push_back({series[j].grid, Eigen::VectorXd(d[j].col(0))});
  }
  return out;
}

double time_derivative_error_estimate(const std::vector<Matrix>& series, double dt, int order) {
  const auto fine = time_derivative(series, dt, order);
  std::vector<Matrix> coarse_series;
  for (std::size_t j = 0; j < series.size(); j += 2) coarse_series.push_back(series[j]);
  const auto coarse = time_derivative(coarse_series, 2.0 * dt, order);
  double worst = 0.0;
  for (std::size_t j = 0; j < coarse.size(); ++j) {
    worst = std::max(worst, max_abs(fine[2 * j] - coarse[j]));
  }
  return worst / 15.0;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace evomax
