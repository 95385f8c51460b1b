// SPDX-License-Identifier: Apache-2.0
#include "evomax/validation.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "evomax/error.hpp"

namespace evomax {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double max_over(const Matrix& m, const std::vector<int>& nodes) {
  double worst = 0.0;
  for (int i : nodes) worst = std::max(worst, m.col(i).cwiseAbs().maxCoeff());
  return worst;
}

double resolved_margin(const SweepSettings& settings, const Model& model) {
  if (settings.margin >= 0.0) return settings.margin;
  return model.grid.is_periodic() ? 0.0 : settings.t * model.max_speed();
}

double level_dt(const Model& model, double epsilon, int level) {
  const double vmax = model.max_speed();
  double dt0 = epsilon / 8.0;
  if (vmax > 0.0) dt0 = std::min(dt0, SolverSettings{}.cfl * model.grid.spacing() / vmax);
  return std::ldexp(dt0, -level);
}

DirectSolution solve_level(const Model& model, double epsilon, const std::vector<double>& times,
                           int level) {
  SolverSettings s;
  s.refine = 1 << level;
  s.dt = level_dt(model, epsilon, level);
  return direct_solve(model, epsilon, times, s);
}

double level_difference(const DirectSolution& coarse, const DirectSolution& fine) {
  double worst = 0.0;
  const int begin = coarse.grid.core_begin();
  const int count = coarse.grid.core_points();
  for (std::size_t k = 0; k < coarse.snapshots.size(); ++k) {
    const auto r = restrict_to(fine.snapshots[k], coarse.grid);
    worst = std::max(worst, max_abs(r.values.middleCols(begin, count) -
                                    coarse.snapshots[k].values.middleCols(begin, count)));
  }
  return worst;
}

SpatialGrid coarsened(const SpatialGrid& grid, int max_points) {
  if (grid.size() <= max_points) return grid;
  if (grid.is_periodic()) return SpatialGrid::periodic(grid.u_min(), grid.u_max(), max_points);
  const double pad = grid.core_begin() * grid.spacing();
  int core = max_points;
  while (core > 8) {
    const auto g = SpatialGrid::padded(grid.u_min(), grid.u_max(), core, pad);
    if (g.size() <= max_points) return g;
    core -= 8;
  }
  return SpatialGrid::padded(grid.u_min(), grid.u_max(), core, pad);
}

// Fourth-order derivative of f at x from samples f(x + k delta).
template <class F>
Matrix fd_derivative(F&& f, double x, double delta, double lo, double hi) {
  if (x - 2.0 * delta >= lo && x + 2.0 * delta <= hi) {
    return (f(x - 2.0 * delta) - 8.0 * f(x - delta) + 8.0 * f(x + delta) - f(x + 2.0 * delta)) /
           (12.0 * delta);
  }
  const double s = x + 4.0 * delta <= hi ? 1.0 : -1.0;
  const double d = s * delta;
  return (-25.0 * f(x) + 48.0 * f(x + d) - 36.0 * f(x + 2.0 * d) + 16.0 * f(x + 3.0 * d) -
          3.0 * f(x + 4.0 * d)) /
         (12.0 * d);
}

}  // namespace

std::vector<int> evaluation_nodes(const SpatialGrid& grid, double margin) {
  std::vector<int> nodes;
  for (int i = grid.core_begin(); i < grid.core_end(); ++i) {
    const double u = grid.node(i);
    if (grid.is_periodic() || (u >= grid.u_min() + margin - 1e-12 && u <= grid.u_max() - margin + 1e-12)) {
      nodes.push_back(i);
    }
  }
  if (nodes.empty()) fail(ErrorCode::InvalidArgument, "margin leaves no evaluation nodes");
  return nodes;
}

double remainder(const ExpansionResult& expansion, const DirectSolution& solution,
                 std::size_t index, int order, double epsilon, double margin,
                 LayerTerms layer_terms) {
  if (index >= solution.snapshots.size()) fail(ErrorCode::InvalidArgument, "snapshot index");
  if (!expansion.grid.nested_in(solution.grid)) {
    fail(ErrorCode::GridMismatch, "solver grid does not refine the expansion grid");
  }
  const double t = solution.times[index];
  const auto phi_n = evaluate_expansion(expansion, order, epsilon, t, layer_terms);
  const auto exact = restrict_to(solution.snapshots[index], expansion.grid);
  return max_over(exact.values - phi_n.values, evaluation_nodes(expansion.grid, margin));
}

SlopeFit convergence_slope(const std::vector<ErrorSample>& samples, double confidence) {
  const auto n = static_cast<int>(samples.size());
  if (n < 3) fail(ErrorCode::DegenerateFit, "slope fit needs at least 3 points");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    fail(ErrorCode::InvalidArgument, "confidence must lie in (0, 1)");
  }
  std::vector<double> x, y;
  for (const auto& s : samples) {
    if (!(s.epsilon > 0.0) || !(s.error > 0.0) || !std::isfinite(s.error)) {
      fail(ErrorCode::DegenerateFit, "slope fit needs positive finite data");
    }
    if (s.error <= 2.0 * s.noise_floor) {
      fail(ErrorCode::DegenerateFit, "error " + std::to_string(s.error) +
                                         " is at the solver noise floor at eps = " +
                                         std::to_string(s.epsilon));
    }
    x.push_back(std::log(s.epsilon));
    y.push_back(std::log(s.error));
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 1e-24)) fail(ErrorCode::DegenerateFit, "epsilon values are not distinct");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ssr = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    ssr += r * r;
  }
  const double se = std::sqrt(ssr / (n - 2) / sxx);
  const boost::math::students_t dist(n - 2);
  const double q = boost::math::quantile(dist, 0.5 + 0.5 * confidence);
  return {slope, intercept, slope - q * se, slope + q * se, std::sqrt(ssr / n), n};
}

bool RemainderReport::certified(std::size_t order_index) const {
  const auto& row = certificates.at(order_index);
  return std::all_of(row.begin(), row.end(), [](const Certificate& c) { return c.passed; });
}

double leading_neglected(const ExpansionResult& expansion, int order, double epsilon, double t,
                         double margin) {
  if (order + 1 > expansion.order) return kNaN;
  auto next = regular_at(expansion, order + 1, t);
  next.values += layer_at(expansion, order + 1, t / epsilon).values;
  return max_over(next.values, evaluation_nodes(expansion.grid, margin));
}

SweepPoint resolve_solver(const Model& model, double epsilon, double t, double threshold,
                          int start_level, int max_level) {
  if (start_level < 0 || max_level <= start_level) {
    fail(ErrorCode::InvalidArgument, "solver levels need 0 <= start < max");
  }
  const std::vector<double> times{t};
  DirectSolution coarse = solve_level(model, epsilon, times, start_level);
  for (int level = start_level + 1;; ++level) {
    DirectSolution fine = solve_level(model, epsilon, times, level);
    const double estimate = level_difference(coarse, fine) / 3.0;
    fine.error_estimate = estimate;
    if (estimate <= threshold || level == max_level) {
      return {epsilon, level, estimate, std::move(fine)};
    }
    coarse = std::move(fine);
  }
}

RemainderReport run_sweep(const Model& model, const ExpansionResult& expansion,
                          const SweepSettings& settings) {
  if (settings.epsilons.empty() || settings.orders.empty()) {
    fail(ErrorCode::InvalidArgument, "sweep needs epsilons and orders");
  }
  for (int n : settings.orders) {
    if (n < 0 || n > expansion.order) {
      fail(ErrorCode::OrderUnavailable, "order " + std::to_string(n) + " is not computed");
    }
  }
  RemainderReport report;
  report.settings = settings;
  std::sort(report.settings.epsilons.begin(), report.settings.epsilons.end(), std::greater<>());
  const auto& eps_list = report.settings.epsilons;
  const double margin = resolved_margin(settings, model);
  const double t = settings.t;

  const std::size_t n_orders = settings.orders.size();
  std::vector<std::vector<double>> thresholds(n_orders);
  for (double eps : eps_list) {
    double strictest = std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < n_orders; ++o) {
      const int n = settings.orders[o];
      const double next = leading_neglected(expansion, n, eps, t, margin);
      const double threshold = settings.safety * std::pow(eps, n + 1) * next;
      thresholds[o].push_back(threshold);
      if (std::isfinite(threshold)) strictest = std::min(strictest, threshold);
    }
    if (!std::isfinite(strictest)) strictest = 0.0;
    report.points.push_back(
        resolve_solver(model, eps, t, strictest, settings.start_level, settings.max_level));
  }

  report.errors.resize(n_orders);
  report.certificates.resize(n_orders);
  for (std::size_t o = 0; o < n_orders; ++o) {
    const int n = settings.orders[o];
    std::vector<ErrorSample> samples;
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      const auto& p = report.points[e];
      const double err = remainder(expansion, p.solution, 0, n, p.epsilon, margin);
      report.errors[o].push_back(err);
      const double th = thresholds[o][e];
      report.certificates[o].push_back(
          {p.epsilon, n, p.solver_error, th, p.level, std::isfinite(th) && p.solver_error <= th});
      samples.push_back({p.epsilon, err, p.solver_error});
    }
    try {
      report.fits.emplace_back(convergence_slope(samples));
      report.fit_notes.emplace_back();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateFit) throw;
      report.fits.emplace_back(std::nullopt);
      report.fit_notes.emplace_back(e.what());
    }
  }
  return report;
}

double effective_gap(const Model& model, double epsilon, int max_points) {
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  const SpatialGrid grid = coarsened(model.grid, std::max(max_points, 16));
  const int n = grid.size();
  const auto s = model.states();
  Matrix d(n, n);
  Vector unit = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    unit[j] = 1.0;
    d.col(j) = differentiate(unit, grid);
    unit[j] = 0.0;
  }
  const Matrix& q = model.markov.generator.matrix();
  Matrix a = Matrix::Zero(s * n, s * n);
  for (Eigen::Index x = 0; x < s; ++x) {
    for (int i = 0; i < n; ++i) {
      a.block(x * n + i, x * n, 1, n) = model.velocity(x, grid.node(i)) * d.row(i);
    }
    for (Eigen::Index y = 0; y < s; ++y) {
      a.block(x * n, y * n, n, n).diagonal().array() += q(x, y) / epsilon;
    }
  }
  const Eigen::EigenSolver<Matrix> solver(a, false);
  if (solver.info() != Eigen::Success) fail(ErrorCode::SingularSystem, "eigen-solve failed");
  const double tol = 1e-9 * std::max(1.0, a.cwiseAbs().rowwise().sum().maxCoeff());
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& lambda : solver.eigenvalues()) {
    const double re = std::abs(lambda.real());
    if (re > tol) gap = std::min(gap, re);
  }
  if (!std::isfinite(gap)) fail(ErrorCode::SingularSystem, "no decaying mode found");
  return gap;
}

BoundDiagnostic gronwall_diagnostic(const Model& model, const ExpansionResult& expansion,
                                    double epsilon, const DirectSolution& solution,
                                    std::optional<double> L) {
  if (expansion.order < 2) fail(ErrorCode::OrderUnavailable, "bound needs order 2");
  if (solution.snapshots.size() < 2 || solution.times[0] != 0.0) {
    fail(ErrorCode::InvalidArgument, "bound needs snapshots at 0 and t");
  }
  const double t = solution.times.back();
  const double margin_u = model.grid.is_periodic() ? 0.0 : t * model.max_speed();
  const auto nodes = evaluation_nodes(expansion.grid, margin_u);
  const auto vs = sample_velocity(model.velocity, expansion.grid);
  const Matrix& q = model.markov.generator.matrix();

  BoundDiagnostic out{};
  out.epsilon = epsilon;
  out.t = t;
  out.lhs = remainder(expansion, solution, solution.snapshots.size() - 1, 2, epsilon, margin_u);
  out.initial_remainder = remainder(expansion, solution, 0, 2, epsilon, margin_u);

  auto theta_at = [&](double s) {
    const double x = std::min(s / expansion.time.dt(), static_cast<double>(expansion.time.n_steps));
    const auto& series = expansion.L[2];
    const auto st = cubic_stencil(x, static_cast<int>(series.size()));
    Matrix th = Matrix::Zero(expansion.states, expansion.grid.size());
    for (int k = 0; k < 4; ++k) th += st.weight[k] * series[st.index[k]].values;
    th -= apply_V(vs, layer_at(expansion, 2, s / epsilon)).values;
    return Matrix(epsilon * th);
  };
  out.theta = 0.0;
  for (int j = 0; j < expansion.time.size() && expansion.time.time(j) <= t + 1e-12; ++j) {
    // L u^2 is stored on the time nodes.
    Matrix th = expansion.L[2][static_cast<std::size_t>(j)].values;
    th -= apply_V(vs, layer_at(expansion, 2, expansion.time.time(j) / epsilon)).values;
    out.theta = std::max(out.theta, epsilon * max_over(th, nodes));
  }

  auto phi2 = [&](double s) { return evaluate_expansion(expansion, 2, epsilon, s).values; };
  const double delta = std::min(expansion.time.dt(), 0.25 * expansion.time.t_end);
  const Matrix dphi = fd_derivative(phi2, t, delta, 0.0, expansion.time.t_end);
  const StateField p2{expansion.grid, phi2(t)};
  const Matrix residual = dphi - (q / epsilon) * p2.values - apply_V(vs, p2).values;
  const Matrix theta_fd = residual / epsilon;
  out.theta_fd = max_over(theta_fd, nodes);
  out.theta_fd_error = max_over(theta_fd - theta_at(t), nodes);

  out.gamma_eff = effective_gap(model, epsilon);
  out.L = L.value_or(2.0 / out.gamma_eff);
  out.rhs = epsilon * out.initial_remainder * std::exp(epsilon * out.L * out.theta);
  const double solver_error = std::isfinite(solution.error_estimate) ? solution.error_estimate : 0.0;
  out.margin = 1e-12 + solver_error + epsilon * out.theta_fd_error + out.initial_remainder;
  out.violated = out.lhs > out.rhs + out.margin;
  return out;
}

}  // namespace evomax
