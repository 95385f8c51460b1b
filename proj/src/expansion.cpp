// SPDX-License-Identifier: Apache-2.0
#include "evomax/expansion.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include "evomax/error.hpp"
#include "evomax/quadrature.hpp"

namespace evomax {
namespace {

constexpr double kFlowTolerance = 1e-10;
constexpr double kProjectionTolerance = 1e-10;
constexpr double kTailTolerance = 1e-9;
constexpr double kLayerEndTolerance = 1e-7;

double scale_of(const Matrix& m) { return std::max(1.0, max_abs(m)); }

/// Positions X_s(u0) of the averaged flow at the requested increasing times.
std::vector<double> trajectory(const ScalarFunction& vhat, double u0,
                               const std::vector<double>& times) {
  namespace odeint = boost::numeric::odeint;
  std::vector<double> out(times.size(), u0);
  const double v0 = vhat(u0);
  if (!std::isfinite(v0)) fail(ErrorCode::NonFiniteValue, "averaged velocity is not finite");
  if (v0 == 0.0 || times.size() < 2) return out;
  using State = std::array<double, 1>;
  State state{u0};
  std::size_t next = 0;
  auto stepper = odeint::make_dense_output(kFlowTolerance, kFlowTolerance,
                                           odeint::runge_kutta_dopri5<State>());
  odeint::integrate_times(
      stepper, [&](const State& s, State& ds, double) { ds[0] = vhat(s[0]); }, state,
      times.begin(), times.end(), std::min(times[1] - times[0], 1e-2),
      [&](const State& s, double) {
        if (!std::isfinite(s[0])) fail(ErrorCode::NonFiniteValue, "characteristic is not finite");
        out[next++] = s[0];
      });
  return out;
}

/// Cubic interpolation stencil of grid data at position u (periodic wrap,
/// padded clamp).
CubicStencil spatial_stencil(const SpatialGrid& grid, double u) {
  const int n = grid.size();
  if (grid.is_periodic()) {
    const double x = (u - grid.u_min()) / grid.spacing();
    const double base = std::floor(x);
    const double s = x - base + 1.0;
    const long long i0 = static_cast<long long>(base) - 1;
    CubicStencil st;
    st.weight = {-(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0, s * (s - 2.0) * (s - 3.0) / 2.0,
                 -s * (s - 1.0) * (s - 3.0) / 2.0, s * (s - 1.0) * (s - 2.0) / 6.0};
    for (int k = 0; k < 4; ++k) st.index[k] = static_cast<int>(((i0 + k) % n + n) % n);
    return st;
  }
  const double clamped = std::clamp(u, grid.lower(), grid.upper());
  return cubic_stencil((clamped - grid.lower()) / grid.spacing(), n);
}

double apply_stencil(const CubicStencil& st, const Eigen::VectorXd& v) {
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) sum += st.weight[k] * v(st.index[k]);
  return sum;
}

template <class Series>
Matrix interpolate_series(const Series& values, double x) {
  const auto st = cubic_stencil(x, static_cast<int>(values.size()));
  Matrix out = st.weight[0] * values[st.index[0]].values;
  for (int k = 1; k < 4; ++k) out += st.weight[k] * values[st.index[k]].values;
  return out;
}

std::vector<Matrix> raw_values(const std::vector<StateField>& fields) {
  std::vector<Matrix> raw;
  raw.reserve(fields.size());
  for (const auto& f : fields) raw.push_back(f.values);
  return raw;
}

}  // namespace

BoundaryLayerGrid BoundaryLayerGrid::make(double gap, double factor, int intervals) {
  if (!(gap > 0.0)) fail(ErrorCode::InvalidArgument, "spectral gap must be positive");
  if (!(factor > 0.0)) fail(ErrorCode::InvalidArgument, "tau_max_factor must be positive");
  if (intervals < 8) fail(ErrorCode::InvalidArgument, "layer grid needs at least 8 intervals");
  return {factor / gap, intervals};
}

RegularTerm leading_term(const ScalarFunction& phi, const ScalarFunction& vhat,
                         const TimeGrid& time, const SpatialGrid& grid, Eigen::Index states) {
  std::vector<double> times(static_cast<std::size_t>(time.size()));
  for (int j = 0; j < time.size(); ++j) times[static_cast<std::size_t>(j)] = time.time(j);
  std::vector<Eigen::VectorXd> scalar(times.size(), Eigen::VectorXd(grid.size()));
  for (int i = 0; i < grid.size(); ++i) {
    const auto path = trajectory(vhat, grid.node(i), times);
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double value = phi(path[j]);
      if (!std::isfinite(value)) {
        fail(ErrorCode::NonFiniteValue, "test function is not finite at u = " +
                                            std::to_string(path[j]));
      }
      scalar[j](i) = value;
    }
  }
  RegularTerm term{0, {}};
  term.values.reserve(times.size());
  for (auto& s : scalar) term.values.push_back(lift(GridFunction{grid, std::move(s)}, states));
  return term;
}

std::vector<StateField> apply_L(const RegularTerm& term, const StateField& velocity_samples,
                                const ErgodicProjector& proj, double dt) {
  std::vector<StateField> out;
  out.reserve(term.values.size());
  if (term.k == 0) {
    const Eigen::RowVectorXd vhat = proj.weights.transpose() * velocity_samples.values;
    for (const auto& u : term.values) {
      const StateField du = spatial_derivative(u);
      Matrix dt_u = du.values.array().rowwise() * vhat.array();
      out.push_back({u.grid, dt_u - (du.values.array() * velocity_samples.values.array()).matrix()});
    }
    return out;
  }
  const auto dt_u = time_derivative(term.values, dt, 1);
  for (std::size_t j = 0; j < term.values.size(); ++j) {
    out.push_back({term.values[j].grid,
                   dt_u[j].values - apply_V(velocity_samples, term.values[j]).values});
  }
  return out;
}

std::vector<GridFunction> source_from_regular(const std::vector<StateField>& L_prev,
                                              const StateField& velocity_samples,
                                              const MarkovStructure& markov) {
  std::vector<GridFunction> out;
  out.reserve(L_prev.size());
  for (const auto& l : L_prev) {
    out.push_back(average(markov.projector,
                          apply_V(velocity_samples, apply_matrix(markov.potential.matrix, l))));
  }
  return out;
}

std::vector<GridFunction> source_Lk(int k, const std::vector<ScalarCorrection>& corrections,
                                    const StateField& velocity_samples,
                                    const MarkovStructure& markov, double dt) {
  if (k < 1 || static_cast<int>(corrections.size()) < k) {
    fail(ErrorCode::OrderUnavailable, "source_Lk needs c^0 .. c^" + std::to_string(k - 1));
  }
  const auto& r0 = markov.potential.matrix;
  const Eigen::Index n = markov.states();
  const std::size_t nt = corrections[0].values.size();
  std::vector<GridFunction> total;
  for (const auto& c : corrections[0].values) {
    total.push_back({c.grid, Eigen::VectorXd::Zero(c.values.size())});
  }
  for (int i = 0; i < k; ++i) {
    const auto& ci = corrections[static_cast<std::size_t>(i)].values;
    if (ci.size() != nt) fail(ErrorCode::GridMismatch, "corrections on different time grids");
    std::vector<StateField> g;
    g.reserve(nt);
    for (const auto& c : ci) {
      g.push_back(apply_matrix(-r0, apply_V(velocity_samples, lift(c, n))));
    }
    for (int step = 1; step < k - i; ++step) {
      const auto dg = time_derivative(g, dt, 1);
      for (std::size_t j = 0; j < nt; ++j) {
        g[j] = apply_matrix(r0, StateField{g[j].grid,
                                           dg[j].values - apply_V(velocity_samples, g[j]).values});
      }
    }
    for (std::size_t j = 0; j < nt; ++j) {
      total[j].values += average(markov.projector, apply_V(velocity_samples, g[j])).values;
    }
  }
  return total;
}

ScalarCorrection solve_c(int k, const std::vector<GridFunction>& source, const GridFunction& c0,
                         const ScalarFunction& vhat, const TimeGrid& time) {
  const int nt = time.size();
  if (static_cast<int>(source.size()) != nt) {
    fail(ErrorCode::GridMismatch, "source is not sampled on the time grid");
  }
  if (nt < 4) fail(ErrorCode::TooFewSamples, "solve_c needs at least 4 time nodes");
  const SpatialGrid& grid = c0.grid;
  for (const auto& s : source) {
    if (!(s.grid == grid)) fail(ErrorCode::GridMismatch, "source and c0 grids differ");
    if (!s.values.allFinite()) fail(ErrorCode::NonFiniteSource, "source of c^" + std::to_string(k));
  }
  const double dt = time.dt();
  // Characteristic sample times: nodes plus the first half step.
  std::vector<double> sigma;
  sigma.reserve(static_cast<std::size_t>(nt + 1));
  sigma.push_back(0.0);
  sigma.push_back(0.5 * dt);
  for (int m = 1; m < nt; ++m) sigma.push_back(time.time(m));

  // Source at s = dt/2, needed by the first panel.
  Eigen::VectorXd half_source = Eigen::VectorXd::Zero(grid.size());
  {
    const auto st = cubic_stencil(0.5, nt);
    for (int q = 0; q < 4; ++q) half_source += st.weight[q] * source[st.index[q]].values;
  }

  std::vector<Eigen::VectorXd> values(static_cast<std::size_t>(nt), Eigen::VectorXd(grid.size()));
  const bool clamp = !grid.is_periodic();
  const ScalarFunction field = clamp ? ScalarFunction([&](double u) {
    return vhat(std::clamp(u, grid.lower(), grid.upper()));
  })
                                     : vhat;

  std::vector<std::vector<double>> weights(static_cast<std::size_t>(nt));
  for (int j = 2; j < nt; ++j) weights[static_cast<std::size_t>(j)] = simpson_weights(j + 1, dt);

  std::vector<CubicStencil> stencils(sigma.size());
  for (int i = 0; i < grid.size(); ++i) {
    const auto path = trajectory(field, grid.node(i), sigma);
    const bool in_core = i >= grid.core_begin() && i < grid.core_end();
    for (std::size_t m = 0; m < sigma.size(); ++m) {
      if (clamp && in_core && (path[m] < grid.lower() || path[m] > grid.upper())) {
        fail(ErrorCode::DomainEscape, "characteristic from u = " + std::to_string(grid.node(i)) +
                                          " leaves the padded domain");
      }
      stencils[m] = spatial_stencil(grid, path[m]);
    }
    // stencils[0] is the node itself, stencils[1] the half step, stencils[m + 1] node m.
    auto at_node = [&](int m) -> const CubicStencil& {
      return stencils[static_cast<std::size_t>(m == 0 ? 0 : m + 1)];
    };
    values[0](i) = c0.values(i);
    for (int j = 1; j < nt; ++j) {
      double integral = 0.0;
      if (j == 1) {
        integral = dt / 6.0 *
                   (apply_stencil(at_node(0), source[1].values) +
                    4.0 * apply_stencil(stencils[1], half_source) +
                    apply_stencil(at_node(1), source[0].values));
      } else {
        const auto& w = weights[static_cast<std::size_t>(j)];
        for (int m = 0; m <= j; ++m) {
          integral += w[static_cast<std::size_t>(m)] *
                      apply_stencil(at_node(m), source[static_cast<std::size_t>(j - m)].values);
        }
      }
      values[static_cast<std::size_t>(j)](i) = apply_stencil(at_node(j), c0.values) + integral;
    }
  }
  ScalarCorrection out{k, {}};
  out.values.reserve(values.size());
  for (auto& v : values) out.values.push_back({grid, std::move(v)});
  return out;
}

RegularTerm regular_term(int k, const std::vector<StateField>& L_prev, const ScalarCorrection& c_k,
                         const MarkovStructure& markov, double solvability_tolerance) {
  if (L_prev.size() != c_k.values.size()) {
    fail(ErrorCode::GridMismatch, "L u^{k-1} and c^k are on different time grids");
  }
  const Eigen::Index n = markov.states();
  RegularTerm out{k, {}};
  out.values.reserve(L_prev.size());
  for (std::size_t j = 0; j < L_prev.size(); ++j) {
    const double residual = max_abs(average(markov.projector, L_prev[j]).values);
    if (residual > solvability_tolerance * scale_of(L_prev[j].values)) {
      fail(ErrorCode::SolvabilityViolation,
           "Pi L u^" + std::to_string(k - 1) + " = " + std::to_string(residual) +
               " at time node " + std::to_string(j));
    }
    StateField u = apply_matrix(markov.potential.matrix, L_prev[j]);
    u.values += lift(c_k.values[j], n).values;
    out.values.push_back(std::move(u));
  }
  return out;
}

std::vector<StateField> layer_tail(const SingularTerm& w, const StateField& velocity_samples,
                                   const BoundaryLayerGrid& layer, double gap, double* remainder) {
  std::vector<Matrix> g;
  g.reserve(w.values.size());
  for (const auto& f : w.values) g.push_back(apply_V(velocity_samples, f).values);
  const Matrix rest = g.back() / gap;
  if (remainder) *remainder = max_abs(rest);
  auto tails = tail_integrals(g, layer.dtau());
  std::vector<StateField> out;
  out.reserve(tails.size());
  for (auto& t : tails) out.push_back({velocity_samples.grid, t + rest});
  return out;
}

InitialConditions initial_conditions(int k, const StateField& L_prev_at_zero,
                                     const SingularTerm* prev, const StateField& velocity_samples,
                                     const MarkovStructure& markov, const BoundaryLayerGrid& layer) {
  StateField w0 = apply_matrix(-markov.potential.matrix, L_prev_at_zero);
  if (k == 1) {
    return {GridFunction{L_prev_at_zero.grid, Eigen::VectorXd::Zero(L_prev_at_zero.grid.size())},
            std::move(w0)};
  }
  if (prev == nullptr) fail(ErrorCode::OrderUnavailable, "c^k(0) needs w^{k-1}");
  double remainder = 0.0;
  const auto tails = layer_tail(*prev, velocity_samples, layer, markov.gap, &remainder);
  if (remainder > kTailTolerance) {
    fail(ErrorCode::TailTruncationTooCoarse,
         "tail remainder " + std::to_string(remainder) + " of w^" + std::to_string(k - 1));
  }
  return {average(markov.projector, tails.front()), std::move(w0)};
}

SingularTerm singular_first(const StateField& w10, const BoundaryLayerGrid& layer,
                            const MarkovStructure& markov) {
  const double leak = max_abs(average(markov.projector, w10).values);
  if (leak > kProjectionTolerance * scale_of(w10.values)) {
    fail(ErrorCode::ProjectionViolation, "Pi w^1(0) = " + std::to_string(leak));
  }
  const MatrixExponential expq(markov.generator.matrix());
  SingularTerm out{1, {}};
  out.values.reserve(static_cast<std::size_t>(layer.size()));
  for (int j = 0; j < layer.size(); ++j) {
    const Matrix e0 = expq(layer.tau(j)) - markov.projector.matrix;
    out.values.push_back(apply_matrix(e0, w10));
  }
  return out;
}

SingularTerm singular_term(int k, const StateField& w_k0, const SingularTerm& prev,
                           const StateField& velocity_samples, const MarkovStructure& markov,
                           const BoundaryLayerGrid& layer) {
  const int m_nodes = layer.size();
  if (static_cast<int>(prev.values.size()) != m_nodes) {
    fail(ErrorCode::GridMismatch, "w^{k-1} is not on the layer grid");
  }
  const double d = layer.dtau();
  const MatrixExponential expq(markov.generator.matrix());
  const Matrix& pi = markov.projector.matrix;
  std::vector<Matrix> e0(static_cast<std::size_t>(m_nodes));
  for (int j = 0; j < m_nodes; ++j) e0[static_cast<std::size_t>(j)] = expq(layer.tau(j)) - pi;
  const Matrix e0_half = expq(0.5 * d) - pi;

  std::vector<Matrix> g;
  g.reserve(prev.values.size());
  for (const auto& f : prev.values) g.push_back(apply_V(velocity_samples, f).values);
  const Matrix g_half = apply_V(velocity_samples,
                                StateField{w_k0.grid, interpolate_series(prev.values, 0.5)})
                            .values;

  double remainder = 0.0;
  const auto tails = layer_tail(prev, velocity_samples, layer, markov.gap, &remainder);
  if (remainder > kTailTolerance) {
    fail(ErrorCode::TailTruncationTooCoarse,
         "tail remainder " + std::to_string(remainder) + " of w^" + std::to_string(k - 1));
  }

  SingularTerm out{k, {}};
  out.values.reserve(static_cast<std::size_t>(m_nodes));
  for (int j = 0; j < m_nodes; ++j) {
    Matrix value = e0[static_cast<std::size_t>(j)] * w_k0.values - pi * tails[j].values;
    if (j == 1) {
      value += d / 6.0 * (e0[1] * g[0] + 4.0 * e0_half * g_half + e0[0] * g[1]);
    } else if (j >= 2) {
      const auto wts = simpson_weights(j + 1, d);
      for (int i = 0; i <= j; ++i) {
        value += wts[static_cast<std::size_t>(i)] *
                 (e0[static_cast<std::size_t>(j - i)] * g[static_cast<std::size_t>(i)]);
      }
    }
    out.values.push_back({w_k0.grid, std::move(value)});
  }
  const double end = max_abs(out.values.back().values);
  if (end > kLayerEndTolerance * scale_of(w_k0.values)) {
    fail(ErrorCode::TailTruncationTooCoarse,
         "w^" + std::to_string(k) + "(tau_max) = " + std::to_string(end));
  }
  return out;
}

LaplaceDiagnostics laplace_singular(const SingularTerm& w, const std::vector<double>& lambdas,
                                    const BoundaryLayerGrid& layer, double gap) {
  const int m_nodes = layer.size();
  if (static_cast<int>(w.values.size()) != m_nodes) {
    fail(ErrorCode::GridMismatch, "w^k is not on the layer grid");
  }
  const SpatialGrid& grid = w.values.front().grid;
  const auto wts = newton_cotes_weights(m_nodes, layer.dtau());
  const Matrix& last = w.values.back().values;
  const double tau_max = layer.tau_max;

  LaplaceDiagnostics out{w.k, lambdas, {}, {grid, Matrix()}, {grid, Matrix()}, 0.0};
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) fail(ErrorCode::NonPositiveLambda, "Laplace variable must be positive");
    Matrix sum = Matrix::Zero(last.rows(), last.cols());
    for (int i = 0; i < m_nodes; ++i) {
      sum += wts[static_cast<std::size_t>(i)] * std::exp(-lambda * layer.tau(i)) *
             w.values[static_cast<std::size_t>(i)].values;
    }
    const Matrix tail = std::exp(-lambda * tau_max) / (lambda + gap) * last;
    out.tail_estimate = std::max(out.tail_estimate, max_abs(tail));
    out.transform.push_back({grid, sum + tail});
  }
  const auto tails = tail_integrals(raw_values(w.values), layer.dtau());
  const Matrix zero_tail = last / gap;
  out.tail_estimate = std::max(out.tail_estimate, max_abs(zero_tail));
  out.at_zero = {grid, tails.front() + zero_tail};

  Matrix moment = Matrix::Zero(last.rows(), last.cols());
  for (int i = 0; i < m_nodes; ++i) {
    moment += wts[static_cast<std::size_t>(i)] * layer.tau(i) *
              w.values[static_cast<std::size_t>(i)].values;
  }
  moment += (tau_max / gap + 1.0 / (gap * gap)) * last;
  out.derivative_at_zero = {grid, -moment};
  if (out.tail_estimate > kTailTolerance) {
    fail(ErrorCode::TailTruncationTooCoarse,
         "Laplace tail estimate " + std::to_string(out.tail_estimate));
  }
  return out;
}

ExpansionResult build_expansion(const Model& model, const ExpansionSettings& settings) {
  if (settings.order < 0) fail(ErrorCode::InvalidArgument, "expansion order must be >= 0");
  const MarkovStructure& markov = model.markov;
  const TimeGrid time(settings.t_end, settings.n_steps);
  const auto layer =
      BoundaryLayerGrid::make(markov.gap, settings.tau_max_factor, settings.n_tau);
  const StateField vs = sample_velocity(model.velocity, model.grid);
  const ScalarFunction vhat = model.averaged_velocity();
  const Eigen::Index n = model.states();
  const double dt = time.dt();

  ExpansionResult result{settings.order, time, layer, model.grid, n, {}, {}, {}, {}, {}, {}, {}};
  result.regular.push_back(leading_term(model.phi, vhat, time, model.grid, n));
  {
    ScalarCorrection c0{0, {}};
    for (const auto& u : result.regular[0].values) c0.values.push_back(average(markov.projector, u));
    result.corrections.push_back(std::move(c0));
  }
  result.L.push_back(apply_L(result.regular[0], vs, markov.projector, dt));

  for (int k = 1; k <= settings.order; ++k) {
    const auto& L_prev = result.L.back();
    const SingularTerm* prev = k > 1 ? &result.singular.back() : nullptr;
    auto ic = initial_conditions(k, L_prev.front(), prev, vs, markov, layer);
    double tail_remainder = 0.0;
    if (prev) layer_tail(*prev, vs, layer, markov.gap, &tail_remainder);

    auto source = source_from_regular(L_prev, vs, markov);
    auto c_k = solve_c(k, source, ic.c0, vhat, time);
    auto u_k = regular_term(k, L_prev, c_k, markov, settings.solvability_tolerance);
    auto w_k = k == 1 ? singular_first(ic.w0, layer, markov)
                      : singular_term(k, ic.w0, *prev, vs, markov, layer);

    OrderDiagnostics diag{k, 0.0, 0.0, 0.0, 0.0, tail_remainder};
    const Matrix& q = markov.generator.matrix();
    const Matrix i_minus_pi = Matrix::Identity(n, n) - markov.projector.matrix;
    for (std::size_t j = 0; j < L_prev.size(); ++j) {
      diag.solvability_residual =
          std::max(diag.solvability_residual,
                   max_abs(average(markov.projector, L_prev[j]).values) /
                       scale_of(L_prev[j].values));
      diag.range_residual = std::max(
          diag.range_residual, max_abs(q * u_k.values[j].values - i_minus_pi * L_prev[j].values));
    }
    diag.initial_matching = max_abs(u_k.values.front().values + w_k.values.front().values);
    diag.layer_end = max_abs(w_k.values.back().values);
    if (diag.initial_matching > settings.matching_tolerance) {
      fail(ErrorCode::ConsistencyViolation,
           "u^" + std::to_string(k) + "(0) + w^" + std::to_string(k) +
               "(0) = " + std::to_string(diag.initial_matching));
    }

    result.laplace.push_back(laplace_singular(w_k, settings.laplace_lambdas, layer, markov.gap));
    result.diagnostics.push_back(diag);
    result.sources.push_back(std::move(source));
    result.corrections.push_back(std::move(c_k));
    result.regular.push_back(std::move(u_k));
    result.singular.push_back(std::move(w_k));
    result.L.push_back(apply_L(result.regular.back(), vs, markov.projector, dt));
  }
  return result;
}

StateField regular_at(const ExpansionResult& result, int k, double t) {
  if (k < 0 || k > result.order) fail(ErrorCode::OrderUnavailable, "u^" + std::to_string(k));
  if (!(t >= 0.0) || t > result.time.t_end * (1.0 + 1e-12)) {
    fail(ErrorCode::InvalidArgument, "t = " + std::to_string(t) + " is outside the time grid");
  }
  const double x = std::min(t / result.time.dt(), static_cast<double>(result.time.n_steps));
  return {result.grid, interpolate_series(result.u(k).values, x)};
}

StateField layer_at(const ExpansionResult& result, int k, double tau) {
  if (k < 1 || k > result.order) fail(ErrorCode::OrderUnavailable, "w^" + std::to_string(k));
  if (!(tau >= 0.0)) fail(ErrorCode::InvalidArgument, "tau must be non-negative");
  if (tau > result.layer.tau_max) return StateField::zero(result.grid, result.states);
  return {result.grid, interpolate_series(result.w(k).values, tau / result.layer.dtau())};
}

StateField evaluate_expansion(const ExpansionResult& result, int order, double epsilon, double t,
                              LayerTerms layer_terms) {
  if (order < 0 || order > result.order) {
    fail(ErrorCode::OrderUnavailable, "order " + std::to_string(order) + " requested, " +
                                          std::to_string(result.order) + " computed");
  }
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  const double t_end = result.time.t_end;
  if (!(t >= 0.0) || t > t_end * (1.0 + 1e-12)) {
    fail(ErrorCode::InvalidArgument, "t = " + std::to_string(t) + " is outside the time grid");
  }
  const double x = std::min(t / result.time.dt(), static_cast<double>(result.time.n_steps));
  const double tau = t / epsilon;
  const bool in_layer = layer_terms == LayerTerms::include && tau <= result.layer.tau_max;
  const double y = tau / result.layer.dtau();

  Matrix sum = interpolate_series(result.regular[0].values, x);
  double power = 1.0;
  for (int k = 1; k <= order; ++k) {
    power *= epsilon;
    Matrix term = interpolate_series(result.u(k).values, x);
    if (in_layer) term += interpolate_series(result.w(k).values, y);
    sum += power * term;
  }
  return {result.grid, std::move(sum)};
}

}  // namespace evomax
