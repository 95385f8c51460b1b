// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "evomax/function_space.hpp"
#include "evomax/markov_core.hpp"
#include "evomax/model.hpp"

namespace evomax {

/// Uniform grid on the fast time tau = t / eps, truncated at tau_max.
struct BoundaryLayerGrid {
  double tau_max;
  int intervals;

  /// tau_max = factor / gap.
  static BoundaryLayerGrid make(double gap, double factor, int intervals);
  double dtau() const noexcept { return tau_max / intervals; }
  double tau(int j) const noexcept { return j * dtau(); }
  int size() const noexcept { return intervals + 1; }
};

/// u^k(u, x, t) on the time grid.
struct RegularTerm {
  int k;
  std::vector<StateField> values;
};

/// c^k(u, t) on the time grid; c^0 is u^0 itself.
struct ScalarCorrection {
  int k;
  std::vector<GridFunction> values;
};

/// w^k(u, x, tau) on the layer grid.
struct SingularTerm {
  int k;
  std::vector<StateField> values;
};

struct InitialConditions {
  GridFunction c0;
  StateField w0;
};

struct LaplaceDiagnostics {
  int k;
  std::vector<double> lambdas;
  std::vector<StateField> transform;  // w~(lambda) per lambda
  StateField at_zero;                 // integral of w over [0, inf)
  StateField derivative_at_zero;      // -integral of s w(s)
  /// Largest analytic tail contribution beyond tau_max over all lambdas.
  double tail_estimate;
};

struct OrderDiagnostics {
  int k;
  double solvability_residual;  // |Pi L u^{k-1}| relative to |L u^{k-1}|
  double range_residual;        // |Q u^k - (I - Pi) L u^{k-1}|
  double initial_matching;      // |u^k(0) + w^k(0)|
  double layer_end;             // |w^k(tau_max)|
  double tail_remainder;        // analytic tail of the layer integral feeding c^{k+1}(0)
};

struct ExpansionSettings {
  int order = 3;
  double t_end = 1.0;
  int n_steps = 200;
  int n_tau = 600;
  double tau_max_factor = 30.0;
  double solvability_tolerance = 1e-5;
  double matching_tolerance = 1e-8;
  std::vector<double> laplace_lambdas{0.5, 1.0, 2.0};
};

struct ExpansionResult {
  int order;
  TimeGrid time;
  BoundaryLayerGrid layer;
  SpatialGrid grid;
  Eigen::Index states;
  std::vector<RegularTerm> regular;             // u^0 .. u^N
  std::vector<ScalarCorrection> corrections;    // c^0 .. c^N
  std::vector<SingularTerm> singular;           // w^1 .. w^N at index k-1
  std::vector<std::vector<StateField>> L;       // L u^0 .. L u^N
  std::vector<std::vector<GridFunction>> sources;  // source of c^1 .. c^N at index k-1
  std::vector<OrderDiagnostics> diagnostics;    // k = 1 .. N at index k-1
  std::vector<LaplaceDiagnostics> laplace;      // k = 1 .. N at index k-1

  const RegularTerm& u(int k) const { return regular.at(static_cast<std::size_t>(k)); }
  const ScalarCorrection& c(int k) const { return corrections.at(static_cast<std::size_t>(k)); }
  const SingularTerm& w(int k) const { return singular.at(static_cast<std::size_t>(k - 1)); }
};

/// u^0(u, t) = phi(X_t(u)) with X the flow of the averaged velocity, lifted
/// to every state.
RegularTerm leading_term(const ScalarFunction& phi, const ScalarFunction& vhat,
                         const TimeGrid& time, const SpatialGrid& grid, Eigen::Index states);

/// L u = d/dt u - V u at every time node. The k = 0 time derivative is exact
/// (vhat du^0/du); higher orders use finite differences in t.
std::vector<StateField> apply_L(const RegularTerm& term, const StateField& velocity_samples,
                                const ErgodicProjector& proj, double dt);

/// Pi V R0 L u^{k-1}: the source of the c^k transport equation obtained from
/// the solvability condition for u^{k+1}.
std::vector<GridFunction> source_from_regular(const std::vector<StateField>& L_prev,
                                              const StateField& velocity_samples,
                                              const MarkovStructure& markov);

/// The same source assembled from the scalar corrections c^0 .. c^{k-1} alone:
/// sum_i Pi V g_{i,k-i} with g_{i,1} = -R0 V c^i and
/// g_{i,n+1} = R0 (d/dt g_{i,n} - V g_{i,n}).
std::vector<GridFunction> source_Lk(int k, const std::vector<ScalarCorrection>& corrections,
                                    const StateField& velocity_samples,
                                    const MarkovStructure& markov, double dt);

/// Solves d/dt c = vhat dc/du + source along characteristics:
/// c(u, t) = c0(X_t(u)) + int_0^t source(X_{t-s}(u), s) ds.
ScalarCorrection solve_c(int k, const std::vector<GridFunction>& source, const GridFunction& c0,
                         const ScalarFunction& vhat, const TimeGrid& time);

/// u^k = R0 L u^{k-1} + c^k. Throws SolvabilityViolation when Pi L u^{k-1}
/// is not negligible relative to L u^{k-1}.
RegularTerm regular_term(int k, const std::vector<StateField>& L_prev, const ScalarCorrection& c_k,
                         const MarkovStructure& markov, double solvability_tolerance = 1e-5);

/// Integral of V w over [tau_j, inf) at every layer node, with the analytic
/// exponential remainder beyond tau_max.
std::vector<StateField> layer_tail(const SingularTerm& w, const StateField& velocity_samples,
                                   const BoundaryLayerGrid& layer, double gap,
                                   double* remainder = nullptr);

/// w^k(0) = -R0 L u^{k-1}(0); c^1(0) = 0 and c^k(0) = Pi V w~^{k-1}(0).
InitialConditions initial_conditions(int k, const StateField& L_prev_at_zero,
                                     const SingularTerm* prev, const StateField& velocity_samples,
                                     const MarkovStructure& markov, const BoundaryLayerGrid& layer);

/// w^1(tau) = exp0(Q tau) w^1(0). Throws ProjectionViolation unless Pi w^1(0) = 0.
SingularTerm singular_first(const StateField& w10, const BoundaryLayerGrid& layer,
                            const MarkovStructure& markov);

/// w^k(tau) = exp0(Q tau) w^k(0) + int_0^tau exp0(Q(tau-s)) V w^{k-1}(s) ds
///            - Pi int_tau^inf V w^{k-1}(s) ds.
SingularTerm singular_term(int k, const StateField& w_k0, const SingularTerm& prev,
                           const StateField& velocity_samples, const MarkovStructure& markov,
                           const BoundaryLayerGrid& layer);

LaplaceDiagnostics laplace_singular(const SingularTerm& w, const std::vector<double>& lambdas,
                                    const BoundaryLayerGrid& layer, double gap);

ExpansionResult build_expansion(const Model& model, const ExpansionSettings& settings);

enum class LayerTerms { include, exclude };

/// u^k at time t, cubic in t between stored nodes.
StateField regular_at(const ExpansionResult& result, int k, double t);
/// w^k at fast time tau, cubic between layer nodes and zero past tau_max.
StateField layer_at(const ExpansionResult& result, int k, double tau);

/// Phi_N(u, x, t) = u^0 + sum_{k=1..N} eps^k (u^k(t) + w^k(t / eps)), with
/// cubic interpolation between stored t and tau nodes and w = 0 past tau_max.
StateField evaluate_expansion(const ExpansionResult& result, int order, double epsilon, double t,
                              LayerTerms layer_terms = LayerTerms::include);

}  // namespace evomax
