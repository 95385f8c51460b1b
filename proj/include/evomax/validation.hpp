// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evomax/expansion.hpp"
#include "evomax/oracle.hpp"

namespace evomax {

/// Node indices of `grid` used for error measurement: all nodes when periodic,
/// the core minus a margin of `margin` on each side when padded.
std::vector<int> evaluation_nodes(const SpatialGrid& grid, double margin);

/// max over evaluation nodes and states of |Phi - Phi_N| at snapshot `index`.
/// The solver grid must refine the expansion grid (GridMismatch otherwise).
double remainder(const ExpansionResult& expansion, const DirectSolution& solution,
                 std::size_t index, int order, double epsilon, double margin = 0.0,
                 LayerTerms layer_terms = LayerTerms::include);

struct ErrorSample {
  double epsilon;
  double error;
  double noise_floor = 0.0;
};

struct SlopeFit {
  double slope;
  double intercept;
  double band_low;   // 95% confidence band from the fit residuals
  double band_high;
  double residual_rms;
  int points;
};

/// Least-squares slope of log(error) against log(epsilon). Throws DegenerateFit
/// with fewer than 3 points, non-positive data, or errors within twice their
/// noise floor.
SlopeFit convergence_slope(const std::vector<ErrorSample>& samples, double confidence = 0.95);

struct Certificate {
  double epsilon;
  int order;
  double solver_error;
  double threshold;  // safety * eps^{N+1} * |u^{N+1}(t) + w^{N+1}(t / eps)|
  int level;         // solver refinement level used
  bool passed;
};

struct SweepSettings {
  std::vector<double> epsilons{0.2, 0.1, 0.05, 0.025};
  std::vector<int> orders{0, 1, 2};
  double t = 0.5;
  double safety = 0.05;
  int start_level = 0;
  int max_level = 6;
  /// Spatial margin excluded from padded grids (0 picks t max|v|).
  double margin = -1.0;
};

struct SweepPoint {
  double epsilon;
  int level;
  double solver_error;
  DirectSolution solution;
};

struct RemainderReport {
  SweepSettings settings;
  std::vector<SweepPoint> points;              // sorted by decreasing epsilon
  std::vector<std::vector<double>> errors;     // [order index][epsilon index]
  std::vector<std::vector<Certificate>> certificates;
  std::vector<std::optional<SlopeFit>> fits;   // empty when the fit is degenerate
  std::vector<std::string> fit_notes;

  bool certified(std::size_t order_index) const;
};

/// First term left out of an order-N truncation: |u^{N+1}(t) + w^{N+1}(t/eps)|
/// on the evaluation nodes. NaN when order N+1 was not computed.
double leading_neglected(const ExpansionResult& expansion, int order, double epsilon, double t,
                         double margin);

/// Solver refinement policy: starting from `start_level`, raise the level until
/// the self-convergence estimate is at most `threshold` or `max_level` is hit.
SweepPoint resolve_solver(const Model& model, double epsilon, double t, double threshold,
                          int start_level, int max_level);

RemainderReport run_sweep(const Model& model, const ExpansionResult& expansion,
                          const SweepSettings& settings);

struct BoundDiagnostic {
  double epsilon;
  double t;
  double lhs;                // |Phi(t) - Phi_2(t)|
  double initial_remainder;  // |Phi(0) - Phi_2(0)|
  double theta;              // sup over [0, t] of |theta| (analytic form)
  double theta_fd;           // |theta| from finite differences of Phi_2 at t
  double theta_fd_error;     // |analytic - finite difference| at t
  double gamma_eff;
  double L;
  double rhs;                // eps |Phi~(0)| exp(eps L |theta|)
  double margin;             // combined numerical error of lhs and rhs
  bool violated;
};

/// Smallest nonzero |Re lambda| of the discretised operator Q / eps + V
/// (dense eigen-solve; the grid is coarsened to at most `max_points` nodes).
double effective_gap(const Model& model, double epsilon, int max_points = 256);

/// Both sides of |Phi(t) - Phi_2(t)| <= eps |Phi~(0)| exp(eps L |theta|), with
/// eps theta = d/dt Phi_2 - (Q / eps + V) Phi_2 = eps^2 (L u^2 - V w^2).
/// `solution` must hold snapshots at 0 and t (in that order). L defaults to
/// 2 / effective_gap.
BoundDiagnostic gronwall_diagnostic(const Model& model, const ExpansionResult& expansion,
                                    double epsilon, const DirectSolution& solution,
                                    std::optional<double> L = std::nullopt);

}  // namespace evomax
