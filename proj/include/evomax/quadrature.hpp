// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <vector>

namespace evomax {

/// Weights of a composite Newton-Cotes rule on `n_nodes` uniform nodes:
/// Boole when the interval count is a multiple of 4, otherwise Simpson with a
/// 3/8 panel at the end for odd counts. Degrades to the trapezoid rule for 2 nodes.
std::vector<double> newton_cotes_weights(int n_nodes, double dx);

/// Composite Simpson (plus a closing 3/8 panel for an odd interval count).
std::vector<double> simpson_weights(int n_nodes, double dx);

/// T_j = integral from x_j to x_last of the samples, for every node j, by
/// integrating six-point Lagrange interpolants interval by interval. Sixth
/// order; needs at least 6 samples.
std::vector<Eigen::MatrixXd> tail_integrals(const std::vector<Eigen::MatrixXd>& f, double dx);

}  // namespace evomax
