// SPDX-License-Identifier: Apache-2.0
#include "evomax/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "evomax/error.hpp"

namespace evomax {

std::vector<double> simpson_weights(int n_nodes, double dx) {
  std::vector<double> w(static_cast<std::size_t>(std::max(n_nodes, 0)), 0.0);
  const int intervals = n_nodes - 1;
  if (intervals <= 0) return w;
  if (intervals == 1) {
    w[0] = w[1] = 0.5 * dx;
    return w;
  }
  const int simpson_end = (intervals % 2 == 0) ? intervals : intervals - 3;
  for (int i = 0; i + 2 <= simpson_end; i += 2) {
    w[i] += dx / 3.0;
    w[i + 1] += 4.0 * dx / 3.0;
    w[i + 2] += dx / 3.0;
  }
  if (simpson_end != intervals) {
    const int i = simpson_end;
    w[i] += 3.0 * dx / 8.0;
    w[i + 1] += 9.0 * dx / 8.0;
    w[i + 2] += 9.0 * dx / 8.0;
    w[i + 3] += 3.0 * dx / 8.0;
  }
  return w;
}

std::vector<double> newton_cotes_weights(int n_nodes, double dx) {
  const int intervals = n_nodes - 1;
  if (intervals < 4 || intervals % 4 != 0) return simpson_weights(n_nodes, dx);
  std::vector<double> w(static_cast<std::size_t>(n_nodes), 0.0);
  constexpr double c[5] = {7.0, 32.0, 12.0, 32.0, 7.0};
  for (int i = 0; i + 4 <= intervals; i += 4) {
    for (int k = 0; k < 5; ++k) w[i + k] += 2.0 * dx * c[k] / 45.0;
  }
  return w;
}

namespace {

// w[o][k] = integral over [o, o + 1] of the k-th Lagrange basis polynomial on
// nodes 0..5; three-point Gauss-Legendre is exact for these quintics.
std::array<std::array<double, 6>, 5> interval_weights() {
  const double g = std::sqrt(0.6);
  const double nodes[3] = {-g, 0.0, g};
  const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  std::array<std::array<double, 6>, 5> w{};
  for (int o = 0; o < 5; ++o) {
    for (int k = 0; k < 6; ++k) {
      double sum = 0.0;
      for (int q = 0; q < 3; ++q) {
        const double x = o + 0.5 + 0.5 * nodes[q];
        double basis = 1.0;
        for (int m = 0; m < 6; ++m) {
          if (m != k) basis *= (x - m) / (k - m);
        }
        sum += 0.5 * gw[q] * basis;
      }
      w[o][k] = sum;
    }
  }
  return w;
}

}  // namespace

std::vector<Eigen::MatrixXd> tail_integrals(const std::vector<Eigen::MatrixXd>& f, double dx) {
  static const auto weights = interval_weights();
  const int n = static_cast<int>(f.size());
  if (n < 6) fail(ErrorCode::TooFewSamples, "tail_integrals needs at least 6 samples");
  std::vector<Eigen::MatrixXd> tail(f.size());
  tail[n - 1] = Eigen::MatrixXd::Zero(f[0].rows(), f[0].cols());
  for (int i = n - 2; i >= 0; --i) {
    const int first = std::clamp(i - 2, 0, n - 6);
    const auto& w = weights[static_cast<std::size_t>(i - first)];
    Eigen::MatrixXd piece = w[0] * f[first];
    for (int k = 1; k < 6; ++k) piece += w[k] * f[first + k];
    tail[i] = tail[i + 1] + dx * piece;
  }
  return tail;
}

}  // namespace evomax
