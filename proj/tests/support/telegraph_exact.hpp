// Closed-form reference for the symmetric two-state telegraph model
// Q = [[-1, 1], [1, -1]], v = (+1, -1).
//
// For phi(u) = Im e^{i xi u} the backward system is solved by
// Phi(u, x, t) = Im(e^{i xi u} a_x(t)) with a' = (Q / eps + i xi S) a, a(0) = 1,
// S = diag(1, -1). Writing A = -I / eps + B gives B^2 = mu^2 I,
// mu^2 = 1 / eps^2 - xi^2, hence
// a(t) = e^{-t / eps} (cosh(mu t) 1 + sinh(mu t) / mu B 1).
#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace telegraph {

using cplx = std::complex<double>;

inline std::array<cplx, 2> amplitude(double eps, double xi, double t) {
  const cplx i(0.0, 1.0);
  const double r = 1.0 / eps;
  const cplx mu = std::sqrt(cplx(r * r - xi * xi, 0.0));
  // e^{-rt} cosh(mu t) and e^{-rt} sinh(mu t) / mu without overflow.
  const cplx ep = std::exp((mu - r) * t);
  const cplx em = std::exp((-mu - r) * t);
  const cplx ch = 0.5 * (ep + em);
  const cplx sh_over_mu = std::abs(mu) > 1e-300 ? 0.5 * (ep - em) / mu : cplx(t * std::exp(-r * t));
  const cplx b1 = i * xi + r;   // (B 1)_0
  const cplx b2 = r - i * xi;   // (B 1)_1
  return {ch + sh_over_mu * b1, ch + sh_over_mu * b2};
}

/// Phi for phi = sin(xi u).
inline double solution(double eps, double xi, double t, double u, int state) {
  const auto a = amplitude(eps, xi, t);
  return std::imag(std::exp(cplx(0.0, xi * u)) * a[static_cast<std::size_t>(state)]);
}

/// Slow eigenvalue (-1 + sqrt(1 - eps^2 xi^2)) / eps of the symbol.
inline double slow_rate(double eps, double xi) {
  return (-1.0 + std::sqrt(1.0 - eps * eps * xi * xi)) / eps;
}

}  // namespace telegraph
