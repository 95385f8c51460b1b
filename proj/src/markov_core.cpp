// SPDX-License-Identifier: Apache-2.0
#include "evomax/markov_core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>
#include <vector>

#include "evomax/error.hpp"

namespace evomax {
namespace {

constexpr double kRowSumTolerance = 1e-9;
constexpr double kEdgeThreshold = 1e-14;
constexpr double kMaxEigenvectorCondition = 1e8;

std::string entry_name(Eigen::Index i) { return "Q[" + std::to_string(i) + "]"; }
std::string entry_name(Eigen::Index i, Eigen::Index j) {
  return entry_name(i) + "[" + std::to_string(j) + "]";
}

bool irreducible(const Matrix& q) {
  const auto n = q.rows();
  // Warshall closure on the off-diagonal support.
  std::vector<char> reach(static_cast<std::size_t>(n * n), 0);
  auto at = [&](Eigen::Index i, Eigen::Index j) -> char& {
    return reach[static_cast<std::size_t>(i * n + j)];
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    at(i, i) = 1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && q(i, j) > kEdgeThreshold) at(i, j) = 1;
    }
  }
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      if (at(i, k))
        for (Eigen::Index j = 0; j < n; ++j)
          if (at(k, j)) at(i, j) = 1;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!at(i, j)) return false;
  return true;
}

}  // namespace

GeneratorMatrix validate_generator(const Matrix& raw) {
  if (raw.rows() != raw.cols() || raw.rows() < 2) {
    fail(ErrorCode::InvalidArgument, "generator must be square with at least 2 states");
  }
  const auto n = raw.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(raw(i, j))) {
        fail(ErrorCode::NonFiniteValue, entry_name(i, j) + " is not finite");
      }
      if (i != j && raw(i, j) < 0.0) {
        fail(ErrorCode::NegativeRate, entry_name(i, j) + " = " + std::to_string(raw(i, j)) +
                                          " is a negative off-diagonal rate");
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sum = raw.row(i).sum();
    if (std::abs(sum) > kRowSumTolerance) {
      fail(ErrorCode::RowSumViolation,
           entry_name(i) + " sums to " + std::to_string(sum) + ", expected 0");
    }
  }
  if (!irreducible(raw)) {
    fail(ErrorCode::Reducible, "Q has more than one communicating class");
  }
  Matrix q = raw;
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) off += q(i, j);
    q(i, i) = -off;
  }
  return GeneratorMatrix(std::move(q));
}

StationaryDistribution stationary_distribution(const GeneratorMatrix& q) {
  const auto n = q.size();
  // pi^T Q = 0 with one balance equation replaced by normalisation.
  Matrix a = q.matrix().transpose();
  a.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) {
    fail(ErrorCode::SingularSystem, "stationary system is singular");
  }
  Vector pi = lu.solve(rhs);
  pi += lu.solve(rhs - a * pi);  // one refinement sweep
  pi /= pi.sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(pi(i) > 0.0)) {
      fail(ErrorCode::SingularSystem, "stationary weight " + std::to_string(i) + " is not positive");
    }
  }
  return {std::move(pi)};
}

ErgodicProjector projector(const StationaryDistribution& pi) {
  const auto n = pi.weights.size();
  Matrix m = Vector::Ones(n) * pi.weights.transpose();
  return {std::move(m), pi.weights};
}

PotentialMatrix potential_matrix(const GeneratorMatrix& q, const ErgodicProjector& proj) {
  const Matrix shifted = proj.matrix - q.matrix();
  Eigen::FullPivLU<Matrix> lu(shifted);
  if (!lu.isInvertible()) {
    fail(ErrorCode::SingularSystem, "Pi - Q is not invertible");
  }
  const auto n = q.size();
  Matrix inverse = lu.solve(Matrix::Identity(n, n));
  return {proj.matrix - inverse};
}

double spectral_gap(const GeneratorMatrix& q) {
  Eigen::EigenSolver<Matrix> solver(q.matrix(), /*computeEigenvectors=*/false);
  const Eigen::VectorXcd lambda = solver.eigenvalues();
  // Drop the single eigenvalue nearest zero (the constant mode).
  Eigen::Index zero = 0;
  for (Eigen::Index i = 1; i < lambda.size(); ++i)
    if (std::abs(lambda(i)) < std::abs(lambda(zero))) zero = i;
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (i != zero) gap = std::min(gap, std::abs(lambda(i).real()));
  if (!(gap > 0.0) || !std::isfinite(gap)) {
    fail(ErrorCode::SingularSystem, "generator has no positive spectral gap");
  }
  return gap;
}

MatrixExponential::MatrixExponential(const Matrix& a) : a_(a) {
  Eigen::EigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) return;
  const Eigen::MatrixXcd v = solver.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
  const auto& sigma = svd.singularValues();
  const double smallest = sigma(sigma.size() - 1);
  if (!(smallest > 0.0) || sigma(0) / smallest >= kMaxEigenvectorCondition) return;
  vectors_ = v;
  inverse_vectors_ = v.inverse();
  eigenvalues_ = solver.eigenvalues();
}

Matrix MatrixExponential::operator()(double t) const {
  if (eigenvalues_) {
    const Eigen::VectorXcd scale = ((*eigenvalues_) * t).array().exp().matrix();
    return (vectors_ * scale.asDiagonal() * inverse_vectors_).real();
  }
  const Matrix scaled = a_ * t;
  return scaled.exp();
}

Matrix matrix_exp(const GeneratorMatrix& q, double t) {
  if (t < 0.0) fail(ErrorCode::NegativeTime, "matrix_exp requires t >= 0");
  if (t == 0.0) return Matrix::Identity(q.size(), q.size());
  return MatrixExponential(q.matrix())(t);
}

Matrix exp0(const GeneratorMatrix& q, const ErgodicProjector& proj, double tau) {
  if (tau < 0.0) fail(ErrorCode::NegativeTime, "exp0 requires tau >= 0");
  return matrix_exp(q, tau) - proj.matrix;
}

Matrix laplace_exp0(const GeneratorMatrix& q, const ErgodicProjector& proj, double lambda) {
  if (!(lambda > 0.0)) fail(ErrorCode::NonPositiveLambda, "laplace_exp0 requires lambda > 0");
  const auto n = q.size();
  // (lambda I - Q + Pi)^{-1} = Pi / (1 + lambda) + the same range part, and stays
  // well conditioned as lambda -> 0.
  const Matrix shifted = lambda * Matrix::Identity(n, n) - q.matrix() + proj.matrix;
  return shifted.partialPivLu().solve(Matrix::Identity(n, n)) - proj.matrix / (1.0 + lambda);
}

MarkovStructure analyze(const GeneratorMatrix& q) {
  auto pi = stationary_distribution(q);
  auto proj = projector(pi);
  auto r0 = potential_matrix(q, proj);
  const double gap = spectral_gap(q);
  return {q, std::move(pi), std::move(proj), std::move(r0), gap};
}

}  // namespace evomax
