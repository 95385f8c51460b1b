// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <limits>
#include <optional>

namespace evomax {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Conservative, irreducible generator of a finite-state switching chain.
///
/// Instances only come out of validate_generator(), so holding one means the
/// row-sum, sign and irreducibility invariants are satisfied. The diagonal is
/// re-balanced during validation so rows sum to zero to rounding.
class GeneratorMatrix {
 public:
  const Matrix& matrix() const noexcept { return q_; }
  Eigen::Index size() const noexcept { return q_.rows(); }
  double rate(Eigen::Index from, Eigen::Index to) const { return q_(from, to); }
  /// Total exit rate of `state` (= -q_xx).
  double exit_rate(Eigen::Index state) const { return -q_(state, state); }

 private:
  explicit GeneratorMatrix(Matrix q) : q_(std::move(q)) {}
  friend GeneratorMatrix validate_generator(const Matrix& raw);

  Matrix q_;
};

struct StationaryDistribution {
  Vector weights;  // pi, strictly positive, sums to one
};

/// Pi = 1 pi^T; replaces a state-indexed vector by its pi-average in every slot.
struct ErgodicProjector {
  Matrix matrix;
  Vector weights;
};

/// R0 with Q R0 = R0 Q = I - Pi and Pi R0 = R0 Pi = 0, i.e. minus the deviation
/// matrix int_0^inf (e^{Qt} - Pi) dt.
struct PotentialMatrix {
  Matrix matrix;
};

/// Checks a raw rate matrix and returns it as a generator.
/// Throws NegativeRate, RowSumViolation (tolerance 1e-9) or Reducible; the
/// message names the offending entry as Q[i] or Q[i][j].
GeneratorMatrix validate_generator(const Matrix& raw);

StationaryDistribution stationary_distribution(const GeneratorMatrix& q);
ErgodicProjector projector(const StationaryDistribution& pi);
PotentialMatrix potential_matrix(const GeneratorMatrix& q, const ErgodicProjector& proj);

/// Smallest |Re lambda| over the nonzero eigenvalues of Q.
double spectral_gap(const GeneratorMatrix& q);

/// Evaluates e^{At} for many t from a single factorisation.
///
/// Uses the eigendecomposition when A is diagonalisable with an eigenvector
/// condition number below 1e8, and falls back to scaling-and-squaring with a
/// Pade approximant otherwise.
class MatrixExponential {
 public:
  explicit MatrixExponential(const Matrix& a);

  Matrix operator()(double t) const;
  bool diagonalised() const noexcept { return eigenvalues_.has_value(); }

 private:
  Matrix a_;
  std::optional<Eigen::VectorXcd> eigenvalues_;
  Eigen::MatrixXcd vectors_;
  Eigen::MatrixXcd inverse_vectors_;
};

Matrix matrix_exp(const GeneratorMatrix& q, double t);

/// e^{Q tau} - Pi.
Matrix exp0(const GeneratorMatrix& q, const ErgodicProjector& proj, double tau);

/// int_0^inf e^{-lambda s} (e^{Qs} - Pi) ds = (lambda I - Q)^{-1} - Pi / lambda,
/// evaluated as (lambda I - Q + Pi)^{-1} - Pi / (1 + lambda).
Matrix laplace_exp0(const GeneratorMatrix& q, const ErgodicProjector& proj, double lambda);

/// Everything derived from a generator that the rest of the library needs.
struct MarkovStructure {
  GeneratorMatrix generator;
  StationaryDistribution stationary;
  ErgodicProjector projector;
  PotentialMatrix potential;
  double gap;

  Eigen::Index states() const noexcept { return generator.size(); }
};

MarkovStructure analyze(const GeneratorMatrix& q);

}  // namespace evomax
