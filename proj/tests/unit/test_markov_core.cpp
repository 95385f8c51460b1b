#include <doctest.h>

#include <evomax/error.hpp>
#include <evomax/markov_core.hpp>
#include <evomax/quadrature.hpp>

#include <cmath>
#include <random>

using namespace evomax;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix q(2, 2);
  q << a, b, c, d;
  return q;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an evomax::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("validate_generator accepts and rejects") {
  CHECK(validate_generator(m2(-1, 1, 1, -1)).size() == 2);
  CHECK(code_of([] { validate_generator(m2(-1, 0.5, 1, -1)); }) == ErrorCode::RowSumViolation);
  CHECK(code_of([] { validate_generator(m2(1, -1, 1, -1)); }) == ErrorCode::NegativeRate);
  Matrix cyclic(3, 3);
  cyclic << -1, 1, 0, 0, -1, 1, 1, 0, -1;
  CHECK(validate_generator(cyclic).size() == 3);
  Matrix split(3, 3);
  split << -1, 1, 0, 1, -1, 0, 0, 0, 0;
  CHECK(code_of([&] { validate_generator(split); }) == ErrorCode::Reducible);
  try {
    validate_generator(m2(-1, 0.5, 1, -1));
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("Q[0]") != std::string::npos);
  }
}

TEST_CASE("stationary distributions") {
  auto pi = stationary_distribution(validate_generator(m2(-1, 1, 1, -1))).weights;
  CHECK(pi(0) == doctest::Approx(0.5).epsilon(1e-14));
  pi = stationary_distribution(validate_generator(m2(-2, 2, 3, -3))).weights;
  CHECK(std::abs(pi(0) - 0.6) < 1e-14);
  CHECK(std::abs(pi(1) - 0.4) < 1e-14);
  Matrix cyclic(3, 3);
  cyclic << -1, 1, 0, 0, -1, 1, 1, 0, -1;
  pi = stationary_distribution(validate_generator(cyclic)).weights;
  for (int i = 0; i < 3; ++i) CHECK(std::abs(pi(i) - 1.0 / 3.0) < 1e-14);
}

TEST_CASE("projector and potential matrix") {
  const auto q = validate_generator(m2(-1, 1, 1, -1));
  const auto m = analyze(q);
  CHECK((m.projector.matrix - Matrix::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() < 1e-15);
  const Matrix expected = m2(-0.25, 0.25, 0.25, -0.25);
  CHECK((m.potential.matrix - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(m.gap == doctest::Approx(2.0).epsilon(1e-12));

  const auto a = analyze(validate_generator(m2(-2, 2, 3, -3)));
  const Matrix id = Matrix::Identity(2, 2);
  CHECK((a.generator.matrix() * a.potential.matrix - (id - a.projector.matrix)).cwiseAbs().maxCoeff() <
        1e-10);
  CHECK((a.projector.matrix * a.potential.matrix).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("matrix exponential and exp0") {
  const auto q = validate_generator(m2(-1, 1, 1, -1));
  const auto m = analyze(q);
  CHECK(std::abs(matrix_exp(q, 0.5)(0, 0) - 0.5 * (1.0 + std::exp(-1.0))) < 1e-14);
  CHECK((matrix_exp(q, 0.0) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  const double tau = 0.7;
  const Matrix closed = std::exp(-2.0 * tau) * (Matrix::Identity(2, 2) - m.projector.matrix);
  CHECK((exp0(q, m.projector, tau) - closed).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(exp0(q, m.projector, 30.0 / m.gap).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(matrix_exp(q, -1.0), Error);
  CHECK((matrix_exp(q, 25.0 / m.gap) - m.projector.matrix).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("non-diagonalisable generator uses the Pade fallback") {
  Matrix q(3, 3);
  q << -1, 1, 0, 0, -1, 1, 1, 0, -1;
  Matrix jordan(3, 3);
  jordan << -1, 1, 0, 0, -1, 1, 0, 0, -1;
  const MatrixExponential e(jordan);
  CHECK_FALSE(e.diagonalised());
  const Matrix p = e(1.0);
  CHECK(std::abs(p(0, 2) - 0.5 * std::exp(-1.0)) < 1e-13);
  CHECK(MatrixExponential(q).diagonalised());
}

TEST_CASE("laplace_exp0 closed form, small-lambda limit and quadrature") {
  const auto q = validate_generator(m2(-1, 1, 1, -1));
  const auto m = analyze(q);
  const Matrix i_pi = Matrix::Identity(2, 2) - m.projector.matrix;
  CHECK((laplace_exp0(q, m.projector, 2.0) - i_pi / 4.0).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((laplace_exp0(q, m.projector, 1e-6) + m.potential.matrix).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_AS(laplace_exp0(q, m.projector, 0.0), Error);

  const auto a = analyze(validate_generator(m2(-2, 2, 3, -3)));
  const int n = 4001;
  const double t_max = 30.0 / a.gap;
  const auto w = simpson_weights(n, t_max / (n - 1));
  Matrix sum = Matrix::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const double s = i * t_max / (n - 1);
    sum += w[i] * std::exp(-s) * exp0(a.generator, a.projector, s);
  }
  CHECK((sum - laplace_exp0(a.generator, a.projector, 1.0)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("deviation integral reproduces minus R0") {
  const auto a = analyze(validate_generator(m2(-2, 2, 3, -3)));
  const int n = 20001;
  const double t_max = 30.0 / a.gap;
  const double h = t_max / (n - 1);
  Matrix sum = Matrix::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const double wgt = (i == 0 || i == n - 1) ? 0.5 * h : h;
    sum += wgt * exp0(a.generator, a.projector, i * h);
  }
  CHECK((-sum - a.potential.matrix).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("random generators satisfy the algebraic identities") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> rate(0.0, 3.0);
  std::uniform_int_distribution<int> size(2, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    Matrix q = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) q(i, j) = rate(rng) + 0.01;
      }
      q(i, i) = -q.row(i).sum();
    }
    const auto m = analyze(validate_generator(q));
    const Matrix& qq = m.generator.matrix();
    const Matrix id = Matrix::Identity(n, n);
    CHECK((m.stationary.weights.transpose() * qq).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((qq * m.potential.matrix - (id - m.projector.matrix)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((m.potential.matrix * qq - (id - m.projector.matrix)).cwiseAbs().maxCoeff() < 1e-9);
  }
}
