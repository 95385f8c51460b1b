#include <doctest.h>

#include <evomax/error.hpp>
#include <evomax/expansion.hpp>

#include <cmath>

#include "models.hpp"

using namespace evomax;

namespace {

struct Telegraph {
  Model model = testing_models::telegraph(256);
  ExpansionSettings settings;
  ExpansionResult result;
  Telegraph() : result((settings.t_end = 1.0, build_expansion(model, settings))) {}
};

const Telegraph& telegraph_case() {
  static const Telegraph t;
  return t;
}

double state_sign(Eigen::Index x) { return x == 0 ? 1.0 : -1.0; }

}  // namespace

TEST_CASE("telegraph regular terms match the hand derivation") {
  const auto& tc = telegraph_case();
  const auto& r = tc.result;
  double e0 = 0, e1 = 0, ec1 = 0, ec2 = 0, el1 = 0, el2 = 0;
  for (int j = 0; j < r.time.size(); ++j) {
    const double t = r.time.time(j);
    for (int i = 0; i < r.grid.size(); ++i) {
      const double u = r.grid.node(i);
      for (Eigen::Index x = 0; x < 2; ++x) {
        e0 = std::max(e0, std::abs(r.u(0).values[j].values(x, i) - std::sin(u)));
        const double u1 = -t * std::sin(u) / 2 + state_sign(x) * std::cos(u) / 2;
        e1 = std::max(e1, std::abs(r.u(1).values[j].values(x, i) - u1));
      }
      ec1 = std::max(ec1, std::abs(r.c(1).values[j].values(i) + t * std::sin(u) / 2));
      ec2 = std::max(ec2, std::abs(r.c(2).values[j].values(i) -
                                   (t * t / 8 + 0.25) * std::sin(u)));
      el1 = std::max(el1, std::abs(r.sources[0][j].values(i) + std::sin(u) / 2));
      el2 = std::max(el2, std::abs(r.sources[1][j].values(i) - t * std::sin(u) / 4));
    }
  }
  CHECK(e0 < 1e-12);
  CHECK(e1 < 1e-6);
  CHECK(ec1 < 1e-6);
  CHECK(ec2 < 1e-6);
  CHECK(el1 < 1e-6);
  CHECK(el2 < 1e-6);
}

TEST_CASE("telegraph first layer term") {
  const auto& r = telegraph_case().result;
  double err = 0.0;
  for (int j = 0; j < r.layer.size(); ++j) {
    const double tau = r.layer.tau(j);
    for (int i = 0; i < r.grid.size(); ++i) {
      for (Eigen::Index x = 0; x < 2; ++x) {
        const double w = -state_sign(x) * std::exp(-2 * tau) * std::cos(r.grid.node(i)) / 2;
        err = std::max(err, std::abs(r.w(1).values[j].values(x, i) - w));
      }
    }
  }
  CHECK(err < 1e-6);
  CHECK(r.layer.tau_max == doctest::Approx(15.0));
}

TEST_CASE("diagnostics: range residual, matching, decay") {
  for (const auto* model : {&telegraph_case().model}) {
    (void)model;
  }
  const auto& r = telegraph_case().result;
  for (const auto& d : r.diagnostics) {
    CHECK(d.range_residual < 1e-8);
    CHECK(d.initial_matching < 1e-8);
    CHECK(d.layer_end < 1e-7);
  }
  for (int k = 1; k <= r.order; ++k) {
    const auto& w = r.w(k).values;
    double scale = 0.0;
    for (const auto& f : w) scale = std::max(scale, max_abs(f.values));
    for (int j = 0; j < r.layer.size(); j += 10) {
      CHECK(max_abs(w[j].values) <= 10.0 * scale * std::exp(-r.layer.tau(j)) + 1e-12);
    }
  }
  // N_Q membership of u^0.
  for (const auto& f : r.u(0).values) CHECK((f.values.row(0) - f.values.row(1)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("both source constructions agree") {
  const auto& tc = telegraph_case();
  const auto& r = tc.result;
  const auto vs = sample_velocity(tc.model.velocity, r.grid);
  for (int k = 1; k <= r.order; ++k) {
    const auto b = source_Lk(k, r.corrections, vs, tc.model.markov, r.time.dt());
    double err = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      err = std::max(err, max_abs(b[j].values - r.sources[k - 1][j].values));
    }
    CHECK(err < 1e-6);
  }
}

TEST_CASE("laplace diagnostics for the first layer term") {
  const auto& tc = telegraph_case();
  const auto& r = tc.result;
  const auto& lap = r.laplace[0];
  const auto& m = tc.model.markov;
  const Matrix& w10 = r.w(1).values[0].values;
  for (std::size_t i = 0; i < lap.lambdas.size(); ++i) {
    const Matrix closed = laplace_exp0(m.generator, m.projector, lap.lambdas[i]) * w10;
    CHECK(max_abs(lap.transform[i].values - closed) <= 1e-6 * max_abs(closed));
  }
  CHECK(max_abs(lap.at_zero.values - w10 / 2) < 1e-9);
  CHECK(max_abs(lap.transform[2].values - w10 / 4) < 1e-9);
  CHECK(max_abs(lap.derivative_at_zero.values + w10 / 4) < 1e-9);
}

TEST_CASE("initial matching for both models") {
  for (auto model : {testing_models::telegraph(128), testing_models::asymmetric(128)}) {
    ExpansionSettings s;
    s.t_end = 0.5;
    s.n_steps = 100;
    const auto r = build_expansion(model, s);
    for (int n = 0; n <= 3; ++n) {
      const auto phi = evaluate_expansion(r, n, 0.05, 0.0);
      for (int i = 0; i < r.grid.size(); ++i) {
        for (Eigen::Index x = 0; x < 2; ++x) {
          CHECK(std::abs(phi.values(x, i) - std::sin(r.grid.node(i))) < 1e-7);
        }
      }
    }
  }
}

TEST_CASE("evaluate_expansion closed form and errors") {
  const auto& r = telegraph_case().result;
  const double eps = 0.1, t = 0.5;
  const auto phi = evaluate_expansion(r, 1, eps, t);
  for (int i = 0; i < r.grid.size(); i += 7) {
    const double u = r.grid.node(i);
    const double expected =
        std::sin(u) + eps * (-0.25 * std::sin(u) + 0.5 * std::cos(u) * (1 - std::exp(-10.0)));
    CHECK(std::abs(phi.values(0, i) - expected) < 1e-6);
  }
  CHECK(max_abs(evaluate_expansion(r, 0, eps, t).values - r.u(0).values[100].values) < 1e-14);
  CHECK_THROWS_AS(evaluate_expansion(r, 4, eps, t), Error);
  CHECK_THROWS_AS(evaluate_expansion(r, 1, eps, 2.0), Error);
}

TEST_CASE("zero velocity gives vanishing corrections") {
  auto model = testing_models::make_model(testing_models::symmetric_q(), {"0", "0"}, "sin(u)",
                                          SpatialGrid::periodic(0.0, 6.283185307179586, 64));
  ExpansionSettings s;
  s.n_steps = 40;
  s.n_tau = 120;
  const auto r = build_expansion(model, s);
  for (int k = 1; k <= 3; ++k) {
    for (const auto& f : r.u(k).values) CHECK(max_abs(f.values) == 0.0);
    for (const auto& f : r.w(k).values) CHECK(max_abs(f.values) == 0.0);
  }
}

TEST_CASE("leading term follows the averaged flow") {
  {
    auto model = testing_models::make_model(testing_models::symmetric_q(), {"2", "0"}, "sin(u)",
                                            SpatialGrid::periodic(0.0, 6.283185307179586, 64));
    const auto u0 = leading_term(model.phi, model.averaged_velocity(), TimeGrid(1.0, 20),
                                 model.grid, 2);
    for (int i = 0; i < 64; ++i) {
      CHECK(std::abs(u0.values[20].values(1, i) - std::sin(model.grid.node(i) + 1.0)) < 1e-9);
    }
  }
  {
    auto model = testing_models::make_model(testing_models::symmetric_q(), {"u", "u"}, "u",
                                            SpatialGrid::padded(0.5, 1.5, 41, 1.5 * 1.8));
    const auto u0 = leading_term(model.phi, model.averaged_velocity(), TimeGrid(0.5, 10),
                                 model.grid, 2);
    for (int i = model.grid.core_begin(); i < model.grid.core_end(); ++i) {
      const double u = model.grid.node(i);
      CHECK(std::abs(u0.values[10].values(0, i) - u * std::exp(0.5)) < 1e-8);
    }
  }
}

TEST_CASE("characteristics with drift and a time-dependent source") {
  const auto grid = SpatialGrid::periodic(0.0, 6.283185307179586, 128);
  const TimeGrid time(1.0, 80);
  std::vector<GridFunction> zero_source, source;
  for (int j = 0; j < time.size(); ++j) {
    zero_source.push_back({grid, Eigen::VectorXd::Zero(grid.size())});
    source.push_back(sample([t = time.time(j)](double) { return std::cos(t); }, grid));
  }
  const auto c0 = sample([](double u) { return std::sin(u); }, grid);
  const auto one = [](double) { return 1.0; };
  const auto c = solve_c(1, zero_source, c0, one, time);
  const auto d = solve_c(1, source, c0, [](double) { return 0.0; }, time);
  for (int i = 0; i < grid.size(); ++i) {
    const double u = grid.node(i);
    CHECK(std::abs(c.values[80].values(i) - std::sin(u + 1.0)) < 1e-6);
    CHECK(std::abs(d.values[80].values(i) - (std::sin(u) + std::sin(1.0))) < 1e-9);
    CHECK(std::abs(d.values[1].values(i) - (std::sin(u) + std::sin(time.dt()))) < 1e-11);
  }
}

TEST_CASE("layer convolution converges at fourth order") {
  auto model = testing_models::asymmetric(64);
  ExpansionSettings s;
  s.t_end = 0.5;
  s.n_steps = 50;
  s.order = 2;
  s.n_tau = 150;
  const auto coarse = build_expansion(model, s);
  s.n_tau = 300;
  const auto fine = build_expansion(model, s);
  s.n_tau = 600;
  const auto finest = build_expansion(model, s);
  double d1 = 0.0, d2 = 0.0;
  for (int j = 0; j < coarse.layer.size(); ++j) {
    d1 = std::max(d1, max_abs(coarse.w(2).values[j].values - fine.w(2).values[2 * j].values));
    d2 = std::max(d2, max_abs(fine.w(2).values[2 * j].values - finest.w(2).values[4 * j].values));
  }
  MESSAGE("layer refinement differences " << d1 << " " << d2);
  CHECK(d2 < d1 / 12.0);
  CHECK(d2 < 1e-7);
}

TEST_CASE("projection violation is reported") {
  const auto& tc = telegraph_case();
  StateField bad{tc.result.grid, Matrix::Ones(2, tc.result.grid.size())};
  CHECK_THROWS_AS(singular_first(bad, tc.result.layer, tc.model.markov), Error);
}
