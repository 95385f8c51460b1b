// SPDX-License-Identifier: Apache-2.0
#include "evomax/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>
#include <thread>

#include "evomax/error.hpp"

namespace evomax {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr double kMcStepCap = 1e-3;
constexpr std::int64_t kBlockPaths = 1024;

/// Departure-point stencils of one transport step for every state and node.
struct TransportStep {
  std::vector<std::vector<CubicStencil>> stencils;  // [state][node]
};

CubicStencil departure_stencil(const SpatialGrid& grid, double u) {
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

TransportStep make_transport(const Model& model, const SpatialGrid& grid, double tau) {
  TransportStep step;
  step.stencils.resize(static_cast<std::size_t>(model.states()));
  for (Eigen::Index x = 0; x < model.states(); ++x) {
    const auto& v = model.velocity.per_state[static_cast<std::size_t>(x)];
    // Pad nodes may leave the padded domain; only the core is checked.
    const ScalarFunction clamped =
        grid.is_periodic() ? v
                           : ScalarFunction([&](double u) {
                               return v(std::clamp(u, grid.lower(), grid.upper()));
                             });
    auto& row = step.stencils[static_cast<std::size_t>(x)];
    row.reserve(static_cast<std::size_t>(grid.size()));
    for (int i = 0; i < grid.size(); ++i) {
      const double d = flow_map(clamped, grid.node(i), tau);
      const bool core = i >= grid.core_begin() && i < grid.core_end();
      if (!grid.is_periodic() && core && (d < grid.lower() || d > grid.upper())) {
        fail(ErrorCode::DomainEscape, "departure point from u = " + std::to_string(grid.node(i)) +
                                          " leaves the padded domain");
      }
      row.push_back(departure_stencil(grid, d));
    }
  }
  return step;
}

void transport(const TransportStep& step, const Matrix& in, Matrix& out) {
  out.resize(in.rows(), in.cols());
  for (Eigen::Index x = 0; x < in.rows(); ++x) {
    const auto& row = step.stencils[static_cast<std::size_t>(x)];
    for (Eigen::Index i = 0; i < in.cols(); ++i) {
      const auto& st = row[static_cast<std::size_t>(i)];
      out(x, i) = st.weight[0] * in(x, st.index[0]) + st.weight[1] * in(x, st.index[1]) +
                  st.weight[2] * in(x, st.index[2]) + st.weight[3] * in(x, st.index[3]);
    }
  }
}

double rk4_segment(const ScalarFunction& v, double u, double length) {
  if (length <= 0.0) return u;
  const int n = std::max(1, static_cast<int>(std::ceil(length / kMcStepCap)));
  const double h = length / n;
  for (int s = 0; s < n; ++s) {
    const double k1 = v(u);
    const double k2 = v(u + 0.5 * h * k1);
    const double k3 = v(u + 0.5 * h * k2);
    const double k4 = v(u + h * k3);
    u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double value) {
    ++n;
    const double delta = value - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (value - mean);
  }
  void merge(const Moments& b) {
    if (b.n == 0) return;
    if (n == 0) {
      *this = b;
      return;
    }
    const double total = static_cast<double>(n + b.n);
    const double delta = b.mean - mean;
    mean += delta * static_cast<double>(b.n) / total;
    m2 += b.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(b.n) / total;
    n += b.n;
  }
};

}  // namespace

DirectSolution direct_solve(const Model& model, double epsilon, const std::vector<double>& times,
                            const SolverSettings& settings) {
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (settings.refine < 1) fail(ErrorCode::InvalidArgument, "refine factor must be >= 1");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0) || (k > 0 && times[k] < times[k - 1])) {
      fail(ErrorCode::InvalidArgument, "snapshot times must be non-negative and non-decreasing");
    }
  }
  const SpatialGrid grid = model.grid.refined(settings.refine);
  const double h = grid.spacing();
  double vmax = 0.0;
  for (Eigen::Index x = 0; x < model.states(); ++x) {
    for (int i = 0; i < grid.size(); ++i) vmax = std::max(vmax, std::abs(model.velocity(x, grid.node(i))));
  }
  const double cfl_dt = vmax > 0.0 ? settings.cfl * h / vmax : std::numeric_limits<double>::infinity();
  if (settings.dt > 0.0 && settings.dt > cfl_dt * (1.0 + 1e-12)) {
    fail(ErrorCode::CflViolation, "dt = " + std::to_string(settings.dt) + " exceeds " +
                                      std::to_string(cfl_dt));
  }
  const double target = settings.dt > 0.0 ? settings.dt : std::min(cfl_dt, epsilon / 8.0);

  const MatrixExponential expq(model.markov.generator.matrix() / epsilon);
  Matrix phi = lift(sample(model.phi, grid), model.states()).values;
  Matrix scratch;

  DirectSolution out{grid, times, {}, 0.0, h, 0, std::numeric_limits<double>::quiet_NaN()};
  std::map<double, TransportStep> cache;
  auto step_for = [&](double tau) -> const TransportStep& {
    auto it = cache.find(tau);
    if (it == cache.end()) it = cache.emplace(tau, make_transport(model, grid, tau)).first;
    return it->second;
  };

  double now = 0.0;
  for (double t : times) {
    const double length = t - now;
    if (length > 0.0) {
      const int n = std::max(1, static_cast<int>(std::ceil(length / target - 1e-9)));
      const double dt = length / n;
      out.dt = std::max(out.dt, dt);
      out.steps += n;
      const auto& half = step_for(0.5 * dt);
      const auto& full = step_for(dt);
      const Matrix coupling = expq(dt);
      transport(half, phi, scratch);
      for (int s = 0; s < n - 1; ++s) {
        phi.noalias() = coupling * scratch;
        transport(full, phi, scratch);
      }
      phi.noalias() = coupling * scratch;
      transport(half, phi, scratch);
      phi.swap(scratch);
      now = t;
    }
    if (!phi.allFinite()) fail(ErrorCode::NonFiniteValue, "direct solution is not finite");
    out.snapshots.push_back({grid, phi});
  }
  return out;
}

StateField restrict_to(const StateField& fine, const SpatialGrid& coarse) {
  int factor = 0;
  if (!coarse.nested_in(fine.grid, &factor)) {
    fail(ErrorCode::GridMismatch, "grid is not nested in the solver grid");
  }
  StateField out = StateField::zero(coarse, fine.states());
  const int offset = fine.grid.core_begin() - coarse.core_begin() * factor;
  for (int i = 0; i < coarse.size(); ++i) out.values.col(i) = fine.values.col(offset + i * factor);
  return out;
}

DirectSolution direct_solve_checked(const Model& model, double epsilon,
                                    const std::vector<double>& times,
                                    const SolverSettings& settings) {
  const auto coarse = direct_solve(model, epsilon, times, settings);
  SolverSettings finer = settings;
  finer.refine *= 2;
  finer.dt = 0.5 * coarse.dt;
  auto fine = direct_solve(model, epsilon, times, finer);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto r = restrict_to(fine.snapshots[k], coarse.grid);
    const int begin = coarse.grid.core_begin();
    const int count = coarse.grid.core_points();
    worst = std::max(worst, max_abs(r.values.middleCols(begin, count) -
                                    coarse.snapshots[k].values.middleCols(begin, count)));
  }
  fine.error_estimate = worst / 3.0;
  return fine;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(seed ^ mix64(stream + kGolden))) {}

std::uint64_t CounterRng::next() noexcept { return mix64(key_ + (++counter_) * kGolden); }

double CounterRng::uniform() noexcept {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double simulate_path(const Model& model, double epsilon, double t_end, double u0,
                     Eigen::Index x0, CounterRng& rng) {
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  const auto& q = model.markov.generator;
  const auto domain = model.domain();
  double u = u0;
  Eigen::Index x = x0;
  double now = 0.0;
  while (now < t_end) {
    const double rate = q.exit_rate(x) / epsilon;
    const double hold = -std::log(rng.uniform()) / rate;
    const double length = std::min(hold, t_end - now);
    u = rk4_segment(model.velocity.per_state[static_cast<std::size_t>(x)], u, length);
    if (!std::isfinite(u)) fail(ErrorCode::NonFiniteValue, "path position is not finite");
    if (domain && (u < domain->lower || u > domain->upper)) {
      fail(ErrorCode::DomainEscape, "path leaves the padded domain");
    }
    now += length;
    if (now >= t_end) break;
    // Jump to y != x with probability q_xy / q_x.
    double target = rng.uniform() * q.exit_rate(x);
    Eigen::Index next = x;
    for (Eigen::Index y = 0; y < q.size(); ++y) {
      if (y == x) continue;
      next = y;
      target -= q.rate(x, y);
      if (target < 0.0 && q.rate(x, y) > 0.0) break;
    }
    x = next;
  }
  return u;
}

int worker_count_from_env() {
  const char* env = std::getenv("EVOMAX_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long value = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || value < 1) return 1;
  return static_cast<int>(std::min<long>(value, 1024));
}

McEstimate mc_estimate(const Model& model, double epsilon, double t, double u, Eigen::Index x,
                       std::int64_t n_paths, std::uint64_t seed, int workers) {
  if (n_paths < 100) fail(ErrorCode::InvalidArgument, "mc_estimate needs at least 100 paths");
  if (x < 0 || x >= model.states()) fail(ErrorCode::InvalidArgument, "initial state out of range");
  if (!(t >= 0.0)) fail(ErrorCode::NegativeTime, "t must be non-negative");
  if (workers <= 0) workers = worker_count_from_env();

  const std::int64_t blocks = (n_paths + kBlockPaths - 1) / kBlockPaths;
  std::vector<Moments> partial(static_cast<std::size_t>(blocks));
  std::atomic<std::int64_t> next_block{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));

  auto work = [&](int worker) {
    try {
      for (;;) {
        const std::int64_t b = next_block.fetch_add(1);
        if (b >= blocks) return;
        Moments m;
        const std::int64_t end = std::min(n_paths, (b + 1) * kBlockPaths);
        for (std::int64_t p = b * kBlockPaths; p < end; ++p) {
          CounterRng rng(seed, static_cast<std::uint64_t>(p));
          m.add(model.phi(simulate_path(model, epsilon, t, u, x, rng)));
        }
        partial[static_cast<std::size_t>(b)] = m;
      }
    } catch (...) {
      errors[static_cast<std::size_t>(worker)] = std::current_exception();
      next_block.store(blocks);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Moments total;
  for (const auto& m : partial) total.merge(m);
  const double variance = total.n > 1 ? total.m2 / static_cast<double>(total.n - 1) : 0.0;
  return {total.mean, std::sqrt(variance / static_cast<double>(total.n)), n_paths, seed, t, u, x};
}

}  // namespace evomax
