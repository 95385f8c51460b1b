// SPDX-License-Identifier: Apache-2.0
#include "evomax/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>

#include "evomax/config.hpp"
#include "evomax/csv.hpp"
#include "evomax/error.hpp"
#include "evomax/expansion.hpp"
#include "evomax/oracle.hpp"
#include "evomax/validation.hpp"

namespace evomax {
namespace {

struct Common {
  std::string config;
  std::string out_dir = "out";
};

struct ExpandArgs {
  std::optional<int> order;
  int time_stride = 20;
  int tau_stride = 20;
};

struct SolveArgs {
  double eps = 0.0;
  std::vector<double> times;
  int refine = 1;
  double dt = 0.0;
};

struct McArgs {
  double eps = 0.0;
  double t = 0.0;
  double u = 0.0;
  int x = 0;
  std::optional<std::int64_t> paths;
  std::optional<std::uint64_t> seed;
};

struct SweepArgs {
  std::vector<double> eps;
  std::optional<double> t;
  std::vector<int> orders;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON model file")->required();
  sub->add_option("--out", c.out_dir, "output directory")->capture_default_str();
}

std::string emit(const Common& c, const std::string& name, const CsvTable& table,
                 const ModelConfig& config, std::ostream& out) {
  std::filesystem::create_directories(c.out_dir);
  const auto path = (std::filesystem::path(c.out_dir) / (name + "-" + config.hash + ".csv")).string();
  write_csv_file(path, table, config.hash);
  out << "config " << config.hash << '\n' << "wrote " << path << '\n';
  return path;
}

void check_stride(int stride, const char* name) {
  if (stride < 1) fail(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
}

CsvTable expand_table(const ExpansionResult& r, int order, const ExpandArgs& a) {
  CsvTable table{{"k", "kind", "t_or_tau", "state", "u", "value"}, {}};
  const auto& g = r.grid;
  auto emit_field = [&](int k, const char* kind, double time, const Matrix& values) {
    for (Eigen::Index x = 0; x < values.rows(); ++x) {
      for (int i = g.core_begin(); i < g.core_end(); ++i) {
        table.add_row({std::int64_t{k}, std::string(kind), time, std::int64_t{x}, g.node(i),
                       values(x, i)});
      }
    }
  };
  for (int k = 0; k <= order; ++k) {
    for (int j = 0; j < r.time.size(); j += a.time_stride) {
      emit_field(k, "regular", r.time.time(j), r.u(k).values[static_cast<std::size_t>(j)].values);
    }
  }
  for (int k = 0; k <= order; ++k) {
    for (int j = 0; j < r.time.size(); j += a.time_stride) {
      const auto& c = r.c(k).values[static_cast<std::size_t>(j)].values;
      for (int i = g.core_begin(); i < g.core_end(); ++i) {
        table.add_row({std::int64_t{k}, std::string("correction"), r.time.time(j), std::int64_t{-1},
                       g.node(i), c[i]});
      }
    }
  }
  for (int k = 1; k <= order; ++k) {
    for (int j = 0; j < r.layer.size(); j += a.tau_stride) {
      emit_field(k, "singular", r.layer.tau(j), r.w(k).values[static_cast<std::size_t>(j)].values);
    }
  }
  return table;
}

SweepSettings sweep_settings(const ModelConfig& config, const SweepArgs& a) {
  SweepSettings s;
  s.epsilons = a.eps.empty() ? config.sweep_epsilons : a.eps;
  s.t = a.t.value_or(config.sweep_t);
  s.max_level = config.max_refine_level;
  if (a.orders.empty()) {
    s.orders.clear();
    for (int n = 0; n < std::max(1, config.order); ++n) s.orders.push_back(n);
  } else {
    s.orders = a.orders;
  }
  if (!(s.t > 0.0 && s.t <= config.t_end)) fail(ErrorCode::InvalidArgument, "--t must lie in (0, t_end]");
  for (double e : s.epsilons) {
    if (!(e > 0.0)) fail(ErrorCode::InvalidArgument, "--eps values must be positive");
  }
  for (int n : s.orders) {
    if (n < 0 || n > config.order) {
      fail(ErrorCode::InvalidArgument, "--orders must lie in 0.." + std::to_string(config.order));
    }
  }
  return s;
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Asymptotic expansion of Markov random evolutions", "evomax"};
  app.set_version_flag("--version", std::string(EVOMAX_VERSION));
  app.require_subcommand(1);

  Common common;
  ExpandArgs ea;
  SolveArgs sa;
  McArgs ma;
  SweepArgs wa;

  auto* expand = app.add_subcommand("expand", "write the expansion terms");
  add_common(expand, common);
  expand->add_option("--order", ea.order, "truncation order (default: config)");
  expand->add_option("--time-stride", ea.time_stride, "write every n-th time node")->capture_default_str();
  expand->add_option("--tau-stride", ea.tau_stride, "write every n-th layer node")->capture_default_str();

  auto* solve = app.add_subcommand("solve", "direct solution of the backward system");
  add_common(solve, common);
  solve->add_option("--eps", sa.eps, "epsilon")->required();
  solve->add_option("--t", sa.times, "snapshot times (default: t_end)")->delimiter(',');
  solve->add_option("--refine", sa.refine, "spatial refinement factor")->capture_default_str();
  solve->add_option("--dt", sa.dt, "time step (default: automatic)");

  auto* mc = app.add_subcommand("mc", "Monte Carlo estimate at one point");
  add_common(mc, common);
  mc->add_option("--eps", ma.eps, "epsilon")->required();
  mc->add_option("--t", ma.t, "time")->required();
  mc->add_option("--u", ma.u, "starting position")->required();
  mc->add_option("--x", ma.x, "starting state")->capture_default_str();
  mc->add_option("--paths", ma.paths, "number of paths (default: config)");
  mc->add_option("--seed", ma.seed, "seed (default: config)");

  auto* compare = app.add_subcommand("compare", "expansion errors against the direct solver");
  auto* sweep = app.add_subcommand("sweep", "convergence slopes over epsilon");
  for (auto* sub : {compare, sweep}) {
    add_common(sub, common);
    sub->add_option("--eps", wa.eps, "epsilons (default: config)")->delimiter(',');
    sub->add_option("--t", wa.t, "evaluation time (default: config)");
    sub->add_option("--orders", wa.orders, "truncation orders (default: 0..N-1)")->delimiter(',');
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    err << app.help();
    return kExitConfig;
  }

  try {
    const auto config = load_config(common.config);
    const auto model = build_model(config);

    if (expand->parsed()) {
      check_stride(ea.time_stride, "--time-stride");
      check_stride(ea.tau_stride, "--tau-stride");
      auto settings = expansion_settings(config);
      if (ea.order) {
        if (*ea.order < 0 || *ea.order > 8) fail(ErrorCode::InvalidArgument, "--order must lie in 0..8");
        settings.order = *ea.order;
      }
      const auto result = build_expansion(model, settings);
      emit(common, "expand", expand_table(result, settings.order, ea), config, out);
    } else if (solve->parsed()) {
      auto times = sa.times.empty() ? std::vector<double>{config.t_end} : sa.times;
      const auto sol = direct_solve(model, sa.eps, times, {sa.refine, sa.dt, SolverSettings{}.cfl});
      CsvTable table{{"t", "state", "u", "value"}, {}};
      for (std::size_t k = 0; k < times.size(); ++k) {
        const auto& v = sol.snapshots[k].values;
        for (Eigen::Index x = 0; x < v.rows(); ++x) {
          for (int i = sol.grid.core_begin(); i < sol.grid.core_end(); ++i) {
            table.add_row({times[k], std::int64_t{x}, sol.grid.node(i), v(x, i)});
          }
        }
      }
      emit(common, "solve", table, config, out);
    } else if (mc->parsed()) {
      if (ma.x < 0 || ma.x >= model.states()) {
        fail(ErrorCode::InvalidArgument, "--x must name a state in 0.." + std::to_string(model.states() - 1));
      }
      const auto est = mc_estimate(model, ma.eps, ma.t, ma.u, ma.x, ma.paths.value_or(config.mc_paths),
                                   ma.seed.value_or(config.mc_seed));
      CsvTable table{{"t", "u", "state", "mean", "stderr", "n_paths", "seed"}, {}};
      table.add_row({est.t, est.u, std::int64_t{est.x}, est.mean, est.stderr_, est.n_paths,
                     std::to_string(est.seed)});
      emit(common, "mc", table, config, out);
    } else {
      const auto settings = sweep_settings(config, wa);
      auto es = expansion_settings(config);
      const int top = *std::max_element(settings.orders.begin(), settings.orders.end());
      es.order = std::max(es.order, std::min(top + 1, 8));
      const auto expansion = build_expansion(model, es);
      const auto report = run_sweep(model, expansion, settings);
      if (compare->parsed()) {
        CsvTable table{{"N", "eps", "t", "error", "solver_error", "threshold", "level", "certified"}, {}};
        for (std::size_t o = 0; o < settings.orders.size(); ++o) {
          for (std::size_t e = 0; e < report.points.size(); ++e) {
            const auto& c = report.certificates[o][e];
            table.add_row({std::int64_t{c.order}, c.epsilon, settings.t, report.errors[o][e],
                           c.solver_error, c.threshold, std::int64_t{c.level}, yes_no(c.passed)});
          }
        }
        emit(common, "compare", table, config, out);
      } else {
        CsvTable table{{"N", "slope", "band_low", "band_high", "certified"}, {}};
        for (std::size_t o = 0; o < settings.orders.size(); ++o) {
          const auto& fit = report.fits[o];
          const double nan = std::numeric_limits<double>::quiet_NaN();
          table.add_row({std::int64_t{settings.orders[o]}, fit ? fit->slope : nan,
                         fit ? fit->band_low : nan, fit ? fit->band_high : nan,
                         yes_no(fit.has_value() && report.certified(o))});
          out << "N=" << settings.orders[o] << " slope "
              << (fit ? format_double(fit->slope) : report.fit_notes[o]) << '\n';
        }
        emit(common, "sweep", table, config, out);
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_input_error(e.code()) ? kExitConfig : kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace evomax
