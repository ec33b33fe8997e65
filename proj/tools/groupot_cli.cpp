// groupot command line: synthetic data generation, single solves, and
// hyperparameter-grid benchmarks for group-sparse regularized transport.
//
// Exit codes: 0 ok, 1 runtime failure (including non-convergence),
// 2 usage error, 3 audit violation.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "groupot/groupot.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAudit = 3;

struct DataFlags {
  std::string source_path;
  std::string target_path;
  int classes = 0;
  int per_class = 0;
  std::uint64_t seed = 1;
  bool normalize_cost = false;
};

struct SolverFlags {
  int snapshot_interval = 10;
  double tol = 1e-6;
  int max_outer = 200;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--source", f.source_path, "source CSV (label,f0,f1,...)");
  cmd->add_option("--target", f.target_path, "target CSV (f0,f1,...)");
  cmd->add_option("--classes", f.classes, "synthetic: number of classes");
  cmd->add_option("--per-class", f.per_class, "synthetic: samples per class");
  cmd->add_option("--seed", f.seed, "synthetic generator seed");
  cmd->add_flag("--normalize-cost", f.normalize_cost,
                "divide the cost matrix by its maximum entry");
}

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--snapshot-interval", f.snapshot_interval,
                  "solver iterations between snapshot refreshes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", f.tol, "gradient infinity-norm tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-outer", f.max_outer, "outer loop budget")
      ->check(CLI::PositiveNumber);
}

groupot::SolverOptions to_options(const SolverFlags& f, groupot::SolverMode m) {
  groupot::SolverOptions opts;
  opts.snapshot_interval = f.snapshot_interval;
  opts.grad_tol = f.tol;
  opts.max_outer_loops = f.max_outer;
  opts.mode = m;
  return opts;
}

groupot::SolverMode parse_mode(const std::string& s) {
  if (s == "baseline") return groupot::SolverMode::baseline;
  if (s == "fast") return groupot::SolverMode::fast;
  if (s == "fast-no-lb") return groupot::SolverMode::fast_no_lower_bound;
  if (s == "audit") return groupot::SolverMode::audit;
  throw CLI::ValidationError("--mode",
                             "must be baseline|fast|fast-no-lb|audit");
}

struct LoadedData {
  groupot::ProblemInstance inst;
  int num_classes;
  int per_class;  // 0 when groups are ragged (CSV input)
};

LoadedData load_data(const DataFlags& f) {
  groupot::LabeledSamples src;
  groupot::UnlabeledSamples tgt;
  if (!f.source_path.empty() || !f.target_path.empty()) {
    if (f.source_path.empty() || f.target_path.empty())
      throw CLI::ValidationError("--source/--target",
                                 "both files are required");
    std::tie(src, tgt) = groupot::load_csv(f.source_path, f.target_path);
  } else if (f.classes > 0 && f.per_class > 0) {
    std::tie(src, tgt) = groupot::gen_synthetic(f.classes, f.per_class, f.seed);
  } else {
    throw CLI::ValidationError(
        "data", "give --source/--target or --classes/--per-class");
  }
  groupot::ProblemInstance inst =
      groupot::make_instance(src, tgt, f.normalize_cost);
  const auto& sizes = inst.groups.sizes();
  const bool uniform =
      std::all_of(sizes.begin(), sizes.end(),
                  [&](int g) { return g == sizes.front(); });
  const int num_classes = inst.groups.num_groups();
  const int per_class = uniform ? sizes.front() : 0;
  return {std::move(inst), num_classes, per_class};
}

void write_history_csv(const groupot::GradStats& stats,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw groupot::Error("cannot write " + path);
  out << "call,in_active_set,skipped,unskipped,upper_bounds\n";
  for (std::size_t i = 0; i < stats.history.size(); ++i) {
    const auto& h = stats.history[i];
    out << i << ',' << h.in_active << ',' << h.skipped << ',' << h.unskipped
        << ',' << h.upper_bounds << "\n";
  }
}

int cmd_gen(int classes, int per_class, std::uint64_t seed,
            const std::string& out_dir) {
  auto [src, tgt] = groupot::gen_synthetic(classes, per_class, seed);
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  groupot::save_source_csv(src, (dir / "source.csv").string());
  groupot::save_target_csv(tgt, (dir / "target.csv").string());
  std::cout << "wrote " << (dir / "source.csv").string() << " ("
            << src.features.rows() << " rows) and "
            << (dir / "target.csv").string() << " (" << tgt.features.rows()
            << " rows)\n";
  return kExitOk;
}

int cmd_solve(const DataFlags& data, const SolverFlags& sf, double gamma,
              double rho, groupot::SolverMode mode,
              const std::string& emit_plan, const std::string& history_path) {
  const LoadedData loaded = load_data(data);
  const groupot::RegParams p = groupot::params_from_rho(gamma, rho);
  const groupot::SolverOptions opts = to_options(sf, mode);

  groupot::Solution sol;
  if (mode == groupot::SolverMode::audit) {
    auto [s, report] = groupot::audit_solve(loaded.inst, p, opts);
    sol = std::move(s);
    std::cerr << "audit: " << report.skip_checks << " skip checks, "
              << report.active_checks << " active-set checks, "
              << report.column_compares << " column compares, 0 violations\n";
  } else {
    sol = groupot::solve(loaded.inst, p, opts);
  }

  const groupot::BenchRecord rec =
      groupot::make_record(sol, loaded.inst, mode, gamma, rho,
                           loaded.num_classes, loaded.per_class);
  std::cout << groupot::bench_csv_header() << "\n"
            << groupot::to_csv_row(rec) << "\n";
  if (!emit_plan.empty()) groupot::save_matrix_csv(sol.plan.plan, emit_plan);
  if (!history_path.empty()) write_history_csv(sol.stats, history_path);
  return sol.converged ? kExitOk : kExitRuntime;
}

int cmd_bench(const DataFlags& data, const SolverFlags& sf,
              std::vector<double> gammas, std::vector<double> rhos,
              std::vector<std::string> mode_names, const std::string& out_path,
              const std::string& svg_path, const std::string& history_dir) {
  const LoadedData loaded = load_data(data);
  groupot::GridSpec grid;
  if (!gammas.empty()) grid.gammas = std::move(gammas);
  if (!rhos.empty()) grid.rhos = std::move(rhos);
  if (!mode_names.empty()) {
    grid.modes.clear();
    for (const auto& name : mode_names) grid.modes.push_back(parse_mode(name));
  }
  grid.base = to_options(sf, groupot::SolverMode::fast);

  std::ofstream out(out_path);
  if (!out) throw groupot::Error("cannot write " + out_path);
  out << groupot::bench_csv_header() << "\n";
  if (!history_dir.empty()) std::filesystem::create_directories(history_dir);

  bool all_converged = true;
  const auto sink = [&](const groupot::BenchRecord& rec,
                        const groupot::Solution& sol) {
    out << groupot::to_csv_row(rec) << "\n";
    out.flush();  // partial results survive a failing later run
    all_converged = all_converged && rec.converged;
    if (!history_dir.empty()) {
      char name[128];
      std::snprintf(name, sizeof name, "history_gamma%g_rho%g_%s.csv",
                    rec.gamma, rec.rho, rec.mode.c_str());
      write_history_csv(sol.stats,
                        (std::filesystem::path(history_dir) / name).string());
    }
  };
  const std::vector<groupot::BenchRecord> rows =
      groupot::run_grid(loaded.inst, grid, loaded.num_classes,
                        loaded.per_class, sink);
  if (!svg_path.empty()) groupot::write_speedup_svg(rows, svg_path);
  std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  return all_converged ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete optimal transport with group-sparse regularizers"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  int gen_classes = 0;
  int gen_per_class = 0;
  std::uint64_t gen_seed = 1;
  std::string gen_out_dir = ".";
  gen->add_option("--classes", gen_classes, "number of classes")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--per-class", gen_per_class, "samples per class")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out-dir", gen_out_dir, "output directory");

  // solve
  auto* solve = app.add_subcommand("solve", "solve one instance");
  DataFlags solve_data;
  SolverFlags solve_sf;
  double solve_gamma = 1.0;
  double solve_rho = 0.5;
  std::string solve_mode = "fast";
  std::string solve_emit_plan;
  std::string solve_history;
  bool solve_audit = false;
  add_data_flags(solve, solve_data);
  add_solver_flags(solve, solve_sf);
  solve->add_option("--gamma", solve_gamma, "regularization strength")
      ->required()
      ->check(CLI::PositiveNumber);
  solve->add_option("--rho", solve_rho, "group-term balance in (0,1)")
      ->required();
  solve->add_option("--mode", solve_mode, "baseline|fast|fast-no-lb|audit");
  solve->add_flag("--audit", solve_audit, "run the audited solver");
  solve->add_option("--emit-plan", solve_emit_plan,
                    "write the recovered plan to this CSV path");
  solve->add_option("--history", solve_history,
                    "write per-call gradient counters to this CSV path");

  // bench
  auto* bench = app.add_subcommand("bench", "run a hyperparameter grid");
  DataFlags bench_data;
  SolverFlags bench_sf;
  std::vector<double> bench_gammas;
  std::vector<double> bench_rhos;
  std::vector<std::string> bench_modes;
  std::string bench_out = "results.csv";
  std::string bench_svg;
  std::string bench_history_dir;
  add_data_flags(bench, bench_data);
  add_solver_flags(bench, bench_sf);
  bench->add_option("--gamma", bench_gammas,
                    "gamma grid values (repeatable; default decade sweep)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--rho", bench_rhos,
                    "rho grid values (repeatable; default 0.2..0.8)");
  bench->add_option("--mode", bench_modes,
                    "modes to run (repeatable; default baseline,fast)");
  bench->add_option("--out", bench_out, "results CSV path");
  bench->add_option("--svg", bench_svg, "write a speedup bar chart SVG");
  bench->add_option("--history", bench_history_dir,
                    "write per-call counter CSVs into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed())
      return cmd_gen(gen_classes, gen_per_class, gen_seed, gen_out_dir);
    if (solve->parsed()) {
      if (!(solve_rho > 0.0) || !(solve_rho < 1.0)) {
        std::cerr << "error: --rho must lie strictly inside (0,1)\n";
        return kExitUsage;
      }
      const groupot::SolverMode mode =
          solve_audit ? groupot::SolverMode::audit : parse_mode(solve_mode);
      return cmd_solve(solve_data, solve_sf, solve_gamma, solve_rho, mode,
                       solve_emit_plan, solve_history);
    }
    if (bench->parsed()) {
      for (const double r : bench_rhos) {
        if (!(r > 0.0) || !(r < 1.0)) {
          std::cerr << "error: --rho must lie strictly inside (0,1)\n";
          return kExitUsage;
        }
      }
      return cmd_bench(bench_data, bench_sf, bench_gammas, bench_rhos,
                       bench_modes, bench_out, bench_svg, bench_history_dir);
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const groupot::AuditViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAudit;
  } catch (const groupot::RhoOutOfRange& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
