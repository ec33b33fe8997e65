#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "groupot/data_io.hpp"
#include "groupot/solver.hpp"

namespace groupot {

/// One row of benchmark output; field order is the CSV schema.
struct BenchRecord {
  std::string mode;
  int num_classes = 0;
  int per_class = 0;
  long m = 0;
  long n = 0;
  double gamma = 0.0;  // user-facing gamma (the rho form's overall strength)
  double rho = 0.0;
  long iterations = 0;
  long outer_loops = 0;
  double wall_ms = 0.0;
  double objective = 0.0;
  long long blocks_computed = 0;
  long long blocks_skipped = 0;
  long long upper_bounds_evaluated = 0;
  long long active_set_size_final = 0;
  double group_sparsity = 0.0;
  double marginal_res_a = 0.0;
  double marginal_res_b = 0.0;
  bool converged = false;
};

inline const char* bench_csv_header() {
  return "mode,num_classes,per_class,m,n,gamma,rho,iterations,outer_loops,"
         "wall_ms,objective,blocks_computed,blocks_skipped,"
         "upper_bounds_evaluated,active_set_size_final,group_sparsity,"
         "marginal_res_a,marginal_res_b,converged";
}

inline std::string to_csv_row(const BenchRecord& r) {
  std::string out = r.mode;
  const auto add_l = [&](long long v) { out += ',' + std::to_string(v); };
  const auto add_d = [&](double v) { out += ',' + detail::format_double(v); };
  add_l(r.num_classes);
  add_l(r.per_class);
  add_l(r.m);
  add_l(r.n);
  add_d(r.gamma);
  add_d(r.rho);
  add_l(r.iterations);
  add_l(r.outer_loops);
  add_d(r.wall_ms);
  add_d(r.objective);
  add_l(r.blocks_computed);
  add_l(r.blocks_skipped);
  add_l(r.upper_bounds_evaluated);
  add_l(r.active_set_size_final);
  add_d(r.group_sparsity);
  add_d(r.marginal_res_a);
  add_d(r.marginal_res_b);
  add_l(r.converged ? 1 : 0);
  return out;
}

inline BenchRecord parse_csv_row(const std::string& line) {
  const auto toks = detail::split_csv_line(line);
  if (toks.size() != 19)
    throw ParseError(0, 0, "bench row has " + std::to_string(toks.size()) +
                               " fields, expected 19");
  BenchRecord r;
  std::size_t i = 0;
  r.mode = toks[i++];
  const auto next_d = [&] { return detail::parse_double(toks[i], 0, static_cast<long>(i++)); };
  r.num_classes = static_cast<int>(next_d());
  r.per_class = static_cast<int>(next_d());
  r.m = static_cast<long>(next_d());
  r.n = static_cast<long>(next_d());
  r.gamma = next_d();
  r.rho = next_d();
  r.iterations = static_cast<long>(next_d());
  r.outer_loops = static_cast<long>(next_d());
  r.wall_ms = next_d();
  r.objective = next_d();
  r.blocks_computed = static_cast<long long>(next_d());
  r.blocks_skipped = static_cast<long long>(next_d());
  r.upper_bounds_evaluated = static_cast<long long>(next_d());
  r.active_set_size_final = static_cast<long long>(next_d());
  r.group_sparsity = next_d();
  r.marginal_res_a = next_d();
  r.marginal_res_b = next_d();
  r.converged = next_d() != 0.0;
  return r;
}

/// Builds one record from a finished solve.
inline BenchRecord make_record(const Solution& sol,
                               const ProblemInstance& inst, SolverMode mode,
                               double gamma, double rho, int num_classes,
                               int per_class) {
  BenchRecord r;
  r.mode = to_string(mode);
  r.num_classes = num_classes;
  r.per_class = per_class;
  r.m = static_cast<long>(inst.m());
  r.n = static_cast<long>(inst.n());
  r.gamma = gamma;
  r.rho = rho;
  r.iterations = sol.iterations;
  r.outer_loops = static_cast<long>(sol.stats.outer_loops);
  r.wall_ms =
      std::chrono::duration<double, std::milli>(sol.wall_time).count();
  r.objective = sol.objective;
  r.blocks_computed =
      sol.stats.blocks_in_active_set + sol.stats.blocks_unskipped;
  r.blocks_skipped = sol.stats.blocks_skipped;
  r.upper_bounds_evaluated = sol.stats.upper_bounds_evaluated;
  const PlanDiagnostics diag = plan_diagnostics(sol.plan, inst);
  r.group_sparsity = diag.group_sparsity;
  r.marginal_res_a = diag.marginal_res_a;
  r.marginal_res_b = diag.marginal_res_b;
  r.converged = sol.converged;
  return r;
}

/// Default experiment grid: four group-term balances by seven regularization
/// strengths, run in both solver modes.
struct GridSpec {
  std::vector<double> gammas = {1e3, 1e2, 1e1, 1e0, 1e-1, 1e-2, 1e-3};
  std::vector<double> rhos = {0.2, 0.4, 0.6, 0.8};
  std::vector<SolverMode> modes = {SolverMode::baseline, SolverMode::fast};
  SolverOptions base;
};

/// Runs the grid in deterministic (gamma, rho, mode) order. The sink fires
/// after every run, so callers can flush partial results; each record also
/// lands in the returned vector.
inline std::vector<BenchRecord> run_grid(
    const ProblemInstance& inst, const GridSpec& grid, int num_classes,
    int per_class,
    const std::function<void(const BenchRecord&, const Solution&)>& sink =
        nullptr) {
  std::vector<BenchRecord> rows;
  for (const double gamma : grid.gammas) {
    for (const double rho : grid.rhos) {
      const RegParams p = params_from_rho(gamma, rho);
      for (const SolverMode mode : grid.modes) {
        SolverOptions opts = grid.base;
        opts.mode = mode;
        Solution sol = solve(inst, p, opts);
        BenchRecord rec = make_record(sol, inst, mode, gamma, rho,
                                      num_classes, per_class);
        if (mode != SolverMode::baseline) {
          // final active-set size comes from a fresh build at the solution;
          // the dispatcher's copy is internal to the solve
          rec.active_set_size_final = static_cast<long long>(
              build_active_set(take_snapshot(sol.state, inst), sol.state, p,
                               inst.groups)
                  .count);
        }
        if (sink) sink(rec, sol);
        rows.push_back(std::move(rec));
      }
    }
  }
  return rows;
}

/// Minimal SVG 1.1 bar chart of the per-gamma speedup: wall times are summed
/// over rho for each mode, and each bar is baseline-total / fast-total.
inline void write_speedup_svg(const std::vector<BenchRecord>& rows,
                              const std::string& path) {
  std::map<double, double> base_ms, fast_ms;
  for (const auto& r : rows) {
    if (r.mode == "baseline")
      base_ms[r.gamma] += r.wall_ms;
    else if (r.mode == "fast")
      fast_ms[r.gamma] += r.wall_ms;
  }
  std::vector<std::pair<double, double>> ratios;  // (gamma, ratio)
  for (const auto& [gamma, ms] : base_ms) {
    const auto it = fast_ms.find(gamma);
    if (it != fast_ms.end() && it->second > 0.0)
      ratios.emplace_back(gamma, ms / it->second);
  }
  const int bar_w = 60;
  const int gap = 20;
  const int height = 360;
  const int base_y = 300;
  const int width =
      gap + static_cast<int>(ratios.size()) * (bar_w + gap) + gap;
  double max_ratio = 1.0;
  for (const auto& [g, r] : ratios) max_ratio = std::max(max_ratio, r);

  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
      << width << "\" height=\"" << height << "\">\n";
  out << "  <text x=\"" << gap << "\" y=\"24\" font-size=\"14\">"
      << "wall-time ratio baseline/fast per gamma (rho summed)</text>\n";
  out << "  <line x1=\"" << gap << "\" y1=\"" << base_y << "\" x2=\""
      << width - gap << "\" y2=\"" << base_y
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  int x = gap;
  for (const auto& [gamma, ratio] : ratios) {
    const int h =
        static_cast<int>(ratio / max_ratio * (base_y - 60) + 0.5);
    out << "  <rect x=\"" << x << "\" y=\"" << base_y - h << "\" width=\""
        << bar_w << "\" height=\"" << h << "\" fill=\"#4878a8\"/>\n";
    char label[64];
    std::snprintf(label, sizeof label, "%.2fx", ratio);
    out << "  <text x=\"" << x << "\" y=\"" << base_y - h - 6
        << "\" font-size=\"12\">" << label << "</text>\n";
    std::snprintf(label, sizeof label, "g=%g", gamma);
    out << "  <text x=\"" << x << "\" y=\"" << base_y + 16
        << "\" font-size=\"12\">" << label << "</text>\n";
    x += bar_w + gap;
  }
  out << "</svg>\n";
}

}  // namespace groupot
