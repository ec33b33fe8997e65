#pragma once

#include <chrono>
#include <cstring>
#include <sstream>
#include <utility>

#include "groupot/lbfgs.hpp"
#include "groupot/screening.hpp"

namespace groupot {

enum class SolverMode { baseline, fast, fast_no_lower_bound, audit };

inline const char* to_string(SolverMode m) {
  switch (m) {
    case SolverMode::baseline: return "baseline";
    case SolverMode::fast: return "fast";
    case SolverMode::fast_no_lower_bound: return "fast-no-lb";
    case SolverMode::audit: return "audit";
  }
  return "?";
}

struct SolverOptions {
  int snapshot_interval = 10;  // solver iterations per chunk
  double grad_tol = 1e-6;      // infinity-norm of the dual gradient
  int max_outer_loops = 200;
  int lbfgs_memory = 10;
  SolverMode mode = SolverMode::fast;
};

struct Solution {
  DualState state;
  double objective = 0.0;
  TransportPlan plan;
  GradStats stats;
  int iterations = 0;
  std::chrono::nanoseconds wall_time{0};
  bool converged = false;
  bool line_search_failed = false;
};

/// Counters of what the audit actually verified; any failed check throws
/// AuditViolation instead of being tallied here.
struct AuditReport {
  std::int64_t skip_checks = 0;         // skipped blocks recomputed and found zero
  std::int64_t active_checks = 0;       // active-set members verified nonzero
  std::int64_t column_compares = 0;     // screened columns compared to plain ones
  std::int64_t gradient_calls = 0;
};

namespace detail {

inline DualState unpack_state(const Eigen::VectorXd& x, Eigen::Index m,
                              Eigen::Index n) {
  DualState s;
  s.alpha = x.head(m);
  s.beta = x.tail(n);
  return s;
}

inline MaximizeOptions to_lbfgs_options(const SolverOptions& opts) {
  MaximizeOptions mo;
  mo.chunk_iters = opts.snapshot_interval;
  mo.max_chunks = opts.max_outer_loops;
  mo.memory = opts.lbfgs_memory;
  mo.grad_tol = opts.grad_tol;
  return mo;
}

inline Solution finish_solution(const MaximizeResult& r,
                                const ProblemInstance& inst,
                                const RegParams& p, GradStats stats,
                                std::chrono::nanoseconds elapsed) {
  Solution sol;
  sol.state = unpack_state(r.x, inst.m(), inst.n());
  sol.objective = dual_objective(sol.state, inst, p);
  sol.plan = recover_plan(sol.state, inst, p);
  sol.stats = std::move(stats);
  sol.stats.outer_loops = r.chunks;
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  sol.line_search_failed = r.line_search_failed;
  sol.wall_time = elapsed;
  return sol;
}

}  // namespace detail

/// Plain solver: every gradient block computed exactly on every call.
inline Solution solve_baseline(const ProblemInstance& inst, const RegParams& p,
                               const SolverOptions& opts = {}) {
  validate_instance(inst);
  const Eigen::Index m = inst.m();
  const Eigen::Index n = inst.n();
  const std::int64_t blocks_per_call =
      static_cast<std::int64_t>(inst.groups.num_groups()) * n;
  GradStats stats;

  ObjectiveFn obj = [&](const Eigen::VectorXd& x) {
    const DualState s = detail::unpack_state(x, m, n);
    return dual_objective(s, inst, p);
  };
  GradientFn grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    const DualState s = detail::unpack_state(x, m, n);
    Eigen::VectorXd ga, gb;
    dual_gradient(
        s, inst, p,
        [&](int j, Eigen::VectorXd& gcol) {
          baseline_column_grad(s, inst, p, j, gcol);
        },
        ga, gb);
    out.resize(m + n);
    out.head(m) = ga;
    out.tail(n) = gb;
    ++stats.grad_calls;
    stats.blocks_unskipped += blocks_per_call;
    stats.history.push_back({0, 0, blocks_per_call, 0});
  };

  const auto t0 = std::chrono::steady_clock::now();
  const MaximizeResult r = maximize(obj, grad, Eigen::VectorXd::Zero(m + n),
                                    detail::to_lbfgs_options(opts));
  const auto t1 = std::chrono::steady_clock::now();
  return detail::finish_solution(r, inst, p, std::move(stats), t1 - t0);
}

namespace detail {

/// Shared driver for the screened modes. The audit callbacks, when present,
/// receive every block decision and every rebuilt active set.
inline Solution run_screened(const ProblemInstance& inst, const RegParams& p,
                             const SolverOptions& opts, bool use_active_set,
                             double upper_bound_offset, AuditReport* audit) {
  validate_instance(inst);
  const Eigen::Index m = inst.m();
  const Eigen::Index n = inst.n();
  const auto& groups = inst.groups;
  GradStats stats;
  FastGradDispatcher dispatcher(inst, p, stats, use_active_set,
                                upper_bound_offset);
  DualState zero_state{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(n)};
  dispatcher.init(zero_state);

  // Audit scratch: per-column decisions recorded by the observer, and the
  // reference column recomputed without screening.
  struct BlockDecision {
    int l;
    BlockPath path;
    double bound;
  };
  std::vector<BlockDecision> decisions;
  Eigen::VectorXd ref_col;
  if (audit) {
    dispatcher.set_observer([&](int l, int /*j*/, BlockPath path, double b) {
      decisions.push_back({l, path, b});
    });
  }

  ObjectiveFn obj = [&](const Eigen::VectorXd& x) {
    const DualState s = detail::unpack_state(x, m, n);
    return dual_objective(s, inst, p);
  };

  GradientFn grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    const DualState s = detail::unpack_state(x, m, n);
    dispatcher.begin_call(s);
    Eigen::VectorXd ga, gb;
    dual_gradient(
        s, inst, p,
        [&](int j, Eigen::VectorXd& gcol) {
          if (audit) decisions.clear();
          dispatcher.column(j, gcol);
          if (audit) {
            baseline_column_grad(s, inst, p, j, ref_col);
            if (std::memcmp(gcol.data(), ref_col.data(),
                            sizeof(double) * static_cast<std::size_t>(m)) !=
                0) {
              std::ostringstream msg;
              msg << "screened column " << j << " differs from plain column"
                  << " at call " << stats.grad_calls;
              throw AuditViolation(msg.str());
            }
            ++audit->column_compares;
            for (const auto& dec : decisions) {
              if (dec.path != BlockPath::skipped) continue;
              ++audit->skip_checks;
              const int off = groups.offset(dec.l);
              const int g = groups.size(dec.l);
              for (int i = off; i < off + g; ++i) {
                if (ref_col[i] != 0.0) {
                  std::ostringstream msg;
                  msg << "skipped block (l=" << dec.l << ", j=" << j
                      << ") has nonzero exact gradient at call "
                      << stats.grad_calls << "; upper bound " << dec.bound
                      << " <= tau " << p.tau();
                  throw AuditViolation(msg.str());
                }
              }
            }
          }
        },
        ga, gb);
    dispatcher.end_call();
    out.resize(m + n);
    out.head(m) = ga;
    out.tail(n) = gb;
    if (audit) ++audit->gradient_calls;
  };

  ChunkHook hook = [&](int chunk, const Eigen::VectorXd& x) {
    const DualState s = detail::unpack_state(x, m, n);
    dispatcher.refresh(s, chunk + 1);
    if (audit && use_active_set) {
      // Membership is certified at build time: every member's exact block
      // must be nonzero at the state the lower bounds were evaluated at.
      const ActiveSet& as = dispatcher.active_set();
      Eigen::VectorXd f;
      for (int j = 0; j < as.n; ++j) {
        bool have_col = false;
        for (int l = 0; l < as.num_groups; ++l) {
          if (!as.contains(l, j)) continue;
          if (!have_col) {
            residual_column(s, inst, j, f);
            have_col = true;
          }
          ++audit->active_checks;
          const double z = detail::pos_part_norm(f.data() + groups.offset(l),
                                                 groups.size(l));
          if (!(z > p.tau())) {
            std::ostringstream msg;
            msg << "active-set block (l=" << l << ", j=" << j
                << ") has zero exact gradient at build time: z = " << z
                << ", tau = " << p.tau();
            throw AuditViolation(msg.str());
          }
        }
      }
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  const MaximizeResult r = maximize(obj, grad, Eigen::VectorXd::Zero(m + n),
                                    detail::to_lbfgs_options(opts), hook);
  const auto t1 = std::chrono::steady_clock::now();
  return detail::finish_solution(r, inst, p, std::move(stats), t1 - t0);
}

}  // namespace detail

/// Screened solver; honors SolverMode::fast and fast_no_lower_bound.
/// Converges to the same state, objective, and plan as solve_baseline.
inline Solution solve_fast(const ProblemInstance& inst, const RegParams& p,
                           const SolverOptions& opts = {}) {
  const bool use_active_set = opts.mode != SolverMode::fast_no_lower_bound;
  return detail::run_screened(inst, p, opts, use_active_set, 0.0, nullptr);
}

/// Screened solve with every decision re-verified: skipped blocks are
/// recomputed and must be exactly zero, active-set members must be nonzero
/// when certified, and every screened column must match the plain provider
/// bitwise. Any discrepancy throws AuditViolation — it signals an
/// implementation bug, never an expected outcome.
///
/// upper_bound_offset shifts every computed upper bound and exists for
/// fault-injection tests; leave it at zero otherwise.
inline std::pair<Solution, AuditReport> audit_solve(
    const ProblemInstance& inst, const RegParams& p,
    const SolverOptions& opts = {}, double upper_bound_offset = 0.0) {
  AuditReport report;
  const bool use_active_set = opts.mode != SolverMode::fast_no_lower_bound;
  if (opts.mode == SolverMode::baseline) {
    // Nothing is screened; the plain solve trivially has zero violations.
    Solution sol = solve_baseline(inst, p, opts);
    return {std::move(sol), report};
  }
  Solution sol = detail::run_screened(inst, p, opts, use_active_set,
                                      upper_bound_offset, &report);
  return {std::move(sol), report};
}

/// Dispatches on opts.mode.
inline Solution solve(const ProblemInstance& inst, const RegParams& p,
                      const SolverOptions& opts = {}) {
  switch (opts.mode) {
    case SolverMode::baseline: return solve_baseline(inst, p, opts);
    case SolverMode::fast:
    case SolverMode::fast_no_lower_bound: return solve_fast(inst, p, opts);
    case SolverMode::audit: return audit_solve(inst, p, opts).first;
  }
  throw Error("unknown solver mode");
}

}  // namespace groupot
