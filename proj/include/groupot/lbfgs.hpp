#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace groupot {

struct MaximizeOptions {
  int chunk_iters = 10;    // accepted iterations between hook firings
  int max_chunks = 200;    // outer-loop budget
  int memory = 10;         // curvature pairs kept
  double grad_tol = 1e-6;  // infinity-norm stop test, checked at chunk ends
  double wolfe_c1 = 1e-4;  // sufficient-increase constant
  double wolfe_c2 = 0.9;   // curvature constant
  int max_bracket = 40;    // step doublings while bracketing
  int max_zoom = 12;       // refinements inside a bracket
};

struct MaximizeResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;  // accepted steps
  int chunks = 0;      // chunk loops entered
  bool converged = false;
  bool line_search_failed = false;
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
/// Fired after every completed chunk, before the convergence check.
using ChunkHook = std::function<void(int chunk_index, const Eigen::VectorXd& x)>;

namespace detail {

// One line-search trial point along x + t*d, with objective and gradient.
struct LsPoint {
  double t = 0.0;
  double value = 0.0;  // objective (maximization sense)
  double slope = 0.0;  // d' * gradient at the point
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
};

}  // namespace detail

/// Limited-memory BFGS ascent with a strong-Wolfe line search.
///
/// Directions come from the standard two-loop recursion. The line search
/// brackets by doubling and refines by bisection until both the
/// sufficient-increase and strong curvature conditions hold; if the curvature
/// condition cannot be met the best sufficient-increase point is taken and
/// the unusable history pair is dropped rather than aborting the run.
/// Quasi-Newton history persists across chunk boundaries: the hook observes
/// the iterate, it does not restart the solver. A search that cannot make any
/// progress ends the run; if the gradient already meets the tolerance there,
/// the run still counts as converged.
inline MaximizeResult maximize(const ObjectiveFn& objective,
                               const GradientFn& gradient,
                               const Eigen::VectorXd& x0,
                               const MaximizeOptions& opts,
                               const ChunkHook& hook = nullptr) {
  const Eigen::Index dim = x0.size();
  MaximizeResult res;
  res.x = x0;
  res.gradient.resize(dim);
  gradient(res.x, res.gradient);
  res.objective = objective(res.x);

  std::vector<Eigen::VectorXd> s_hist, y_hist;
  std::vector<double> rho_hist;
  Eigen::VectorXd d(dim), q(dim);
  std::vector<double> two_loop_a;

  bool stalled = false;
  bool zero_gradient = false;

  detail::LsPoint trial;
  trial.x.resize(dim);
  trial.grad.resize(dim);
  const auto eval_at = [&](double t, detail::LsPoint& p) {
    p.t = t;
    p.x = res.x + t * d;
    p.value = objective(p.x);
    gradient(p.x, p.grad);
    p.slope = p.grad.dot(d);
  };

  for (int chunk = 0; chunk < opts.max_chunks && !stalled && !zero_gradient;
       ++chunk) {
    ++res.chunks;
    for (int it = 0; it < opts.chunk_iters; ++it) {
      bool accepted = false;
      // A failed search is retried once from the steepest-ascent direction
      // with cleared history; only a failure of that restart ends the run.
      for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
        if (attempt == 1) {
          if (s_hist.empty()) break;
          s_hist.clear();
          y_hist.clear();
          rho_hist.clear();
        }
        // Two-loop recursion applied to the ascent gradient; pairs are
        // stored as s = x_{k+1} - x_k, y = g_k - g_{k+1}, matching the
        // minimization of the negated objective.
        q = res.gradient;
        const std::size_t k = s_hist.size();
        two_loop_a.assign(k, 0.0);
        for (std::size_t i = k; i-- > 0;) {
          two_loop_a[i] = rho_hist[i] * s_hist[i].dot(q);
          q -= two_loop_a[i] * y_hist[i];
        }
        if (k > 0) {
          const double yy = y_hist.back().squaredNorm();
          if (yy > 0.0) q *= s_hist.back().dot(y_hist.back()) / yy;
        }
        for (std::size_t i = 0; i < k; ++i) {
          const double b = rho_hist[i] * y_hist[i].dot(q);
          q += (two_loop_a[i] - b) * s_hist[i];
        }
        d = q;

        double dir_slope = res.gradient.dot(d);
        if (!(dir_slope > 0.0)) {
          s_hist.clear();
          y_hist.clear();
          rho_hist.clear();
          d = res.gradient;
          dir_slope = res.gradient.squaredNorm();
          if (dir_slope == 0.0) {
            zero_gradient = true;
            break;
          }
        }

        // Strong-Wolfe search on h(t) = objective(x + t*d):
        //   h(t) >= h(0) + c1*t*h'(0)   and   |h'(t)| <= c2*h'(0).
        const double f0 = res.objective;
        const double armijo = opts.wolfe_c1 * dir_slope;
        const auto sufficient = [&](const detail::LsPoint& p) {
          return p.value >= f0 + armijo * p.t;
        };
        const auto curvature_ok = [&](const detail::LsPoint& p) {
          return std::abs(p.slope) <= opts.wolfe_c2 * dir_slope;
        };

        double t_init = 1.0;
        if (res.iterations == 0) {
          const double dnorm = d.norm();
          if (dnorm > 0.0) t_init = 1.0 / dnorm;
        }

        bool have_bracket = false;
        detail::LsPoint lo;  // best sufficient-increase point so far
        lo.t = 0.0;
        lo.value = f0;
        lo.slope = dir_slope;
        double hi_t = 0.0;

        // Bracketing: double the step until the increase condition breaks,
        // the objective stops growing, or the slope turns downhill.
        double t = t_init;
        detail::LsPoint prev = lo;
        for (int i = 0; i < opts.max_bracket; ++i) {
          eval_at(t, trial);
          if (!sufficient(trial) || (i > 0 && trial.value <= prev.value)) {
            lo = prev;
            hi_t = trial.t;
            have_bracket = true;
            break;
          }
          if (curvature_ok(trial)) {
            accepted = true;
            break;
          }
          if (trial.slope <= 0.0) {
            lo = trial;
            hi_t = prev.t;
            have_bracket = true;
            break;
          }
          prev = trial;
          t *= 2.0;
        }

        if (!accepted && have_bracket) {
          // Zoom: quadratic interpolation from lo's value/slope and the
          // value at hi, safeguarded by bisection; lo always satisfies the
          // increase condition.
          double hi_value = std::numeric_limits<double>::quiet_NaN();
          for (int i = 0; i < opts.max_zoom; ++i) {
            double cand = 0.5 * (lo.t + hi_t);
            if (std::isfinite(hi_value)) {
              const double dt = hi_t - lo.t;
              const double denom =
                  2.0 * (lo.value + lo.slope * dt - hi_value);
              if (denom != 0.0) {
                const double interp = lo.t + lo.slope * dt * dt / denom;
                const double lo_guard = lo.t + 0.1 * dt;
                const double hi_guard = hi_t - 0.1 * dt;
                const double lim_min = std::min(lo_guard, hi_guard);
                const double lim_max = std::max(lo_guard, hi_guard);
                if (interp >= lim_min && interp <= lim_max) cand = interp;
              }
            }
            if (cand == lo.t || cand == hi_t) break;
            eval_at(cand, trial);
            if (!sufficient(trial) || trial.value <= lo.value) {
              hi_t = cand;
              hi_value = trial.value;
              continue;
            }
            if (curvature_ok(trial)) {
              accepted = true;
              break;
            }
            if (trial.slope * (hi_t - lo.t) <= 0.0) {
              hi_t = lo.t;
              hi_value = lo.value;
            }
            lo = trial;
          }
          if (!accepted && lo.t > 0.0) {
            // No curvature point found; take the best increase point.
            trial = lo;
            accepted = true;
          }
        }
        if (!accepted && !have_bracket && prev.t > 0.0) {
          trial = prev;
          accepted = true;
        }
      }
      if (zero_gradient) break;
      if (!accepted) {
        stalled = true;
        break;
      }

      Eigen::VectorXd s = trial.x - res.x;
      Eigen::VectorXd y = res.gradient - trial.grad;
      const double sy = s.dot(y);
      if (sy > 1e-10 * s.norm() * y.norm()) {
        if (static_cast<int>(s_hist.size()) == opts.memory) {
          s_hist.erase(s_hist.begin());
          y_hist.erase(y_hist.begin());
          rho_hist.erase(rho_hist.begin());
        }
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        rho_hist.push_back(1.0 / sy);
      }
      res.x = trial.x;
      res.gradient = trial.grad;
      res.objective = trial.value;
      ++res.iterations;
    }

    if (stalled) break;
    if (hook) hook(res.chunks - 1, res.x);
    if (res.gradient.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.converged = true;
      break;
    }
  }

  if (!res.converged)
    res.converged = res.gradient.lpNorm<Eigen::Infinity>() <= opts.grad_tol;
  res.line_search_failed = stalled && !res.converged;
  return res;
}

}  // namespace groupot
