#pragma once

#include <functional>

#include "groupot/regularizer.hpp"

namespace groupot {

/// Dual variables of the smooth relaxed problem.
struct DualState {
  Eigen::VectorXd alpha;  // length m
  Eigen::VectorXd beta;   // length n
};

namespace detail {

inline void check_dual_dims(const DualState& s, const ProblemInstance& inst) {
  if (s.alpha.size() != inst.m() || s.beta.size() != inst.n())
    throw DimensionMismatch(
        "dual state is (" + std::to_string(s.alpha.size()) + "," +
        std::to_string(s.beta.size()) + "), instance is (" +
        std::to_string(inst.m()) + "," + std::to_string(inst.n()) + ")");
}

}  // namespace detail

/// Materializes the residual column f_j = alpha + beta_j*1 - c_j.
inline void residual_column(const DualState& s, const ProblemInstance& inst,
                            Eigen::Index j, Eigen::VectorXd& f) {
  f.resize(inst.m());
  detail::residual_block(s.alpha.data(), s.beta[j], inst.cost.col(j).data(),
                         static_cast<int>(inst.m()), f.data());
}

/// Smooth relaxed dual value: a'alpha + b'beta - sum_j psi(f_j).
/// Concave in (alpha, beta); the same code serves both solver modes so their
/// line searches observe identical values.
inline double dual_objective(const DualState& s, const ProblemInstance& inst,
                             const RegParams& p) {
  detail::check_dual_dims(s, inst);
  const auto& groups = inst.groups;
  double psi_sum = 0.0;
  Eigen::VectorXd f(inst.m());
  for (Eigen::Index j = 0; j < inst.n(); ++j) {
    detail::residual_block(s.alpha.data(), s.beta[j], inst.cost.col(j).data(),
                           static_cast<int>(inst.m()), f.data());
    for (int l = 0; l < groups.num_groups(); ++l)
      psi_sum += detail::psi_block(f.data() + groups.offset(l), groups.size(l),
                                   p.gamma(), p.mu(), p.tau());
  }
  return s.alpha.dot(inst.a) + s.beta.dot(inst.b) - psi_sum;
}

/// Fills grad_out (length m) with the conjugate gradient for column j.
/// Providers: the plain per-block route, or the screening dispatcher.
using ColumnGradFn = std::function<void(int j, Eigen::VectorXd& grad_out)>;

/// Plain (unscreened) column provider: every block computed exactly.
inline void baseline_column_grad(const DualState& s,
                                 const ProblemInstance& inst,
                                 const RegParams& p, int j,
                                 Eigen::VectorXd& grad_out) {
  const auto& groups = inst.groups;
  grad_out.resize(inst.m());
  const double* cj = inst.cost.col(j).data();
  const double bj = s.beta[j];
  thread_local Eigen::VectorXd fblock;
  for (int l = 0; l < groups.num_groups(); ++l) {
    const int off = groups.offset(l);
    const int g = groups.size(l);
    if (fblock.size() < g) fblock.resize(g);
    detail::residual_block(s.alpha.data() + off, bj, cj + off, g,
                           fblock.data());
    detail::grad_block(fblock.data(), g, p.gamma(), p.tau(),
                       grad_out.data() + off);
  }
}

/// Gradient of the dual objective assembled from per-column conjugate
/// gradients: grad_alpha = a - sum_j g_j and grad_beta_j = b_j - 1'g_j.
///
/// Columns are consumed in ascending j and the beta sums accumulate entries
/// in ascending index order, so two providers that emit bitwise-equal
/// columns yield bitwise-equal gradients.
inline void dual_gradient(const DualState& s, const ProblemInstance& inst,
                          const RegParams& p, const ColumnGradFn& column_grad,
                          Eigen::VectorXd& grad_alpha,
                          Eigen::VectorXd& grad_beta) {
  detail::check_dual_dims(s, inst);
  (void)p;
  grad_alpha = inst.a;
  grad_beta.resize(inst.n());
  Eigen::VectorXd gcol(inst.m());
  for (Eigen::Index j = 0; j < inst.n(); ++j) {
    column_grad(static_cast<int>(j), gcol);
    grad_alpha -= gcol;
    grad_beta[j] =
        inst.b[j] - detail::sum_entries(gcol.data(), static_cast<int>(inst.m()));
  }
}

/// Convenience overload using the unscreened provider.
inline void dual_gradient(const DualState& s, const ProblemInstance& inst,
                          const RegParams& p, Eigen::VectorXd& grad_alpha,
                          Eigen::VectorXd& grad_beta) {
  dual_gradient(
      s, inst, p,
      [&](int j, Eigen::VectorXd& out) {
        baseline_column_grad(s, inst, p, j, out);
      },
      grad_alpha, grad_beta);
}

/// Recovers the transport plan column-by-column: t_j = grad psi(f_j).
/// Well-defined at any state, optimal or not.
inline TransportPlan recover_plan(const DualState& s,
                                  const ProblemInstance& inst,
                                  const RegParams& p) {
  detail::check_dual_dims(s, inst);
  TransportPlan t;
  t.plan.resize(inst.m(), inst.n());
  Eigen::VectorXd gcol(inst.m());
  for (Eigen::Index j = 0; j < inst.n(); ++j) {
    baseline_column_grad(s, inst, p, static_cast<int>(j), gcol);
    t.plan.col(j) = gcol;
  }
  return t;
}

struct PlanDiagnostics {
  double marginal_res_a = 0.0;  // |T*1 - a|_inf
  double marginal_res_b = 0.0;  // |T'*1 - b|_inf
  double group_sparsity = 0.0;  // fraction of (group, column) blocks == 0
  double mass = 0.0;            // sum of all plan entries
};

/// Reported, not asserted: the smooth relaxed dual does not promise exact
/// marginals, so residuals come back as data.
inline PlanDiagnostics plan_diagnostics(const TransportPlan& t,
                                        const ProblemInstance& inst) {
  if (t.plan.rows() != inst.m() || t.plan.cols() != inst.n())
    throw DimensionMismatch("plan is " + std::to_string(t.plan.rows()) + "x" +
                            std::to_string(t.plan.cols()));
  PlanDiagnostics d;
  d.marginal_res_a =
      (t.plan.rowwise().sum() - inst.a).cwiseAbs().maxCoeff();
  d.marginal_res_b =
      (t.plan.colwise().sum().transpose() - inst.b).cwiseAbs().maxCoeff();
  d.mass = t.plan.sum();
  const auto& groups = inst.groups;
  long zero_blocks = 0;
  for (Eigen::Index j = 0; j < inst.n(); ++j) {
    for (int l = 0; l < groups.num_groups(); ++l) {
      bool all_zero = true;
      for (int i = groups.offset(l); i < groups.offset(l) + groups.size(l);
           ++i) {
        if (t.plan(i, j) != 0.0) {
          all_zero = false;
          break;
        }
      }
      if (all_zero) ++zero_blocks;
    }
  }
  d.group_sparsity = static_cast<double>(zero_blocks) /
                     (static_cast<double>(groups.num_groups()) *
                      static_cast<double>(inst.n()));
  return d;
}

}  // namespace groupot
