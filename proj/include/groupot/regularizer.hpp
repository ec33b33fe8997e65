#pragma once

#include <algorithm>
#include <cmath>

#include "groupot/core.hpp"

#if defined(__GNUC__) || defined(__clang__)
#define GROUPOT_NOINLINE __attribute__((noinline))
#else
#define GROUPOT_NOINLINE
#endif

namespace groupot {
namespace detail {

// Scalar reduction kernels. They are deliberately out-of-line so that every
// caller — snapshot construction, the unscreened gradient path, and the
// screened dispatcher — shares one compiled instance and therefore one
// rounding order. The solver's two gradient routes are asserted bitwise
// equal, which this single-instance rule makes hold by construction.

GROUPOT_NOINLINE inline double pos_part_norm(const double* f, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = f[i] > 0.0 ? f[i] : 0.0;
    acc += v * v;
  }
  return std::sqrt(acc);
}

GROUPOT_NOINLINE inline double neg_part_norm(const double* f, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = f[i] < 0.0 ? f[i] : 0.0;
    acc += v * v;
  }
  return std::sqrt(acc);
}

GROUPOT_NOINLINE inline double vec_norm(const double* f, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f[i] * f[i];
  return std::sqrt(acc);
}

GROUPOT_NOINLINE inline double sum_entries(const double* v, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += v[i];
  return acc;
}

// f[i] = alpha[i] + beta_j - cost[i]; elementwise, so any call site rounds
// identically.
inline void residual_block(const double* alpha, double beta_j,
                           const double* cost, int n, double* out) {
  for (int i = 0; i < n; ++i) out[i] = alpha[i] + beta_j - cost[i];
}

// Soft-thresholded block map: out = [1 - tau/z]_+ * [f]_+ / gamma with
// z = |[f]_+|_2. Writes literal zeros when z <= tau so that skipped and
// computed zero blocks are indistinguishable down to the bit pattern.
// Returns z.
GROUPOT_NOINLINE inline double grad_block(const double* f, int n, double gamma,
                                          double tau, double* out) {
  const double z = pos_part_norm(f, n);
  if (z <= tau) {
    std::fill(out, out + n, 0.0);
    return z;
  }
  const double scale = (1.0 - tau / z) / gamma;
  for (int i = 0; i < n; ++i) out[i] = f[i] > 0.0 ? scale * f[i] : 0.0;
  return z;
}

// Conjugate value of one block: f'g* - gamma*(0.5*|g*|^2 + mu*|g*|), with g*
// the soft-thresholded block map above. Zero when the block thresholds out.
GROUPOT_NOINLINE inline double psi_block(const double* f, int n, double gamma,
                                         double mu, double tau) {
  const double z = pos_part_norm(f, n);
  if (z <= tau) return 0.0;
  const double scale = (1.0 - tau / z) / gamma;
  double dot = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = f[i] > 0.0 ? scale * f[i] : 0.0;
    dot += f[i] * g;
    sq += g * g;
  }
  return dot - gamma * (0.5 * sq + mu * std::sqrt(sq));
}

}  // namespace detail

/// One gradient block of the conjugate, plus the thresholding norm that
/// decided its fate.
struct GradBlockResult {
  Eigen::VectorXd block;  // non-negative; exactly zero when is_zero
  bool is_zero = false;   // true iff z_value <= mu*gamma
  double z_value = 0.0;   // |[f]_+|_2 of the input block
};

/// Soft-thresholded gradient block of the conjugate for a single group.
inline GradBlockResult grad_psi_block(const Eigen::VectorXd& f_block,
                                      const RegParams& p) {
  GradBlockResult r;
  r.block.resize(f_block.size());
  r.z_value = detail::grad_block(f_block.data(),
                                 static_cast<int>(f_block.size()), p.gamma(),
                                 p.tau(), r.block.data());
  r.is_zero = r.z_value <= p.tau();
  return r;
}

/// Conjugate of the group-sparse regularizer, summed over groups.
inline double psi_value(const Eigen::VectorXd& f, const GroupPartition& groups,
                        const RegParams& p) {
  if (f.size() != groups.total_size())
    throw DimensionMismatch("vector length " + std::to_string(f.size()) +
                            " vs partition size " +
                            std::to_string(groups.total_size()));
  double value = 0.0;
  for (int l = 0; l < groups.num_groups(); ++l)
    value += detail::psi_block(f.data() + groups.offset(l), groups.size(l),
                               p.gamma(), p.mu(), p.tau());
  return value;
}

/// Gradient of the conjugate: the block map applied to every group in
/// partition order.
inline Eigen::VectorXd grad_psi_full(const Eigen::VectorXd& f,
                                     const GroupPartition& groups,
                                     const RegParams& p) {
  if (f.size() != groups.total_size())
    throw DimensionMismatch("vector length " + std::to_string(f.size()) +
                            " vs partition size " +
                            std::to_string(groups.total_size()));
  Eigen::VectorXd out(f.size());
  for (int l = 0; l < groups.num_groups(); ++l)
    detail::grad_block(f.data() + groups.offset(l), groups.size(l), p.gamma(),
                       p.tau(), out.data() + groups.offset(l));
  return out;
}

}  // namespace groupot
