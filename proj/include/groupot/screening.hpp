#pragma once

#include <cstdint>
#include <vector>

#include "groupot/dual.hpp"

namespace groupot {

/// Frozen copies of the dual variables together with the three per-(group,
/// column) residual norms the bounds are built from:
///   z = |[f]_+|_2,  k = |f|_2,  o = |[f]_-|_2   for f = alpha + beta_j - c_j.
/// The positive and negative parts split f orthogonally, so z^2 + o^2 = k^2.
struct SnapshotStore {
  Eigen::VectorXd alpha_snap;
  Eigen::VectorXd beta_snap;
  Eigen::MatrixXd z_snap;  // |L| x n
  Eigen::MatrixXd k_snap;  // |L| x n
  Eigen::MatrixXd o_snap;  // |L| x n
  long stamp = 0;
};

/// Rebuilds all three norm matrices from scratch at the given state.
inline SnapshotStore take_snapshot(const DualState& s,
                                   const ProblemInstance& inst,
                                   long stamp = 0) {
  detail::check_dual_dims(s, inst);
  const auto& groups = inst.groups;
  const int num_groups = groups.num_groups();
  SnapshotStore snap;
  snap.alpha_snap = s.alpha;
  snap.beta_snap = s.beta;
  snap.z_snap.resize(num_groups, inst.n());
  snap.k_snap.resize(num_groups, inst.n());
  snap.o_snap.resize(num_groups, inst.n());
  snap.stamp = stamp;
  Eigen::VectorXd f(inst.m());
  for (Eigen::Index j = 0; j < inst.n(); ++j) {
    detail::residual_block(s.alpha.data(), s.beta[j], inst.cost.col(j).data(),
                           static_cast<int>(inst.m()), f.data());
    for (int l = 0; l < num_groups; ++l) {
      const double* fl = f.data() + groups.offset(l);
      const int g = groups.size(l);
      snap.z_snap(l, j) = detail::pos_part_norm(fl, g);
      snap.k_snap(l, j) = detail::vec_norm(fl, g);
      snap.o_snap(l, j) = detail::neg_part_norm(fl, g);
    }
  }
  return snap;
}

/// Per-group and per-column delta norms against a snapshot, computed once per
/// gradient call or active-set build. With these in hand each bound costs
/// O(1), which is what keeps a full bound sweep at O(|L|*n).
struct DeltaNorms {
  Eigen::VectorXd dalpha_pos;   // per group: |[alpha - alpha_snap]_+|_2
  Eigen::VectorXd dalpha_full;  // per group: |alpha - alpha_snap|_2
  Eigen::VectorXd dalpha_neg;   // per group: |[alpha - alpha_snap]_-|_2
  Eigen::VectorXd dbeta;        // beta - beta_snap
  Eigen::VectorXd sqrt_g;       // per group: sqrt(g_l)
};

inline DeltaNorms compute_delta_norms(const DualState& s,
                                      const SnapshotStore& snap,
                                      const GroupPartition& groups) {
  DeltaNorms d;
  const int num_groups = groups.num_groups();
  Eigen::VectorXd dalpha = s.alpha - snap.alpha_snap;
  d.dalpha_pos.resize(num_groups);
  d.dalpha_full.resize(num_groups);
  d.dalpha_neg.resize(num_groups);
  d.sqrt_g.resize(num_groups);
  for (int l = 0; l < num_groups; ++l) {
    const double* dl = dalpha.data() + groups.offset(l);
    const int g = groups.size(l);
    d.dalpha_pos[l] = detail::pos_part_norm(dl, g);
    d.dalpha_full[l] = detail::vec_norm(dl, g);
    d.dalpha_neg[l] = detail::neg_part_norm(dl, g);
    d.sqrt_g[l] = std::sqrt(static_cast<double>(g));
  }
  d.dbeta = s.beta - snap.beta_snap;
  return d;
}

/// Upper bound on the current z of block (l, j):
///   z_bar = z_snap + |[dalpha_l]_+|_2 + sqrt(g_l) * [dbeta_j]_+.
/// Collapses to z_snap exactly when the state equals the snapshot.
inline double upper_bound(int l, int j, const SnapshotStore& snap,
                          const DeltaNorms& d) {
  const double db = d.dbeta[j];
  const double db_pos = db > 0.0 ? db : 0.0;
  return snap.z_snap(l, j) + d.dalpha_pos[l] + d.sqrt_g[l] * db_pos;
}

/// Lower bound on the current z of block (l, j):
///   z_low = k_snap - |dalpha_l| - sqrt(g_l)*|dbeta_j|
///           - o_snap - |[dalpha_l]_-| - sqrt(g_l)*|[dbeta_j]_-|.
/// May be negative; no clamping.
inline double lower_bound(int l, int j, const SnapshotStore& snap,
                          const DeltaNorms& d) {
  const double db = d.dbeta[j];
  const double db_neg = db < 0.0 ? -db : 0.0;
  return snap.k_snap(l, j) - d.dalpha_full[l] - d.sqrt_g[l] * std::abs(db) -
         snap.o_snap(l, j) - d.dalpha_neg[l] - d.sqrt_g[l] * db_neg;
}

/// Full bound sweeps used by the cost-scaling checks; return an accumulated
/// value so the loops cannot be optimized away.
inline double upper_bound_sweep(const SnapshotStore& snap,
                                const DeltaNorms& d) {
  double acc = 0.0;
  const int num_groups = static_cast<int>(snap.z_snap.rows());
  const int n = static_cast<int>(snap.z_snap.cols());
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < num_groups; ++l) acc += upper_bound(l, j, snap, d);
  return acc;
}

inline double lower_bound_sweep(const SnapshotStore& snap,
                                const DeltaNorms& d) {
  double acc = 0.0;
  const int num_groups = static_cast<int>(snap.z_snap.rows());
  const int n = static_cast<int>(snap.z_snap.cols());
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < num_groups; ++l) acc += lower_bound(l, j, snap, d);
  return acc;
}

/// Dense membership matrix for the certified-nonzero set. |L| x n booleans:
/// small at this scale, and membership tests in the gradient hot loop stay
/// branch-predictable.
struct ActiveSet {
  int num_groups = 0;
  int n = 0;
  std::vector<std::uint8_t> member;  // column-major, l + j*num_groups
  std::int64_t count = 0;

  bool contains(int l, int j) const {
    return member[static_cast<std::size_t>(l) +
                  static_cast<std::size_t>(j) * num_groups] != 0;
  }
};

/// Builds the certified-nonzero set {(l,j) : lower_bound > tau} at the given
/// state against the given snapshot. Ties at tau are excluded; they fall to
/// the compute-exactly path, which is always safe.
inline ActiveSet build_active_set(const SnapshotStore& snap,
                                  const DualState& state, const RegParams& p,
                                  const GroupPartition& groups) {
  ActiveSet as;
  as.num_groups = groups.num_groups();
  as.n = static_cast<int>(snap.z_snap.cols());
  as.member.assign(static_cast<std::size_t>(as.num_groups) * as.n, 0);
  const DeltaNorms d = compute_delta_norms(state, snap, groups);
  const double tau = p.tau();
  for (int j = 0; j < as.n; ++j) {
    for (int l = 0; l < as.num_groups; ++l) {
      if (lower_bound(l, j, snap, d) > tau) {
        as.member[static_cast<std::size_t>(l) +
                  static_cast<std::size_t>(j) * as.num_groups] = 1;
        ++as.count;
      }
    }
  }
  return as;
}

/// Operation counters for one solve. The identity
///   blocks_in_active_set + blocks_skipped + blocks_unskipped = |L|*n
/// holds per screened gradient call, and upper bounds are evaluated exactly
/// for the skipped + unskipped blocks. The plain solver books every block as
/// unskipped and evaluates no bounds.
struct GradStats {
  std::int64_t blocks_in_active_set = 0;
  std::int64_t blocks_skipped = 0;
  std::int64_t blocks_unskipped = 0;
  std::int64_t upper_bounds_evaluated = 0;
  std::int64_t outer_loops = 0;
  std::int64_t grad_calls = 0;

  struct PerCall {
    std::int64_t in_active = 0;
    std::int64_t skipped = 0;
    std::int64_t unskipped = 0;
    std::int64_t upper_bounds = 0;
  };
  std::vector<PerCall> history;  // one entry per gradient call
};

/// How the dispatcher handled one block.
enum class BlockPath { in_active_set, skipped, computed_after_bound };

/// Observer invoked per block by the screened dispatcher; the bound argument
/// is the upper bound for bound-checked blocks and NaN for active-set blocks.
using BlockObserver = std::function<void(int l, int j, BlockPath path,
                                         double bound)>;

/// Screened gradient provider.
///
/// Per column, blocks in the active set are computed exactly with no
/// checking; every other block first gets the O(1) upper bound, is written
/// as an exact zero block when the bound certifies z <= tau, and is computed
/// exactly otherwise. Exact computations run through the same kernels as the
/// unscreened provider, so the assembled gradient is bitwise identical to
/// the unscreened one.
class FastGradDispatcher {
 public:
  FastGradDispatcher(const ProblemInstance& inst, const RegParams& p,
                     GradStats& stats, bool use_active_set,
                     double upper_bound_offset = 0.0)
      : inst_(inst),
        params_(p),
        stats_(stats),
        use_active_set_(use_active_set),
        ub_offset_(upper_bound_offset),
        fblock_(inst.groups.total_size()) {}

  /// Takes the initial snapshot at the given state; the active set starts
  /// empty.
  void init(const DualState& s) {
    snap_ = take_snapshot(s, inst_, 0);
    active_.num_groups = inst_.groups.num_groups();
    active_.n = static_cast<int>(inst_.n());
    active_.member.assign(
        static_cast<std::size_t>(active_.num_groups) * active_.n, 0);
    active_.count = 0;
  }

  /// Chunk-boundary refresh: rebuild the active set from lower bounds against
  /// the current snapshot, then retake the snapshot at the current state.
  void refresh(const DualState& s, long stamp) {
    if (use_active_set_)
      active_ = build_active_set(snap_, s, params_, inst_.groups);
    snap_ = take_snapshot(s, inst_, stamp);
  }

  /// Starts one gradient call: precomputes delta norms and opens a fresh
  /// per-call counter record.
  void begin_call(const DualState& s) {
    state_ = &s;
    deltas_ = compute_delta_norms(s, snap_, inst_.groups);
    call_ = GradStats::PerCall{};
  }

  /// Fills the conjugate gradient for column j.
  void column(int j, Eigen::VectorXd& grad_out) {
    const auto& groups = inst_.groups;
    grad_out.resize(inst_.m());
    const double* cj = inst_.cost.col(j).data();
    const double bj = state_->beta[j];
    const double tau = params_.tau();
    for (int l = 0; l < groups.num_groups(); ++l) {
      const int off = groups.offset(l);
      const int g = groups.size(l);
      double* out = grad_out.data() + off;
      if (use_active_set_ && active_.contains(l, j)) {
        compute_exact(off, g, bj, cj, out);
        ++call_.in_active;
        if (observer_)
          observer_(l, j, BlockPath::in_active_set,
                    std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const double zbar = upper_bound(l, j, snap_, deltas_) + ub_offset_;
      ++call_.upper_bounds;
      if (zbar <= tau) {
        std::fill(out, out + g, 0.0);
        ++call_.skipped;
        if (observer_) observer_(l, j, BlockPath::skipped, zbar);
      } else {
        compute_exact(off, g, bj, cj, out);
        ++call_.unskipped;
        if (observer_) observer_(l, j, BlockPath::computed_after_bound, zbar);
      }
    }
  }

  /// Closes the call: folds the per-call counters into the totals and the
  /// history.
  void end_call() {
    stats_.blocks_in_active_set += call_.in_active;
    stats_.blocks_skipped += call_.skipped;
    stats_.blocks_unskipped += call_.unskipped;
    stats_.upper_bounds_evaluated += call_.upper_bounds;
    ++stats_.grad_calls;
    stats_.history.push_back(call_);
  }

  void set_observer(BlockObserver obs) { observer_ = std::move(obs); }

  const SnapshotStore& snapshot() const { return snap_; }
  const ActiveSet& active_set() const { return active_; }
  const DeltaNorms& deltas() const { return deltas_; }

 private:
  void compute_exact(int off, int g, double bj, const double* cj,
                     double* out) {
    detail::residual_block(state_->alpha.data() + off, bj, cj + off, g,
                           fblock_.data());
    detail::grad_block(fblock_.data(), g, params_.gamma(), params_.tau(), out);
  }

  const ProblemInstance& inst_;
  RegParams params_;
  GradStats& stats_;
  bool use_active_set_;
  double ub_offset_;
  Eigen::VectorXd fblock_;
  SnapshotStore snap_;
  ActiveSet active_;
  DeltaNorms deltas_;
  GradStats::PerCall call_{};
  const DualState* state_ = nullptr;
  BlockObserver observer_;
};

}  // namespace groupot
