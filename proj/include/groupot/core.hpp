#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "groupot/errors.hpp"

namespace groupot {

/// Partition of the source indices {0..m-1} into contiguous labeled blocks.
///
/// Blocks are disjoint, cover the full index range, and every block holds at
/// least one index. Contiguity makes per-group slicing allocation-free, so
/// data loaders sort source rows by label before building a partition.
class GroupPartition {
 public:
  explicit GroupPartition(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw PartitionMismatch("at least one group required");
    offsets_.reserve(sizes_.size() + 1);
    offsets_.push_back(0);
    for (std::size_t l = 0; l < sizes_.size(); ++l) {
      if (sizes_[l] < 1)
        throw PartitionMismatch("group " + std::to_string(l) +
                                " has non-positive size " +
                                std::to_string(sizes_[l]));
      offsets_.push_back(offsets_.back() + sizes_[l]);
    }
  }

  int num_groups() const { return static_cast<int>(sizes_.size()); }
  int total_size() const { return offsets_.back(); }
  int offset(int l) const { return offsets_[static_cast<std::size_t>(l)]; }
  int size(int l) const { return sizes_[static_cast<std::size_t>(l)]; }
  const std::vector<int>& sizes() const { return sizes_; }
  /// num_groups()+1 boundary offsets, starting at 0 and ending at total_size().
  const std::vector<int>& offsets() const { return offsets_; }

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
};

/// A discrete transport problem: cost matrix, marginals, and the group
/// structure of the source side.
struct ProblemInstance {
  Eigen::MatrixXd cost;  // m x n, squared-distance units, non-negative
  Eigen::VectorXd a;     // source marginal, length m, sums to 1
  Eigen::VectorXd b;     // target marginal, length n, sums to 1
  GroupPartition groups;

  Eigen::Index m() const { return cost.rows(); }
  Eigen::Index n() const { return cost.cols(); }
};

/// Regularization strengths. The skip threshold tau is always derived from
/// the current (gamma, mu) pair, never stored.
class RegParams {
 public:
  RegParams(double gamma, double mu) : gamma_(gamma), mu_(mu) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw Error("gamma must be positive, got " + std::to_string(gamma));
    if (!(mu > 0.0) || !std::isfinite(mu))
      throw Error("mu must be positive, got " + std::to_string(mu));
  }

  double gamma() const { return gamma_; }
  double mu() const { return mu_; }
  double tau() const { return mu_ * gamma_; }

 private:
  double gamma_;
  double mu_;
};

struct TransportPlan {
  Eigen::MatrixXd plan;  // m x n, non-negative mass
};

namespace detail {

// Neumaier-compensated sum; keeps the marginal normalization check meaningful
// at its 1e-12 tolerance even for long vectors.
inline double compensated_sum(const Eigen::VectorXd& v) {
  double sum = 0.0;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = v[i];
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

inline void check_marginal(const Eigen::VectorXd& v, char which) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0) || !std::isfinite(v[i]))
      throw MarginalNotNormalized(
          which, i,
          "entry " + std::to_string(i) + " = " + std::to_string(v[i]) +
              " is negative or non-finite");
  }
  const double sum = compensated_sum(v);
  if (std::abs(sum - 1.0) > 1e-12)
    throw MarginalNotNormalized(
        which, -1, "sum = " + std::to_string(sum) + " differs from 1");
}

}  // namespace detail

/// Checks every ProblemInstance invariant; throws the first violation found.
inline void validate_instance(const ProblemInstance& inst) {
  for (Eigen::Index j = 0; j < inst.cost.cols(); ++j) {
    for (Eigen::Index i = 0; i < inst.cost.rows(); ++i) {
      const double c = inst.cost(i, j);
      if (!(c >= 0.0) || !std::isfinite(c)) throw NegativeCost(i, j, c);
    }
  }
  if (inst.a.size() != inst.cost.rows())
    throw DimensionMismatch("marginal a has length " +
                            std::to_string(inst.a.size()) + ", cost has " +
                            std::to_string(inst.cost.rows()) + " rows");
  if (inst.b.size() != inst.cost.cols())
    throw DimensionMismatch("marginal b has length " +
                            std::to_string(inst.b.size()) + ", cost has " +
                            std::to_string(inst.cost.cols()) + " columns");
  detail::check_marginal(inst.a, 'a');
  detail::check_marginal(inst.b, 'b');
  if (inst.groups.total_size() != inst.cost.rows())
    throw PartitionMismatch("partition covers " +
                            std::to_string(inst.groups.total_size()) +
                            " indices, cost has " +
                            std::to_string(inst.cost.rows()) + " rows");
}

/// Converts the rho-balanced form of the regularizer to (gamma, mu) form.
///
/// The rho form gamma*(0.5*(1-rho)*|t|^2 + rho*sum_l |t_l|) equals the
/// (gamma, mu) form term by term with gamma_eff = gamma*(1-rho) and
/// mu_eff = rho/(1-rho); the skip threshold becomes tau = gamma*rho.
/// Both endpoints are rejected: rho = 0 removes the group term and rho = 1
/// removes the smooth term the conjugate's closed form needs.
inline RegParams params_from_rho(double gamma, double rho) {
  if (!(rho > 0.0) || !(rho < 1.0)) throw RhoOutOfRange(rho);
  return RegParams(gamma * (1.0 - rho), rho / (1.0 - rho));
}

/// Per-column penalty gamma*(0.5*|t|^2 + mu*sum_l |t_{[l]}|).
inline double regularizer_value(const Eigen::VectorXd& column,
                                const GroupPartition& groups,
                                const RegParams& p) {
  if (column.size() != groups.total_size())
    throw DimensionMismatch("column length " + std::to_string(column.size()) +
                            " vs partition size " +
                            std::to_string(groups.total_size()));
  double group_norms = 0.0;
  for (int l = 0; l < groups.num_groups(); ++l)
    group_norms += column.segment(groups.offset(l), groups.size(l)).norm();
  return p.gamma() * (0.5 * column.squaredNorm() + p.mu() * group_norms);
}

/// Transport cost <T,C>_F plus the regularizer summed over plan columns.
inline double primal_objective(const TransportPlan& t,
                               const ProblemInstance& inst,
                               const RegParams& p) {
  if (t.plan.rows() != inst.cost.rows() || t.plan.cols() != inst.cost.cols())
    throw DimensionMismatch("plan is " + std::to_string(t.plan.rows()) + "x" +
                            std::to_string(t.plan.cols()) + ", cost is " +
                            std::to_string(inst.cost.rows()) + "x" +
                            std::to_string(inst.cost.cols()));
  double value = t.plan.cwiseProduct(inst.cost).sum();
  for (Eigen::Index j = 0; j < t.plan.cols(); ++j)
    value += regularizer_value(t.plan.col(j), inst.groups, p);
  return value;
}

}  // namespace groupot
