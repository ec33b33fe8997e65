#include <catch2/catch_amalgamated.hpp>

#include "groupot/core.hpp"
#include "test_util.hpp"

using namespace groupot;

TEST_CASE("group partition offsets and sizes") {
  GroupPartition gp({2, 3, 1});
  REQUIRE(gp.num_groups() == 3);
  REQUIRE(gp.total_size() == 6);
  REQUIRE(gp.offset(0) == 0);
  REQUIRE(gp.offset(1) == 2);
  REQUIRE(gp.offset(2) == 5);
  REQUIRE(gp.size(1) == 3);
  REQUIRE(gp.offsets() == std::vector<int>{0, 2, 5, 6});

  REQUIRE_THROWS_AS(GroupPartition({}), PartitionMismatch);
  REQUIRE_THROWS_AS(GroupPartition({2, 0}), PartitionMismatch);
  REQUIRE_THROWS_AS(GroupPartition({-1}), PartitionMismatch);
}

TEST_CASE("validate_instance accepts the trivial uniform instance") {
  auto inst = testutil::make_instance(Eigen::MatrixXd::Zero(2, 2), {2});
  REQUIRE_NOTHROW(validate_instance(inst));
}

TEST_CASE("validate_instance rejects an unnormalized marginal") {
  auto inst = testutil::make_instance(Eigen::MatrixXd::Zero(2, 2), {2});
  inst.a << 0.6, 0.6;
  REQUIRE_THROWS_AS(validate_instance(inst), MarginalNotNormalized);
  inst.a << -0.5, 1.5;
  try {
    validate_instance(inst);
    FAIL("expected MarginalNotNormalized");
  } catch (const MarginalNotNormalized& e) {
    REQUIRE(e.which == 'a');
    REQUIRE(e.index == 0);  // first offending entry
  }
}

TEST_CASE("validate_instance rejects a negative cost and names the entry") {
  auto inst = testutil::make_instance(Eigen::MatrixXd::Zero(2, 3), {1, 1});
  inst.cost(1, 0) = -1.0;
  try {
    validate_instance(inst);
    FAIL("expected NegativeCost");
  } catch (const NegativeCost& e) {
    REQUIRE(e.row == 1);
    REQUIRE(e.col == 0);
  }
}

TEST_CASE("validate_instance rejects a partition covering the wrong m") {
  auto inst = testutil::make_instance(Eigen::MatrixXd::Zero(3, 2), {2, 1});
  inst.groups = GroupPartition({2, 2});
  REQUIRE_THROWS_AS(validate_instance(inst), PartitionMismatch);
}

TEST_CASE("validate_instance uses a compensated marginal sum") {
  // 12800 copies of 1/12800 must pass the 1e-12 check even though a naive
  // running sum can drift past it.
  const int m = 12800;
  auto inst = testutil::make_instance(Eigen::MatrixXd::Zero(m, 2),
                                      std::vector<int>(1280, 10));
  REQUIRE_NOTHROW(validate_instance(inst));
}

namespace {

// Independent evaluation of the rho-balanced penalty
// gamma*(0.5*(1-rho)*|t|^2 + rho*sum_l |t_l|).
double rho_form_penalty(const Eigen::VectorXd& t, const GroupPartition& gp,
                        double gamma, double rho) {
  double norms = 0.0;
  for (int l = 0; l < gp.num_groups(); ++l)
    norms += t.segment(gp.offset(l), gp.size(l)).norm();
  return gamma * (0.5 * (1.0 - rho) * t.squaredNorm() + rho * norms);
}

}  // namespace

TEST_CASE("params_from_rho frozen conversions") {
  const RegParams p1 = params_from_rho(1.0, 0.5);
  REQUIRE(p1.gamma() == 0.5);
  REQUIRE(p1.mu() == 1.0);
  REQUIRE(p1.tau() == 0.5);

  const RegParams p2 = params_from_rho(10.0, 0.8);
  REQUIRE(p2.gamma() == Catch::Approx(2.0).margin(1e-15));
  REQUIRE(p2.mu() == Catch::Approx(4.0).margin(1e-14));
  REQUIRE(p2.tau() == Catch::Approx(8.0).margin(1e-14));
}

TEST_CASE("params_from_rho rejects both interval endpoints") {
  REQUIRE_THROWS_AS(params_from_rho(1.0, 0.0), RhoOutOfRange);
  REQUIRE_THROWS_AS(params_from_rho(1.0, 1.0), RhoOutOfRange);
  REQUIRE_THROWS_AS(params_from_rho(1.0, -0.2), RhoOutOfRange);
  REQUIRE_THROWS_AS(params_from_rho(1.0, 1.3), RhoOutOfRange);
  REQUIRE_THROWS_AS(RegParams(0.0, 1.0), Error);
  REQUIRE_THROWS_AS(RegParams(1.0, -1.0), Error);
}

TEST_CASE("rho form and converted mu form agree on random vectors") {
  std::mt19937_64 eng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(eng() % 12);
    GroupPartition gp(testutil::random_sizes(eng, m, 4));
    const Eigen::VectorXd t = testutil::random_vector(eng, m, 0.0, 3.0);
    std::uniform_real_distribution<double> gd(0.05, 20.0), rd(0.01, 0.99);
    const double gamma = gd(eng);
    const double rho = rd(eng);
    const RegParams p = params_from_rho(gamma, rho);
    const double mu_form = regularizer_value(t, gp, p);
    const double rho_form = rho_form_penalty(t, gp, gamma, rho);
    REQUIRE(mu_form ==
            Catch::Approx(rho_form).epsilon(1e-12).margin(1e-300));
    REQUIRE(p.tau() == Catch::Approx(gamma * rho).epsilon(1e-12));
  }
}

TEST_CASE("primal objective of the zero plan is zero") {
  std::mt19937_64 eng(7);
  auto inst =
      testutil::make_instance(testutil::random_matrix(eng, 4, 3, 0.0, 2.0),
                              {2, 2});
  TransportPlan t{Eigen::MatrixXd::Zero(4, 3)};
  REQUIRE(primal_objective(t, inst, RegParams(1.0, 1.0)) == 0.0);
}

TEST_CASE("primal objective hand example") {
  // one cell: <T,C> = 2, penalty = gamma*(0.5*1 + mu*1) = 1.5
  auto inst = testutil::make_instance(Eigen::MatrixXd::Constant(1, 1, 2.0),
                                      {1});
  TransportPlan t{Eigen::MatrixXd::Constant(1, 1, 1.0)};
  REQUIRE(primal_objective(t, inst, RegParams(1.0, 1.0)) ==
          Catch::Approx(3.5).margin(1e-15));
}

TEST_CASE("primal objective is linear in the cost with the plan fixed") {
  std::mt19937_64 eng(11);
  auto cost = testutil::random_matrix(eng, 5, 4, 0.0, 3.0);
  auto inst = testutil::make_instance(cost, {2, 3});
  auto inst2 = testutil::make_instance(2.0 * cost, {2, 3});
  TransportPlan t{testutil::random_matrix(eng, 5, 4, 0.0, 0.5)};
  const RegParams p(0.7, 1.3);
  const double transport = t.plan.cwiseProduct(inst.cost).sum();
  const double before = primal_objective(t, inst, p);
  const double after = primal_objective(t, inst2, p);
  REQUIRE(after - before == Catch::Approx(transport).epsilon(1e-12));
}

TEST_CASE("primal objective is invariant under joint column permutation") {
  std::mt19937_64 eng(13);
  auto cost = testutil::random_matrix(eng, 6, 5, 0.0, 4.0);
  auto inst = testutil::make_instance(cost, {3, 3});
  TransportPlan t{testutil::random_matrix(eng, 6, 5, 0.0, 1.0)};
  const RegParams p(1.2, 0.4);
  const double base = primal_objective(t, inst, p);

  std::vector<int> perm{4, 2, 0, 1, 3};
  Eigen::MatrixXd cost_p(6, 5), plan_p(6, 5);
  for (int j = 0; j < 5; ++j) {
    cost_p.col(j) = cost.col(perm[static_cast<std::size_t>(j)]);
    plan_p.col(j) = t.plan.col(perm[static_cast<std::size_t>(j)]);
  }
  auto inst_p = testutil::make_instance(cost_p, {3, 3});
  const double permuted = primal_objective({plan_p}, inst_p, p);
  REQUIRE(permuted == Catch::Approx(base).epsilon(1e-13));
}

TEST_CASE("primal objective rejects mismatched dimensions") {
  auto inst = testutil::make_instance(Eigen::MatrixXd::Zero(2, 2), {2});
  TransportPlan t{Eigen::MatrixXd::Zero(3, 2)};
  REQUIRE_THROWS_AS(primal_objective(t, inst, RegParams(1.0, 1.0)),
                    DimensionMismatch);
}
