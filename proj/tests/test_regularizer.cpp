#include <catch2/catch_amalgamated.hpp>
#include <cstring>

#include "groupot/regularizer.hpp"
#include "test_util.hpp"

using namespace groupot;

namespace {

// Brute-force oracle for the block map: minimizes
// 0.5*|g - [f]_+/gamma|^2 + mu*|g| over a fine non-negative grid.
Eigen::Vector2d prox_oracle_2d(const Eigen::Vector2d& f, double gamma,
                               double mu, double hi, double step) {
  const Eigen::Vector2d fplus(std::max(f[0], 0.0) / gamma,
                              std::max(f[1], 0.0) / gamma);
  Eigen::Vector2d best(0.0, 0.0);
  double best_val = std::numeric_limits<double>::infinity();
  for (double g0 = 0.0; g0 <= hi; g0 += step) {
    for (double g1 = 0.0; g1 <= hi; g1 += step) {
      const double d0 = g0 - fplus[0];
      const double d1 = g1 - fplus[1];
      const double val =
          0.5 * (d0 * d0 + d1 * d1) + mu * std::sqrt(g0 * g0 + g1 * g1);
      if (val < best_val) {
        best_val = val;
        best = Eigen::Vector2d(g0, g1);
      }
    }
  }
  return best;
}

bool exactly_zero(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) return false;
  return true;
}

}  // namespace

TEST_CASE("all-negative input yields the exact zero block") {
  Eigen::VectorXd f(2);
  f << -1.0, -2.0;
  const auto r = grad_psi_block(f, RegParams(1.0, 1.0));
  REQUIRE(r.z_value == 0.0);
  REQUIRE(r.is_zero);
  REQUIRE(exactly_zero(r.block));
}

TEST_CASE("block map matches the grid-minimizer oracle at [3,4]") {
  Eigen::VectorXd f(2);
  f << 3.0, 4.0;
  const auto r = grad_psi_block(f, RegParams(1.0, 1.0));
  REQUIRE(r.z_value == 5.0);
  REQUIRE_FALSE(r.is_zero);
  REQUIRE(r.block[0] == Catch::Approx(2.4).margin(1e-14));
  REQUIRE(r.block[1] == Catch::Approx(3.2).margin(1e-14));

  const Eigen::Vector2d oracle =
      prox_oracle_2d(Eigen::Vector2d(3.0, 4.0), 1.0, 1.0, 5.0, 1e-3);
  REQUIRE(r.block[0] == Catch::Approx(oracle[0]).margin(2e-3));
  REQUIRE(r.block[1] == Catch::Approx(oracle[1]).margin(2e-3));
}

TEST_CASE("grid oracle confirms thresholding on random blocks") {
  std::mt19937_64 eng(314);
  std::uniform_real_distribution<double> fd(-2.0, 2.0), gd(0.5, 2.0),
      md(0.2, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd f(2);
    f << fd(eng), fd(eng);
    const double gamma = gd(eng);
    const double mu = md(eng);
    const auto r = grad_psi_block(f, RegParams(gamma, mu));
    const Eigen::Vector2d oracle =
        prox_oracle_2d(f.head<2>(), gamma, mu, 4.0, 1e-3);
    REQUIRE(r.block[0] == Catch::Approx(oracle[0]).margin(2e-3));
    REQUIRE(r.block[1] == Catch::Approx(oracle[1]).margin(2e-3));
  }
}

TEST_CASE("threshold boundary zeroes the block at z equal to mu*gamma") {
  // z = |(0.6, 0.8)_+| = 1 = mu*gamma: the clamp takes the zero branch.
  Eigen::VectorXd f(2);
  f << 0.6, 0.8;
  const auto r = grad_psi_block(f, RegParams(1.0, 1.0));
  REQUIRE(r.z_value == 1.0);
  REQUIRE(r.is_zero);
  REQUIRE(exactly_zero(r.block));

  // same boundary with an exactly representable norm
  Eigen::VectorXd f2(2);
  f2 << 3.0, 4.0;
  const auto r2 = grad_psi_block(f2, RegParams(1.0, 5.0));
  REQUIRE(r2.z_value == 5.0);
  REQUIRE(r2.is_zero);
  REQUIRE(exactly_zero(r2.block));
}

TEST_CASE("psi values for frozen hand inputs") {
  GroupPartition one_group({2});
  Eigen::VectorXd f(2);

  f << -5.0, -5.0;
  REQUIRE(psi_value(f, one_group, RegParams(1.0, 1.0)) == 0.0);

  f << 3.0, 4.0;  // g* = (2.4, 3.2): f'g* = 20, penalty = 12
  REQUIRE(psi_value(f, one_group, RegParams(1.0, 1.0)) ==
          Catch::Approx(8.0).margin(1e-13));

  f << 6.0, 8.0;  // gamma = 2: g* = (2.4, 3.2): f'g* = 40, penalty = 24
  REQUIRE(psi_value(f, one_group, RegParams(2.0, 1.0)) ==
          Catch::Approx(16.0).margin(1e-13));
}

TEST_CASE("psi is non-negative and zero when everything thresholds") {
  std::mt19937_64 eng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(eng() % 10);
    GroupPartition gp(testutil::random_sizes(eng, m, 4));
    const Eigen::VectorXd f = testutil::random_vector(eng, m, -3.0, 3.0);
    std::uniform_real_distribution<double> gd(0.2, 3.0), md(0.2, 3.0);
    const RegParams p(gd(eng), md(eng));
    REQUIRE(psi_value(f, gp, p) >= 0.0);
  }
  GroupPartition gp({3});
  Eigen::VectorXd f(3);
  f << -1.0, -2.0, -0.5;
  REQUIRE(psi_value(f, gp, RegParams(0.3, 2.0)) == 0.0);
}

TEST_CASE("full gradient concatenates per-group blocks") {
  GroupPartition gp({2, 2});
  Eigen::VectorXd f(4);
  f << 3.0, 4.0, -1.0, -2.0;
  const RegParams p(1.0, 1.0);
  const Eigen::VectorXd g = grad_psi_full(f, gp, p);
  REQUIRE(g[0] == Catch::Approx(2.4).margin(1e-14));
  REQUIRE(g[1] == Catch::Approx(3.2).margin(1e-14));
  REQUIRE(g[2] == 0.0);
  REQUIRE(g[3] == 0.0);

  Eigen::VectorXd neg(4);
  neg << -1.0, -0.1, -7.0, -2.0;
  REQUIRE(exactly_zero(grad_psi_full(neg, gp, p)));
}

TEST_CASE("full gradient equals blockwise evaluation bitwise") {
  std::mt19937_64 eng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + static_cast<int>(eng() % 16);
    GroupPartition gp(testutil::random_sizes(eng, m, 5));
    const Eigen::VectorXd f = testutil::random_vector(eng, m, -2.0, 2.0);
    std::uniform_real_distribution<double> gd(0.2, 2.0), md(0.1, 1.5);
    const RegParams p(gd(eng), md(eng));
    const Eigen::VectorXd full = grad_psi_full(f, gp, p);
    for (int l = 0; l < gp.num_groups(); ++l) {
      const auto r = grad_psi_block(
          f.segment(gp.offset(l), gp.size(l)).eval(), p);
      REQUIRE(std::memcmp(r.block.data(), full.data() + gp.offset(l),
                          sizeof(double) * static_cast<std::size_t>(
                                               gp.size(l))) == 0);
    }
  }
}

TEST_CASE("gradient matches finite differences of psi away from the kink") {
  std::mt19937_64 eng(2024);
  const double h = 1e-6;
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 2 + static_cast<int>(eng() % 8);
    GroupPartition gp(testutil::random_sizes(eng, m, 4));
    const Eigen::VectorXd f = testutil::random_vector(eng, m, -2.0, 2.0);
    std::uniform_real_distribution<double> gd(0.3, 2.0), md(0.2, 1.5);
    const RegParams p(gd(eng), md(eng));
    const Eigen::VectorXd grad = grad_psi_full(f, gp, p);
    for (int l = 0; l < gp.num_groups(); ++l) {
      const double z = detail::pos_part_norm(f.data() + gp.offset(l),
                                             gp.size(l));
      if (std::abs(z - p.tau()) <= 1e-4) continue;  // clamp kink
      for (int i = gp.offset(l); i < gp.offset(l) + gp.size(l); ++i) {
        Eigen::VectorXd fp = f, fm = f;
        fp[i] += h;
        fm[i] -= h;
        const double fd =
            (psi_value(fp, gp, p) - psi_value(fm, gp, p)) / (2.0 * h);
        REQUIRE(std::abs(fd - grad[i]) <=
                1e-5 * (1.0 + std::abs(grad[i])));
        ++checked;
      }
    }
  }
  REQUIRE(checked > 100);
}

TEST_CASE("raising mu never revives a thresholded block") {
  std::mt19937_64 eng(55);
  for (int trial = 0; trial < 300; ++trial) {
    const int g = 1 + static_cast<int>(eng() % 6);
    const Eigen::VectorXd f = testutil::random_vector(eng, g, -2.0, 2.0);
    std::uniform_real_distribution<double> gd(0.2, 2.0), md(0.05, 2.0);
    const double gamma = gd(eng);
    const double mu1 = md(eng);
    const double mu2 = mu1 * (1.0 + md(eng));
    const auto r1 = grad_psi_block(f, RegParams(gamma, mu1));
    const auto r2 = grad_psi_block(f, RegParams(gamma, mu2));
    if (r1.is_zero) REQUIRE(r2.is_zero);
  }
}

TEST_CASE("gradient blocks are non-negative and zero blocks are bitwise zero") {
  std::mt19937_64 eng(321);
  for (int trial = 0; trial < 300; ++trial) {
    const int g = 1 + static_cast<int>(eng() % 8);
    const Eigen::VectorXd f = testutil::random_vector(eng, g, -1.5, 1.5);
    std::uniform_real_distribution<double> gd(0.2, 2.0), md(0.2, 2.0);
    const RegParams p(gd(eng), md(eng));
    const auto r = grad_psi_block(f, p);
    for (Eigen::Index i = 0; i < r.block.size(); ++i)
      REQUIRE(r.block[i] >= 0.0);
    REQUIRE(r.is_zero == (r.z_value <= p.tau()));
    REQUIRE(r.is_zero == exactly_zero(r.block));
  }
}

TEST_CASE("psi and full gradient reject wrong lengths") {
  GroupPartition gp({2, 1});
  Eigen::VectorXd f(2);
  f << 1.0, 2.0;
  REQUIRE_THROWS_AS(psi_value(f, gp, RegParams(1.0, 1.0)),
                    DimensionMismatch);
  REQUIRE_THROWS_AS(grad_psi_full(f, gp, RegParams(1.0, 1.0)),
                    DimensionMismatch);
}
