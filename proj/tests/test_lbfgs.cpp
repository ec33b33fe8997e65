#include <catch2/catch_amalgamated.hpp>

#include "groupot/lbfgs.hpp"

using namespace groupot;

namespace {

// Concave quadratic -|x - x0|^2 peaking at x0.
struct Quadratic {
  Eigen::VectorXd x0;
  double operator()(const Eigen::VectorXd& x) const {
    return -(x - x0).squaredNorm();
  }
  void grad(const Eigen::VectorXd& x, Eigen::VectorXd& g) const {
    g = -2.0 * (x - x0);
  }
};

}  // namespace

TEST_CASE("quadratic peak found within dimension plus five iterations") {
  for (const int dim : {1, 3, 8}) {
    Quadratic q{Eigen::VectorXd::LinSpaced(dim, 1.0, 2.0)};
    MaximizeOptions opts;
    opts.grad_tol = 1e-8;
    const MaximizeResult r = maximize(
        [&](const Eigen::VectorXd& x) { return q(x); },
        [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { q.grad(x, g); },
        Eigen::VectorXd::Zero(dim), opts);
    REQUIRE(r.converged);
    REQUIRE(r.iterations <= dim + 5);
    REQUIRE((r.x - q.x0).lpNorm<Eigen::Infinity>() < 1e-7);
    REQUIRE(r.objective == Catch::Approx(0.0).margin(1e-14));
  }
}

TEST_CASE("a do-nothing hook leaves the trajectory untouched") {
  Quadratic q{Eigen::VectorXd::Constant(4, 0.75)};
  MaximizeOptions opts;
  opts.chunk_iters = 2;
  const auto obj = [&](const Eigen::VectorXd& x) { return q(x); };
  const auto grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    q.grad(x, g);
  };
  const MaximizeResult plain =
      maximize(obj, grad, Eigen::VectorXd::Zero(4), opts);
  int fired = 0;
  const MaximizeResult hooked =
      maximize(obj, grad, Eigen::VectorXd::Zero(4), opts,
               [&](int, const Eigen::VectorXd&) { ++fired; });
  REQUIRE(fired == hooked.chunks);
  REQUIRE(plain.iterations == hooked.iterations);
  REQUIRE(plain.x == hooked.x);
  REQUIRE(plain.objective == hooked.objective);
}

TEST_CASE("hook fires once per completed chunk with the current iterate") {
  Quadratic q{Eigen::VectorXd::Constant(6, -1.5)};
  MaximizeOptions opts;
  opts.chunk_iters = 3;
  opts.grad_tol = 1e-10;
  std::vector<int> indices;
  const MaximizeResult r = maximize(
      [&](const Eigen::VectorXd& x) { return q(x); },
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { q.grad(x, g); },
      Eigen::VectorXd::Zero(6), opts,
      [&](int chunk, const Eigen::VectorXd& x) {
        indices.push_back(chunk);
        REQUIRE(x.size() == 6);
      });
  REQUIRE(r.converged);
  REQUIRE_FALSE(indices.empty());
  for (std::size_t i = 0; i < indices.size(); ++i)
    REQUIRE(indices[i] == static_cast<int>(i));
}

TEST_CASE("already-optimal start is reported as converged") {
  Quadratic q{Eigen::VectorXd::Zero(3)};
  MaximizeOptions opts;
  const MaximizeResult r = maximize(
      [&](const Eigen::VectorXd& x) { return q(x); },
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { q.grad(x, g); },
      Eigen::VectorXd::Zero(3), opts);
  REQUIRE(r.converged);
  REQUIRE_FALSE(r.line_search_failed);
  REQUIRE(r.x == Eigen::VectorXd::Zero(3));
}

TEST_CASE("iteration budget exhaustion reports non-convergence") {
  // A slow valley: -|x|^2 scaled tiny so progress per step is small.
  MaximizeOptions opts;
  opts.max_chunks = 1;
  opts.chunk_iters = 1;
  opts.grad_tol = 1e-14;
  Quadratic q{Eigen::VectorXd::Constant(5, 3.0)};
  const MaximizeResult r = maximize(
      [&](const Eigen::VectorXd& x) { return q(x); },
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { q.grad(x, g); },
      Eigen::VectorXd::Zero(5), opts);
  REQUIRE_FALSE(r.converged);
  REQUIRE(r.iterations == 1);
}
