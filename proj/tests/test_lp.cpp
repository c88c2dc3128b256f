#include <doctest.h>

#include <random>

#include "ira/lp.hpp"
#include "support/oracles.hpp"

using ira::lp::solve_box_feasibility;

TEST_CASE("single-row feasibility matches the l1 bound") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 300; ++t) {
    const Eigen::MatrixXd G = oracle::gaussian(1, 1 + t % 5, rng);
    const double reach = G.cwiseAbs().sum();
    const double b = std::uniform_real_distribution<>(-1.5, 1.5)(rng) * reach;
    if (std::abs(std::abs(b) - reach) < 1e-6) continue;
    const auto r = solve_box_feasibility(G, Eigen::VectorXd::Constant(1, b), 1.0, 1e-10);
    CHECK(r.feasible == (std::abs(b) < reach));
  }
}

TEST_CASE("feasible witnesses satisfy the constraints") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index rows = 1 + t % 4;
    const Eigen::Index cols = rows + t % 6;
    const Eigen::MatrixXd G = oracle::gaussian(rows, cols, rng);
    const double radius = 0.5 + (t % 3);
    const Eigen::VectorXd a = oracle::sample_coefficients(cols, rng) * radius * 0.99;
    const Eigen::VectorXd b = G * a;
    const auto r = solve_box_feasibility(G, b, radius, 1e-10);
    REQUIRE(r.feasible);
    CHECK(r.coefficients.cwiseAbs().maxCoeff() <= radius + 1e-9);
    CHECK((G * r.coefficients - b).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("degenerate systems") {
  Eigen::MatrixXd G(3, 2);
  G << 1, 1, 2, 2, 0, 0;
  Eigen::VectorXd b(3);
  b << 1, 2, 0;
  CHECK(solve_box_feasibility(G, b, 1.0, 1e-10).feasible);
  b(2) = 1e-3;
  CHECK_FALSE(solve_box_feasibility(G, b, 1.0, 1e-10).feasible);
  b << 1, 2.5, 0;
  CHECK_FALSE(solve_box_feasibility(G, b, 1.0, 1e-10).feasible);

  const Eigen::MatrixXd none(2, 0);
  CHECK(solve_box_feasibility(none, Eigen::VectorXd::Zero(2), 1.0, 1e-10).feasible);
  CHECK_FALSE(solve_box_feasibility(none, Eigen::VectorXd::Ones(2), 1.0, 1e-10).feasible);
}

TEST_CASE("duplicated columns cycle-prone instance terminates") {
  Eigen::MatrixXd G = Eigen::MatrixXd::Ones(4, 30);
  for (int j = 0; j < 30; j += 2) G.col(j) *= -1.0;
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(4, 3.0);
  const auto r = solve_box_feasibility(G, b, 1.0, 1e-10);
  CHECK(r.feasible);
}
