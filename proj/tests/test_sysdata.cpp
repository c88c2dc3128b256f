#include <doctest.h>

#include <cmath>

#include "ira/error.hpp"
#include "ira/sysdata.hpp"
#include "support/oracles.hpp"

using namespace ira::sysdata;
using ira::setcalc::interval_hull;

TEST_CASE("expm matches closed forms") {
  CHECK(expm(Matrix::Constant(1, 1, -0.1))(0, 0) == doctest::Approx(std::exp(-0.1)).epsilon(1e-14));
  // Rotation-decay block exp([a -b; b a] t) = e^{at} [cos bt -sin bt; sin bt cos bt].
  const double a = -1.0, b = 4.0, t = 0.37;
  Matrix M(2, 2);
  M << a, -b, b, a;
  const Matrix E = expm(M * t);
  Matrix ref(2, 2);
  ref << std::cos(b * t), -std::sin(b * t), std::sin(b * t), std::cos(b * t);
  ref *= std::exp(a * t);
  CHECK((E - ref).cwiseAbs().maxCoeff() < 1e-13);
  const Matrix big = expm(M * 3.0);
  Matrix ref3(2, 2);
  ref3 << std::cos(12.0), -std::sin(12.0), std::sin(12.0), std::cos(12.0);
  ref3 *= std::exp(-3.0);
  CHECK((big - ref3).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("discretize scalar closed form") {
  ContinuousSystem sys{Matrix::Constant(1, 1, -2.0), Matrix::Constant(1, 1, 1.0), 1.0};
  const auto d = discretize(sys, 0.05);
  CHECK(d.A(0, 0) == doctest::Approx(0.904837418).epsilon(1e-9));
  const double bw = (std::exp(-0.1) - 1.0) / -2.0;
  CHECK(bw == doctest::Approx(0.047581).epsilon(1e-5));
  CHECK(d.B(0, 0) == doctest::Approx(bw).epsilon(1e-12));
  CHECK(d.noise.generators()(0, 0) == doctest::Approx(bw).epsilon(1e-12));
  CHECK(d.noise.center()(0) == 0.0);
}

TEST_CASE("discretize semigroup and rejections") {
  const auto sys = benchmark_system();
  const auto d1 = discretize(sys, 0.05);
  const auto d2 = discretize(sys, 0.10);
  CHECK((d2.A - d1.A * d1.A).cwiseAbs().maxCoeff() < 1e-10);
  const auto d3 = discretize(sys, 0.15);
  CHECK((d3.A - d1.A * d1.A * d1.A).cwiseAbs().maxCoeff() < 1e-10);
  // ZOH input matrix over Ns steps: B(3dt) = (A^2 + A + I) B(dt).
  const Matrix I = Matrix::Identity(5, 5);
  CHECK((d3.B - (d1.A * d1.A + d1.A + I) * d1.B).cwiseAbs().maxCoeff() < 1e-10);

  ContinuousSystem singular{Matrix::Zero(2, 2), Matrix::Ones(2, 1), 0.1};
  CHECK_THROWS_AS(discretize(singular, 0.1), ira::InvalidArgument);
  CHECK_THROWS_AS(discretize(sys, 0.0), ira::InvalidArgument);
}

TEST_CASE("benchmark constants") {
  const auto sys = benchmark_system();
  CHECK(sys.A(0, 1) == -4.0);
  CHECK(sys.A(1, 0) == 4.0);
  CHECK(sys.A(2, 3) == 1.0);
  CHECK(sys.A(3, 2) == -1.0);
  CHECK(sys.A(4, 4) == -2.0);
  CHECK(sys.B == Matrix::Ones(5, 1));
  CHECK(sys.sigma_w == 0.005);
  CHECK(benchmark_initial_set().center() == Vector::Ones(5));
  CHECK(benchmark_initial_set().generators() == 0.1 * Matrix::Identity(5, 5));
  CHECK(benchmark_input_set().center()(0) == 10.0);
  CHECK(benchmark_input_set().generators()(0, 0) == 0.25);
}

TEST_CASE("simulate") {
  DiscreteSystem id{Matrix::Identity(2, 2), Matrix::Zero(2, 1), 0.1, ira::setcalc::Zonotope::point(Vector::Zero(2))};
  std::vector<Vector> u(4, Vector::Ones(1)), w(4, Vector::Zero(2));
  const Vector x0 = Vector::Constant(2, 3.0);
  for (const auto& x : simulate(id, x0, u, w)) CHECK(x == x0);

  const auto d = discretize(benchmark_system(), 0.05);
  const Vector start = Vector::Ones(5);
  std::vector<Vector> u1{Vector::Constant(1, 10.0)}, w1{Vector::Zero(5)};
  CHECK(simulate(d, start, u1, w1)[1].isApprox(d.A * start + d.B * u1[0]));

  std::mt19937_64 rng(1);
  std::vector<Vector> us, ws;
  for (int k = 0; k < 150; ++k) {
    us.push_back(sample_uniform(benchmark_input_set(), rng));
    ws.push_back(sample_uniform(d.noise, rng));
  }
  const auto traj = simulate(d, start, us, ws);
  CHECK(traj.size() == 151);
  Eigen::EigenSolver<Matrix> es(d.A);
  CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
  for (const auto& x : traj) {
    CHECK(x.allFinite());
    CHECK(x.cwiseAbs().maxCoeff() < 100.0);
  }
  std::vector<Vector> short_w(3, Vector::Zero(5));
  CHECK_THROWS_AS(simulate(d, start, us, short_w), ira::InvalidArgument);
}

TEST_CASE("collect_data shift consistency, hold policy and rank") {
  const auto d = discretize(benchmark_system(), 0.05);
  const auto data = collect_data(d, 150, Vector::Ones(5), {benchmark_input_set(), 3}, 42);
  CHECK(data.samples() == 150);
  for (Eigen::Index k = 0; k + 1 < 150; ++k) CHECK(data.X_plus.col(k) == data.X_minus.col(k + 1));
  for (Eigen::Index k = 0; k < 150; ++k) {
    CHECK(data.U_minus(0, k) == data.U_minus(0, k - k % 3));
    CHECK(ira::setcalc::contains_point(d.noise, data.W_minus.col(k)));
    CHECK((data.X_plus.col(k) - d.A * data.X_minus.col(k) - d.B * data.U_minus.col(k) - data.W_minus.col(k))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
  CHECK(check_rank(data.D_minus()));
  CHECK(check_rank(subsample_coarse(data, 3).D_minus()));

  auto quiet = d;
  quiet.noise = ira::setcalc::Zonotope::point(Vector::Zero(5));
  const auto clean = collect_data(quiet, 40, Vector::Ones(5), {benchmark_input_set(), 1}, 3);
  CHECK((clean.X_plus - d.A * clean.X_minus - d.B * clean.U_minus).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(collect_data(d, 5, Vector::Ones(5), {benchmark_input_set(), 1}, 1), ira::InvalidArgument);
}

TEST_CASE("subsample_coarse") {
  const auto d = discretize(benchmark_system(), 0.05);
  auto quiet = d;
  quiet.noise = ira::setcalc::Zonotope::point(Vector::Zero(5));
  const auto data = collect_data(quiet, 150, Vector::Ones(5), {benchmark_input_set(), 3}, 9);
  const auto same = subsample_coarse(data, 1);
  CHECK(same.X_plus == data.X_plus);
  CHECK(same.U_minus == data.U_minus);

  const auto c = subsample_coarse(data, 3);
  CHECK(c.samples() == 50);
  const Matrix A3 = d.A * d.A * d.A;
  const Matrix Bsum = (d.A * d.A + d.A + Matrix::Identity(5, 5)) * d.B;
  CHECK((c.X_plus - A3 * c.X_minus - Bsum * c.U_minus).cwiseAbs().maxCoeff() < 1e-11);
  for (Eigen::Index k = 0; k + 1 < c.samples(); ++k) CHECK(c.X_plus.col(k) == c.X_minus.col(k + 1));

  const auto tiny = collect_data(quiet, 6, Vector::Ones(5), {benchmark_input_set(), 1}, 9);
  CHECK_THROWS_AS(subsample_coarse(tiny, 4), ira::InvalidArgument);
}

TEST_CASE("check_rank") {
  Matrix D = Matrix::Zero(3, 6);
  D.leftCols(3) = Matrix::Identity(3, 3);
  CHECK(check_rank(D));
  Matrix dup(3, 5);
  dup.row(0) << 1, 2, 3, 4, 5;
  dup.row(1) = dup.row(0);
  dup.row(2) << 0, 1, 0, 1, 0;
  CHECK_FALSE(check_rank(dup));
  CHECK_FALSE(check_rank(Matrix::Identity(3, 2)));
}

TEST_CASE("exact_coarse_noise") {
  const ira::setcalc::Zonotope w(Vector::Zero(1), Matrix::Constant(1, 1, 1.0));
  CHECK(exact_coarse_noise(Matrix::Constant(1, 1, 0.9), w, 1) == w);
  const auto zero = exact_coarse_noise(Matrix::Zero(1, 1), w, 4);
  CHECK(interval_hull(zero).upper(0) == doctest::Approx(1.0));
  const auto geo = exact_coarse_noise(Matrix::Constant(1, 1, 0.5), w, 3);
  REQUIRE(geo.num_generators() == 3);
  CHECK(geo.generators()(0, 1) == doctest::Approx(0.5));
  CHECK(geo.generators()(0, 2) == doctest::Approx(0.25));
  CHECK(interval_hull(geo).lower(0) == doctest::Approx(-1.75));
  CHECK(interval_hull(geo).upper(0) == doctest::Approx(1.75));
}
