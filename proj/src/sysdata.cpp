#include "ira/sysdata.hpp"

#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "ira/error.hpp"

namespace ira::sysdata {

namespace {

constexpr double kSeriesTol = 1e-12;

}  // namespace

Matrix DataMatrices::D_minus() const {
  Matrix D(X_minus.rows() + U_minus.rows(), X_minus.cols());
  D << X_minus, U_minus;
  return D;
}

Matrix expm(const Matrix& A) {
  if (A.rows() != A.cols()) throw InvalidArgument("expm: matrix must be square");
  const Eigen::Index n = A.rows();
  const double norm = n > 0 ? A.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix X = A / std::ldexp(1.0, squarings);

  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k < 100; ++k) {
    term = (term * X) / static_cast<double>(k);
    sum += term;
    if (term.norm() <= kSeriesTol * sum.norm()) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

DiscreteSystem discretize(const ContinuousSystem& sys, double step) {
  if (!(step > 0.0)) throw InvalidArgument("discretize: step must be positive");
  if (sys.A.rows() != sys.A.cols() || sys.B.rows() != sys.A.rows()) {
    throw InvalidArgument("discretize: inconsistent system matrix shapes");
  }
  Eigen::FullPivLU<Matrix> lu(sys.A);
  if (!lu.isInvertible()) throw InvalidArgument("discretize: continuous-time A must be invertible");

  const Eigen::Index n = sys.A.rows();
  DiscreteSystem out;
  out.step = step;
  out.A = expm(sys.A * step);
  const Matrix Bw = lu.solve(out.A - Matrix::Identity(n, n));
  out.B = Bw * sys.B;
  out.noise = Zonotope(Vector::Zero(n), sys.sigma_w * Bw);
  return out;
}

std::vector<Vector> simulate(const DiscreteSystem& sys, const Vector& x0, std::span<const Vector> inputs,
                             std::span<const Vector> noises) {
  if (inputs.size() != noises.size()) throw InvalidArgument("simulate: input and noise sequences differ in length");
  if (x0.size() != sys.state_dim()) throw InvalidArgument("simulate: initial state dimension mismatch");
  std::vector<Vector> states;
  states.reserve(inputs.size() + 1);
  states.push_back(x0);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].size() != sys.input_dim() || noises[k].size() != sys.state_dim()) {
      throw InvalidArgument("simulate: input or noise dimension mismatch");
    }
    states.push_back(sys.A * states.back() + sys.B * inputs[k] + noises[k]);
  }
  return states;
}

Vector sample_uniform(const Zonotope& z, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector a(z.num_generators());
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = unit(rng);
  return z.point_at(a);
}

DataMatrices collect_data(const DiscreteSystem& sys, int T, const Vector& x0, const InputPolicy& policy,
                          std::uint64_t seed) {
  const Eigen::Index n = sys.state_dim();
  const Eigen::Index m = sys.input_dim();
  if (T < n + m) throw InvalidArgument("collect_data: need at least n+m samples for a full-rank D_-");
  if (policy.hold_steps < 1) throw InvalidArgument("collect_data: hold_steps must be positive");
  if (policy.input_set.dim() != m) throw InvalidArgument("collect_data: input set dimension mismatch");

  std::mt19937_64 rng(seed);
  std::vector<Vector> inputs;
  std::vector<Vector> noises;
  inputs.reserve(static_cast<std::size_t>(T));
  noises.reserve(static_cast<std::size_t>(T));
  Vector u;
  for (int k = 0; k < T; ++k) {
    if (k % policy.hold_steps == 0) u = sample_uniform(policy.input_set, rng);
    inputs.push_back(u);
    noises.push_back(sample_uniform(sys.noise, rng));
  }
  const auto states = simulate(sys, x0, inputs, noises);

  DataMatrices d;
  d.X_minus.resize(n, T);
  d.X_plus.resize(n, T);
  d.U_minus.resize(m, T);
  d.W_minus.resize(n, T);
  for (int k = 0; k < T; ++k) {
    d.X_minus.col(k) = states[static_cast<std::size_t>(k)];
    d.X_plus.col(k) = states[static_cast<std::size_t>(k) + 1];
    d.U_minus.col(k) = inputs[static_cast<std::size_t>(k)];
    d.W_minus.col(k) = noises[static_cast<std::size_t>(k)];
  }
  return d;
}

std::vector<std::vector<Vector>> monte_carlo(const DiscreteSystem& sys, const Zonotope& X0, const Zonotope& U,
                                             int steps, int hold, int count, std::uint64_t seed) {
  if (steps < 0 || hold < 1 || count < 0) throw InvalidArgument("monte_carlo: invalid horizon, hold or count");
  if (X0.dim() != sys.state_dim() || U.dim() != sys.input_dim()) {
    throw InvalidArgument("monte_carlo: set dimensions do not match the system");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<Vector>> out(static_cast<std::size_t>(count));
  Vector u;
  for (auto& traj : out) {
    traj.reserve(static_cast<std::size_t>(steps) + 1);
    traj.push_back(sample_uniform(X0, rng));
    for (int k = 0; k < steps; ++k) {
      if (k % hold == 0) u = sample_uniform(U, rng);
      traj.push_back(sys.A * traj.back() + sys.B * u + sample_uniform(sys.noise, rng));
    }
  }
  return out;
}

DataMatrices subsample_coarse(const DataMatrices& fine, int Ns) {
  if (Ns < 1) throw InvalidArgument("subsample_coarse: Ns must be positive");
  const Eigen::Index T = fine.samples();
  if (T < 2 * Ns) throw InvalidArgument("subsample_coarse: too few columns for the requested subsampling");
  if (Ns == 1) {
    return fine;
  }
  const Eigen::Index cols = T / Ns;
  auto state = [&](Eigen::Index i) -> Vector { return i < T ? fine.X_minus.col(i) : fine.X_plus.col(T - 1); };

  DataMatrices c;
  c.X_minus.resize(fine.X_minus.rows(), cols);
  c.X_plus.resize(fine.X_minus.rows(), cols);
  c.U_minus.resize(fine.U_minus.rows(), cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    c.X_minus.col(k) = state(k * Ns);
    c.X_plus.col(k) = state((k + 1) * Ns);
    c.U_minus.col(k) = fine.U_minus.col(k * Ns);
  }
  return c;
}

bool check_rank(const Matrix& D_minus) {
  if (D_minus.rows() == 0 || D_minus.cols() < D_minus.rows()) return false;
  Eigen::JacobiSVD<Matrix> svd(D_minus);
  const auto& s = svd.singularValues();
  if (s(0) <= 0.0) return false;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > kRankTolerance * s(0)) ++rank;
  }
  return rank == D_minus.rows();
}

Zonotope exact_coarse_noise(const Matrix& A_f, const Zonotope& Zw_f, int Ns) {
  if (Ns < 1) throw InvalidArgument("exact_coarse_noise: Ns must be positive");
  Zonotope acc = Zw_f;
  Matrix power = Matrix::Identity(A_f.rows(), A_f.cols());
  for (int i = 1; i < Ns; ++i) {
    power = power * A_f;
    acc = setcalc::minkowski_sum(acc, setcalc::linear_map(power, Zw_f));
  }
  return acc;
}

ContinuousSystem benchmark_system() {
  ContinuousSystem sys;
  sys.A = Matrix::Zero(5, 5);
  sys.A.block<2, 2>(0, 0) << -1, -4, 4, -1;
  sys.A.block<2, 2>(2, 2) << -3, 1, -1, -3;
  sys.A(4, 4) = -2;
  sys.B = Matrix::Ones(5, 1);
  sys.sigma_w = 0.005;
  return sys;
}

Zonotope benchmark_initial_set() { return Zonotope(Vector::Ones(5), 0.1 * Matrix::Identity(5, 5)); }

Zonotope benchmark_input_set() { return Zonotope(Vector::Constant(1, 10.0), Matrix::Constant(1, 1, 0.25)); }

}  // namespace ira::sysdata
