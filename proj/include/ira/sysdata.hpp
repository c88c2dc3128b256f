#pragma once

// Ground-truth LTI systems, discretization, trajectory simulation and the
// data matrices a single measured trajectory provides.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ira/setcalc.hpp"

namespace ira::sysdata {

using setcalc::Matrix;
using setcalc::Vector;
using setcalc::Zonotope;

// dx/dt = A x + B u + w with scalar noise intensity sigma_w.
struct ContinuousSystem {
  Matrix A;
  Matrix B;
  double sigma_w = 0.0;
};

// x_k = A x_{k-1} + B u_{k-1} + w_k,  w_k in noise.
struct DiscreteSystem {
  Matrix A;
  Matrix B;
  double step = 0.0;
  Zonotope noise;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
};

struct DataMatrices {
  Matrix X_plus;
  Matrix X_minus;
  Matrix U_minus;
  // Noise realization that produced the data, when known (n x T); empty otherwise.
  Matrix W_minus;

  Eigen::Index samples() const { return X_minus.cols(); }
  Matrix D_minus() const;
};

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
Matrix expm(const Matrix& A);

/// Zero-order-hold discretization: A = e^{A_c step}, B = B_w B_c, noise = <0, sigma_w B_w>,
/// with B_w = A_c^{-1}(e^{A_c step} - I). Throws InvalidArgument for singular A_c.
DiscreteSystem discretize(const ContinuousSystem& sys, double step);

/// States x_0 ... x_T for T = inputs.size().
std::vector<Vector> simulate(const DiscreteSystem& sys, const Vector& x0, std::span<const Vector> inputs,
                             std::span<const Vector> noises);

/// c + G a with a uniform on [-1, 1]^gamma.
Vector sample_uniform(const Zonotope& z, std::mt19937_64& rng);

struct InputPolicy {
  Zonotope input_set;
  // Inputs are redrawn every hold_steps samples and held constant in between.
  int hold_steps = 1;
};

/// One trajectory of T steps from x0 with inputs per the policy and noise drawn from sys.noise.
DataMatrices collect_data(const DiscreteSystem& sys, int T, const Vector& x0, const InputPolicy& policy,
                          std::uint64_t seed);

/**
 * `count` true trajectories of `steps` steps: x_0 uniform in X0, inputs uniform in U and
 * redrawn every `hold` steps, noise uniform in sys.noise every step. Result is [trajectory][time].
 */
std::vector<std::vector<Vector>> monte_carlo(const DiscreteSystem& sys, const Zonotope& X0, const Zonotope& U,
                                             int steps, int hold, int count, std::uint64_t seed);

/// Coarse data taking every Ns-th state; floor(T / Ns) columns.
DataMatrices subsample_coarse(const DataMatrices& fine, int Ns);

inline constexpr double kRankTolerance = 1e-10;

/// Numerical full row rank of D_- (singular values above 1e-10 * sigma_max).
bool check_rank(const Matrix& D_minus);

/// sum_{i=0}^{Ns-1} A_f^i Z_w^f (Minkowski), the noise accumulated over one coarse step.
Zonotope exact_coarse_noise(const Matrix& A_f, const Zonotope& Zw_f, int Ns);

/// Five-state benchmark: A_c = blkdiag([-1 -4; 4 -1], [-3 1; -1 -3], -2), B_c = 1, sigma_w = 0.005.
ContinuousSystem benchmark_system();
/// <1_5, 0.1 I_5>
Zonotope benchmark_initial_set();
/// <10, 0.25>
Zonotope benchmark_input_set();

}  // namespace ira::sysdata
