#pragma once

// Data-driven identification of the set of system matrices consistent with a
// noisy trajectory, and the derived coarse-step noise over-approximation.

#include <cstdint>
#include <string_view>

#include "ira/setcalc.hpp"
#include "ira/sysdata.hpp"

namespace ira::ddmodel {

using setcalc::Matrix;
using setcalc::MatrixZonotope;
using setcalc::Vector;
using setcalc::Zonotope;

enum class Resolution { kFine, kCoarse };

std::string_view to_string(Resolution r);

struct Provenance {
  Eigen::Index samples = 0;
  double step = 0.0;
  std::uint64_t seed = 0;
  bool rank_ok = false;
  // Condition number of D_- D_-^T.
  double gram_condition = 0.0;
};

// Matrix zonotope over the stacked [A B], n x (n+m).
struct ModelSet {
  MatrixZonotope mz;
  Resolution source = Resolution::kFine;
  double step = 0.0;
  Provenance provenance;

  Eigen::Index state_dim() const { return mz.rows(); }
  Eigen::Index input_dim() const { return mz.cols() - mz.rows(); }
};

struct ABlock {
  MatrixZonotope mz;
};

inline constexpr double kMaxGramCondition = 1e12;
inline constexpr double kMembershipTolerance = 1e-8;

/// Right inverse D^T (D D^T)^{-1} of a full-row-rank D. Throws RankError above kMaxGramCondition.
Matrix right_pseudo_inverse(const Matrix& D, double* gram_condition = nullptr);

/**
 * (X_+ - M_w) D_-^dagger with M_w the T-fold self-concatenation of Zw.
 * Contains the true [A B] whenever the data noise lies in M_w.
 * Throws RankError (naming the resolution) when D_- is rank deficient or ill-conditioned.
 */
ModelSet build_model_set(const sysdata::DataMatrices& data, const Zonotope& Zw, Resolution source, double step);

/// First n columns of the model set.
ABlock extract_A_block(const ModelSet& ms);

struct CoarseNoiseEstimate {
  Zonotope noise;
  int multiplications = 0;
};

/// S_0 = Zw_f, S_i = reduce(M_A S_{i-1} + Zw_f); returns S_{Ns-1}. Contains the exact coarse noise.
CoarseNoiseEstimate estimate_coarse_noise(const ABlock& ab, const Zonotope& Zw_f, int Ns, int order);

/// Exact test of M in mz via linear feasibility on the vectorized generators.
bool verify_membership(const MatrixZonotope& mz, const Matrix& M, double tol = kMembershipTolerance);
bool verify_membership(const ModelSet& ms, const Matrix& M, double tol = kMembershipTolerance);

}  // namespace ira::ddmodel
