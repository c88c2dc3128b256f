#pragma once

/**
 * @file reach.hpp
 * @brief Reachable-set chains: coarse anchors, interpolation from anchors (IRA),
 * the fine data-driven chain and the model-based reference chain.
 *
 * Phase 1 of IRA computes K anchors sequentially with the coarse model set.
 * Phase 2 fills the Ns-1 fine substeps of each coarse interval from its
 * anchor. Intervals share only read-only data, so Phase 2 runs on a worker
 * pool and its output does not depend on the worker count.
 */

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ira/predictor.hpp"
#include "ira/setcalc.hpp"

namespace ira::reach {

using setcalc::Matrix;
using setcalc::MatrixZonotope;
using setcalc::Vector;
using setcalc::Zonotope;

enum class CoarseNoiseMode { kEstimated, kExactOracle };

enum class SetKind { kAnchor, kInterpolated, kFine, kModelBased };

std::string_view to_string(SetKind kind);
std::string_view to_string(CoarseNoiseMode mode);

// Passed as the reduction order to skip order reduction.
inline constexpr int kNoReduction = 0;

struct ChainConfig {
  int K = 2;
  int Ns = 3;
  int order = 4;
  double dt_fine = 0.05;
  Zonotope input_set;
  CoarseNoiseMode coarse_noise_mode = CoarseNoiseMode::kEstimated;

  double dt_coarse() const { return Ns * dt_fine; }
  /// Throws InvalidArgument unless K >= 1, Ns >= 2, order >= 1 and dt_fine > 0.
  void validate() const;
};

struct ReachStep {
  double t = 0.0;
  SetKind kind = SetKind::kFine;
  Zonotope set;
  // Wall-clock cost of producing this set (0 for the initial set).
  double step_ms = 0.0;
};

struct ReachChain {
  std::vector<ReachStep> steps;
  int mult_count = 0;

  std::size_t size() const { return steps.size(); }
  const Zonotope& set(std::size_t i) const { return steps.at(i).set; }
  std::vector<Zonotope> sets() const;
};

/// reduce(M (R x U) + Zw). With order == kNoReduction the result is left unreduced.
Zonotope propagate_step(const MatrixZonotope& model, const Zonotope& R, const Zonotope& U, const Zonotope& Zw,
                        int order);

/// Fixed-matrix step A R + B U + Zw for AB = [A B].
Zonotope propagate_step(const Matrix& AB, const Zonotope& R, const Zonotope& U, const Zonotope& Zw, int order);

/// Anchors R_0 = X0, R_{k+1} = step(coarse, R_k); K coarse multiplications.
ReachChain compute_anchors(const ChainConfig& cfg, const MatrixZonotope& coarse_model, const Zonotope& X0,
                           const Zonotope& Zw_c);

/// The Ns-1 fine substeps of interval k starting from its anchor.
std::vector<Zonotope> interpolate_interval(int k, const Zonotope& anchor, const MatrixZonotope& fine_model,
                                           const ChainConfig& cfg, const Zonotope& Zw_f);

/// K*Ns sequential fine steps from X0.
ReachChain run_fine_chain(const ChainConfig& cfg, const MatrixZonotope& fine_model, const Zonotope& X0,
                          const Zonotope& Zw_f);

/**
 * Fixed-matrix chain R_{j+1} = A R_j + B U + Zw over `steps` steps of length dt.
 *
 * input_hold > 1 keeps each input constant over blocks of input_hold steps
 * (one input draw shared across the block), matching coarse-rate zero-order
 * hold. The shared input is carried exactly through an augmented [x; u] state.
 */
ReachChain run_model_based(const Matrix& A, const Matrix& B, const Zonotope& X0, const Zonotope& U,
                           const Zonotope& Zw, int steps, double dt, int input_hold, int order);

struct IraOptions {
  // <= 1: fully sequential in the calling thread. >= 2: Phase 2 on a pool of this many threads,
  // each interval dispatched as soon as the anchors it needs exist.
  int workers = 1;
  const conformal::PredictorInterface* predictor = nullptr;
  std::optional<double> q_hat;
  // Horizon used for the predictor's time fractions; defaults to K * Ns * dt_fine.
  std::optional<double> t_total;
};

struct IraResult {
  ReachChain anchors;
  // interpolants[k][j-1] is the set at t_k + j * dt_fine.
  std::vector<std::vector<Zonotope>> interpolants;
  // Raw predictor outputs before inflation (TA mode only).
  std::vector<std::vector<Zonotope>> raw_predictions;
  // Wall-clock milliseconds of each interpolated step, same indexing as interpolants.
  std::vector<std::vector<double>> interpolant_ms;
  int phase1_mults = 0;
  int phase2_mults = 0;
  int predictor_calls = 0;
  double phase1_ms = 0.0;
  double total_ms = 0.0;

  /// Sets at every fine time point 0 .. K*Ns in time order.
  ReachChain merged(const ChainConfig& cfg) const;
};

/// Interpolated reachability. With a predictor each fine step becomes predict + <0, q_hat I>.
IraResult run_ira(const ChainConfig& cfg, const MatrixZonotope& coarse_model, const MatrixZonotope& fine_model,
                  const Zonotope& X0, const Zonotope& Zw_c, const Zonotope& Zw_f, const IraOptions& options = {});

/// Interval-hull containment of the anchor in the fine-chain set at the same time.
bool check_tightness_premise(const Zonotope& anchor, const Zonotope& fine_set);

struct SensitivityReport {
  Zonotope coarse_set;  // one coarse step
  Zonotope fine_set;    // Ns fine steps
  Vector coarse_width;
  Vector fine_width;
  double hausdorff = 0.0;
  double max_relative_gap = 0.0;
  bool differs = false;
};

inline constexpr double kSensitivityGap = 1e-6;

SensitivityReport step_size_sensitivity_report(const MatrixZonotope& coarse_model, const MatrixZonotope& fine_model,
                                               const Zonotope& X0, const Zonotope& U, const Zonotope& Zw_c,
                                               const Zonotope& Zw_f, int Ns, int order);

struct DepthModel {
  long long total_fine = 0;
  long long work_ira = 0;
  long long depth_ira = 0;
  double speedup = 0.0;
};

/// Work/depth counts of the fine chain and IRA under equal per-step cost.
DepthModel depth_model(int K, int Ns);

/// Mean interval-hull width over all dimensions of the given sets.
double mean_hull_width(std::span<const Zonotope> sets);

}  // namespace ira::reach
