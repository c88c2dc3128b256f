#pragma once

/**
 * @file conformal.hpp
 * @brief Split conformal calibration of set-valued predictors.
 *
 * A nonconformity score measures how far sampled true states fall outside the
 * interval hull of a predicted set (negative when strictly inside). The
 * calibrated quantile q_hat inflates predictions by <0, q_hat I>, which grows
 * the hull by exactly q_hat on every axis.
 */

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ira/predictor.hpp"
#include "ira/reach.hpp"
#include "ira/sysdata.hpp"

namespace ira::conformal {

using setcalc::Matrix;
using setcalc::MatrixZonotope;
using setcalc::Vector;
using setcalc::Zonotope;

enum class ScoreMode { kPointwise, kPathwise };

std::string_view to_string(ScoreMode mode);
ScoreMode score_mode_from_string(std::string_view s);

/// max over samples and dimensions of max(lower_d - x_d, x_d - upper_d) for the hull of `predicted`.
double pointwise_score(const Zonotope& predicted, std::span<const Vector> states);

/// Max of the pointwise scores over substeps; predicted[j] pairs with states[j].
double pathwise_score(std::span<const Zonotope> predicted, std::span<const std::vector<Vector>> states);

/**
 * Finite-sample conformal quantile. With N scores the level is ceil((N+1)(1-delta))/N;
 * above 1 the maximum score is returned, otherwise the ceil(level*N)-th smallest score.
 * The result is clamped at 0 from below.
 */
double conformal_quantile(std::span<const double> scores, double delta);

/// Z + <0, q I>. Throws InvalidArgument for negative q.
Zonotope inflate(const Zonotope& z, double q);

struct CalibrationRecord {
  std::vector<double> scores;
  double delta = 0.05;
  double q_hat = 0.0;
  ScoreMode mode = ScoreMode::kPointwise;
  int n_instances = 0;
  int n_traj = 0;
  // Too few scores for the requested delta: q_hat is simply the largest score.
  bool degenerate = false;
  std::string predictor;

  int n_cal() const { return static_cast<int>(scores.size()); }
};

/// Convex blend of the current set and the endpoint anchor with weights (Ns-j)/Ns and j/Ns.
class BaselinePredictor final : public PredictorInterface {
 public:
  explicit BaselinePredictor(int order = 4);
  Zonotope predict(const Zonotope& current, const Zonotope& endpoint, const Substep& step) const override;
  std::string name() const override { return "baseline-blend"; }

 private:
  int order_;
};

/// One exact fine data-driven step; a sound predictor whose scores never exceed 0 on fine-chain prompts.
class FineStepPredictor final : public PredictorInterface {
 public:
  FineStepPredictor(MatrixZonotope fine_model, Zonotope input_set, Zonotope noise, int order);
  Zonotope predict(const Zonotope& current, const Zonotope& endpoint, const Substep& step) const override;
  std::string name() const override { return "fine-step-oracle"; }

 private:
  MatrixZonotope model_;
  Zonotope input_set_;
  Zonotope noise_;
  int order_;
};

/// Wraps another predictor and scales its generators about the center.
class ScaledPredictor final : public PredictorInterface {
 public:
  ScaledPredictor(const PredictorInterface& inner, double factor);
  Zonotope predict(const Zonotope& current, const Zonotope& endpoint, const Substep& step) const override;
  std::string name() const override;

 private:
  const PredictorInterface& inner_;
  double factor_;
};

struct AugmentationOptions {
  // Center shift drawn uniformly per axis from [-translation, translation].
  double translation = 0.1;
  double scale_low = 0.5;
  double scale_high = 1.5;
  bool rotate = true;
};

/// Random translation, per-generator scaling and a Haar-random rotation of the generators.
Zonotope augment_initial_set(const Zonotope& base, const AugmentationOptions& opt, std::mt19937_64& rng);

/// Everything needed to build calibration instances.
struct InstanceContext {
  sysdata::DiscreteSystem truth;  // fine-step ground truth used only for sampling states
  MatrixZonotope fine_model;
  MatrixZonotope coarse_model;
  Zonotope Zw_f;
  Zonotope Zw_c;
  reach::ChainConfig cfg;
};

/**
 * One augmented initial set and one coarse interval k. Teacher-forced prompts are
 * fine-chain sets; the coarse anchors are kept to measure the transfer to
 * anchored inference.
 */
struct CalibrationInstance {
  Zonotope X0;
  int k = 0;
  // fine_sets[j] is the fine-chain set at time index k*Ns + j for j = 0..Ns.
  std::vector<Zonotope> fine_sets;
  Zonotope anchor_k;
  Zonotope anchor_k1;
  // states[j-1][m]: trajectory m at time index k*Ns + j, j = 1..Ns-1.
  std::vector<std::vector<Vector>> states;
};

struct InstanceOptions {
  int n_traj = 20;
  AugmentationOptions augmentation;
};

std::vector<CalibrationInstance> generate_instances(const InstanceContext& ctx, const Zonotope& base_X0, int count,
                                                    std::uint64_t seed, const InstanceOptions& opt = {});

enum class PromptMode { kTeacherForced, kAnchored };

/// Predictions for substeps 1..Ns-1 of one instance, not inflated.
std::vector<Zonotope> predict_instance(const PredictorInterface& predictor, const CalibrationInstance& inst,
                                       const reach::ChainConfig& cfg, PromptMode mode);

/**
 * Scores every instance under teacher-forced prompts. Pointwise mode pools one
 * score per (instance, substep); path-wise mode keeps one score per instance.
 */
CalibrationRecord calibrate(const PredictorInterface& predictor, std::span<const CalibrationInstance> instances,
                            const reach::ChainConfig& cfg, double delta, ScoreMode mode);

struct Proportion {
  int covered = 0;
  int total = 0;
  double rate() const { return total > 0 ? static_cast<double>(covered) / total : 0.0; }
};

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval at the given normal quantile (1.96 for 95%).
Interval wilson_interval(const Proportion& p, double z = 1.96);

struct CoverageReport {
  double q_hat = 0.0;
  PromptMode prompts = PromptMode::kTeacherForced;
  // An (instance, substep) is covered when every sampled state lies in the inflated hull.
  Proportion pointwise;
  std::vector<Proportion> per_substep;  // index j-1
  Proportion path;
  // Fraction of individual sampled states inside the inflated hull.
  Proportion states;
};

CoverageReport evaluate_coverage(const PredictorInterface& predictor, std::span<const CalibrationInstance> instances,
                                 const reach::ChainConfig& cfg, double q_hat, PromptMode prompts);

}  // namespace ira::conformal
