#pragma once

/**
 * @file experiment.hpp
 * @brief Configuration, setup and the experiment drivers behind the command-line tool.
 *
 * Every field of ExperimentConfig defaults to the five-state benchmark, so an
 * empty JSON object is a valid configuration. A run manifest embeds the full
 * configuration and is itself accepted as a configuration file.
 */

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ira/conformal.hpp"
#include "ira/ddmodel.hpp"
#include "ira/reach.hpp"
#include "ira/sysdata.hpp"

namespace ira::cli {

using setcalc::Matrix;
using setcalc::Zonotope;

struct ExperimentConfig {
  // "benchmark5d" or "custom" (A_c, B_c given explicitly).
  std::string system = "benchmark5d";
  Matrix A_c;
  Matrix B_c;
  double sigma_w = 0.005;
  double dt_fine = 0.05;
  double dt_coarse = 0.15;
  int T = 150;
  int K = 2;
  int Ns = 3;
  int order = 4;
  Zonotope X0 = sysdata::benchmark_initial_set();
  Zonotope U = sysdata::benchmark_input_set();
  reach::CoarseNoiseMode coarse_noise = reach::CoarseNoiseMode::kEstimated;

  std::uint64_t data_seed = 1;
  std::uint64_t mc_seed = 2;
  std::uint64_t calibration_seed = 3;
  int workers = 2;
  int timing_reps = 5;
  int mc_samples = 10000;

  // Conformal calibration.
  double delta = 0.05;
  int calibration_instances = 200;
  int test_instances = 500;
  int n_traj = 20;
  conformal::ScoreMode score_mode = conformal::ScoreMode::kPointwise;

  // External predictor; empty command means none is configured.
  std::vector<std::string> predictor_command;
  int kappa = 0;  // 0: order * n
  std::string calibration_file;

  std::vector<int> sweep_K{2, 3, 4, 5};
  std::vector<int> sweep_Ns{3};

  int training_samples = 2000;
  double holdout_fraction = 0.15;

  std::string out = "out";

  int effective_kappa() const { return kappa > 0 ? kappa : order * static_cast<int>(X0.dim()); }
  reach::ChainConfig chain(int K_override = 0) const;
};

/// Parses and validates; throws ConfigError (including when dt_coarse != Ns * dt_fine).
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);
/// Throws ConfigError on inconsistent values.
void validate(const ExperimentConfig& cfg);

/// Returns cfg with Ns replaced and dt_coarse adjusted to match.
ExperimentConfig with_substeps(const ExperimentConfig& cfg, int Ns);

/// Discretized systems, data at both resolutions and the identified model sets.
struct Setup {
  ExperimentConfig cfg;
  sysdata::DiscreteSystem fine;
  sysdata::DiscreteSystem coarse;
  sysdata::DataMatrices fine_data;
  sysdata::DataMatrices coarse_data;
  ddmodel::ModelSet fine_model;
  ddmodel::ModelSet coarse_model;
  Zonotope Zw_f;
  // Noise used by the coarse chain (estimated or exact, per cfg.coarse_noise).
  Zonotope Zw_c;
  Zonotope Zw_c_exact;
  int noise_mults = 0;
};

/// Throws RankError naming the failing resolution.
Setup build_setup(const ExperimentConfig& cfg);

/// Median wall-clock milliseconds of `reps` runs after one discarded warm-up run.
double median_ms(const std::function<void()>& fn, int reps);

/// Mean hull width of a chain over all dimensions and time points after t = 0.
double chain_width(const reach::ReachChain& chain);

struct SweepRow {
  int K = 0;
  int Ns = 0;
  double t_dd_ms = 0.0;
  double t_ira_seq_ms = 0.0;
  double t_ira_par_ms = 0.0;
  double speedup_seq = 0.0;
  double speedup_par = 0.0;
  double depth_speedup = 0.0;
  double ira_dd = 0.0;
  double dd_mb = 0.0;
  double ira_mb = 0.0;
  double hausdorff = 0.0;
  int mults_fine = 0;
  int mults_phase1 = 0;
  int mults_phase2 = 0;
  int premise_intervals = 0;
  // Premise-true intervals whose interpolants are support-dominated by the fine chain.
  int premise_dominated = 0;
};

SweepRow sweep_cell(const Setup& setup, int K, int workers, int reps);

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct AblationRow {
  std::string method;
  double runtime_ms = 0.0;
  double speedup = 0.0;
  double width_ratio = 0.0;
  std::string guarantee;
};

/**
 * Rows IRA-seq, IRA-par, [TA-IRA no q_hat, TA-IRA + conformal when a predictor is given],
 * fine DD. Also reports whether IRA-seq and IRA-par sets are bitwise identical.
 */
struct AblationResult {
  std::vector<AblationRow> rows;
  bool seq_par_identical = false;
};

AblationResult run_ablation(const Setup& setup, const conformal::PredictorInterface* predictor,
                            std::optional<double> q_hat, int workers, int reps);

std::string ablation_csv(const AblationResult& res);

struct CalibrationOutcome {
  conformal::CalibrationRecord record;
  conformal::CoverageReport teacher_forced;
  conformal::CoverageReport anchored;
  // Teacher-forced minus anchored pointwise coverage on the test instances.
  double transfer_gap = 0.0;
};

CalibrationOutcome run_calibration(const Setup& setup, const conformal::PredictorInterface& predictor);

conformal::InstanceContext instance_context(const Setup& setup);

/**
 * Largest support-function disagreement, over 64 directions and the K + 1 shared
 * coarse times, between unreduced model-based chains run at the coarse step
 * (exact coarse noise) and at the fine step with inputs held for Ns steps.
 */
double mb_invariance_error(const Setup& setup, int K);

/// Writes pairs.jsonl (every pair, tagged with its split) and calibration.jsonl (held-out trajectories); returns the pair count.
int export_training(const Setup& setup, const std::filesystem::path& dir);

}  // namespace ira::cli
