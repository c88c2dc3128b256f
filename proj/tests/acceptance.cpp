// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <limits>
#include <thread>
#include <string>
#include <vector>

#include "ira/conformal.hpp"
#include "ira/ddmodel.hpp"
#include "ira/experiment.hpp"
#include "ira/reach.hpp"
#include "ira/setcalc.hpp"
#include "ira/sysdata.hpp"

namespace {

using ira::setcalc::Matrix;
using ira::setcalc::Vector;
using ira::setcalc::Zonotope;
namespace cli = ira::cli;
namespace cf = ira::conformal;
namespace reach = ira::reach;
namespace sc = ira::setcalc;

// Pinned tolerances and sizes.
constexpr int kMcSamples = 10000;
constexpr double kMcBudgetSeconds = 120.0;
constexpr int kNoiseDirections = 128;
constexpr double kNoiseMargin = -1e-9;
constexpr int kMembershipSeeds = 50;
constexpr double kInvarianceTol = 1e-8;
constexpr double kSensitivityGapMin = 1e-3;
constexpr int kNestedCases = 1000;
constexpr int kNestedDirections = 64;
constexpr double kDominanceTol = 1e-9;
constexpr double kAnchorTol = 0.3;
constexpr double kAnchorIraDd = 0.84;
constexpr double kAnchorDdMb = 4.0;
constexpr double kAnchorIraMb = 3.1;
constexpr double kSpeedupMin = 1.5;
constexpr int kSpeedupWorkers = 2;
constexpr double kCoverageMin = 0.93;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  C" << id << "  " << what << "  [" << detail << "]" << std::endl;
  failures += ok ? 0 : 1;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

Matrix stacked(const ira::sysdata::DiscreteSystem& sys) {
  Matrix AB(sys.A.rows(), sys.A.cols() + sys.B.cols());
  AB << sys.A, sys.B;
  return AB;
}

// min over directions of h_outer(d) - h_inner(d).
double dominance_margin(const Zonotope& inner, const Zonotope& outer, int n_dirs) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& d : sc::direction_set(inner.dim(), n_dirs)) {
    worst = std::min(worst, sc::support_function(outer, d) - sc::support_function(inner, d));
  }
  return worst;
}

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = nd(rng);
  return m;
}

void c1_containment(const cli::Setup& s) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = s.cfg.chain();
  const auto ira = reach::run_ira(cfg, s.coarse_model.mz, s.fine_model.mz, s.cfg.X0, s.Zw_c, s.Zw_f).merged(cfg);
  const int steps = cfg.K * cfg.Ns;
  const auto trajs = ira::sysdata::monte_carlo(s.fine, s.cfg.X0, s.cfg.U, steps, cfg.Ns, kMcSamples, s.cfg.mc_seed);
  long violations = 0;
  long checked = 0;
  for (const auto& traj : trajs) {
    for (int t = 1; t <= steps; ++t) {
      ++checked;
      if (!sc::contains_point(ira.set(static_cast<std::size_t>(t)), traj[static_cast<std::size_t>(t)])) ++violations;
    }
  }
  const double secs = seconds_since(start);
  report(1, violations == 0 && checked == static_cast<long>(kMcSamples) * steps && secs < kMcBudgetSeconds,
         "interpolated sets contain Monte Carlo trajectories",
         std::to_string(violations) + " violations in " + std::to_string(checked) + " checks, " + fmt(secs) + " s");
}

void c2_noise_dominance(const cli::ExperimentConfig& base) {
  const auto start = std::chrono::steady_clock::now();
  double worst = std::numeric_limits<double>::infinity();
  for (int ns = 2; ns <= 6; ++ns) {
    auto cfg = cli::with_substeps(base, ns);
    cfg.coarse_noise = reach::CoarseNoiseMode::kEstimated;
    const auto s = cli::build_setup(cfg);
    worst = std::min(worst, dominance_margin(s.Zw_c_exact, s.Zw_c, kNoiseDirections));
  }
  report(2, worst >= kNoiseMargin, "estimated coarse noise dominates the exact coarse noise, Ns = 2..6",
         "min support margin " + fmt(worst) + ", " + fmt(seconds_since(start)) + " s");
}

void c3_membership(const cli::ExperimentConfig& base) {
  int pass = 0;
  for (int seed = 1; seed <= kMembershipSeeds; ++seed) {
    auto cfg = base;
    cfg.data_seed = static_cast<std::uint64_t>(seed);
    const auto s = cli::build_setup(cfg);
    const bool fine = ira::ddmodel::verify_membership(s.fine_model, stacked(s.fine));
    const bool coarse = ira::ddmodel::verify_membership(s.coarse_model, stacked(s.coarse));
    pass += (fine && coarse) ? 1 : 0;
  }
  report(3, pass == kMembershipSeeds, "true [A B] lies in the identified model set at both resolutions",
         std::to_string(pass) + "/" + std::to_string(kMembershipSeeds) + " seeds");
}

void c4_invariance(const cli::Setup& s) {
  const double mb_err = cli::mb_invariance_error(s, s.cfg.K);
  const auto rep = reach::step_size_sensitivity_report(s.coarse_model.mz, s.fine_model.mz, s.cfg.X0, s.cfg.U, s.Zw_c,
                                                       s.Zw_f, s.cfg.Ns, s.cfg.order);
  report(4, mb_err <= kInvarianceTol && rep.differs && rep.max_relative_gap > kSensitivityGapMin,
         "model-based chains are step-size invariant while data-driven ones are not",
         "MB support error " + fmt(mb_err) + ", DD relative width gap " + fmt(rep.max_relative_gap));
}

void c5_monotonicity(const cli::Setup& s) {
  std::mt19937_64 rng(20251);
  const auto n = s.cfg.X0.dim();
  int pass = 0;
  int reduced_pass = 0;
  for (int c = 0; c < kNestedCases; ++c) {
    const Zonotope z1(gaussian(n, 1, rng).col(0), 0.1 * gaussian(n, 3 + c % 8, rng));
    const Zonotope extra(Vector::Zero(n), 0.05 * gaussian(n, 1 + c % 5, rng));
    const Zonotope z2 = sc::minkowski_sum(z1, extra);
    const auto r1 = reach::propagate_step(s.fine_model.mz, z1, s.cfg.U, s.Zw_f, reach::kNoReduction);
    const auto r2 = reach::propagate_step(s.fine_model.mz, z2, s.cfg.U, s.Zw_f, reach::kNoReduction);
    pass += dominance_margin(r1, r2, kNestedDirections) >= -kDominanceTol ? 1 : 0;
    const auto q1 = reach::propagate_step(s.fine_model.mz, z1, s.cfg.U, s.Zw_f, s.cfg.order);
    const auto q2 = reach::propagate_step(s.fine_model.mz, z2, s.cfg.U, s.Zw_f, s.cfg.order);
    reduced_pass += dominance_margin(q1, q2, kNestedDirections) >= -kDominanceTol ? 1 : 0;
  }
  report(5, pass == kNestedCases, "propagation preserves support dominance of nested sets",
         std::to_string(pass) + "/" + std::to_string(kNestedCases) + " cases; with order-" +
             std::to_string(s.cfg.order) + " reduction " + std::to_string(reduced_pass) + "/" +
             std::to_string(kNestedCases) + " (informational)");
}

}  // namespace

int main() {
  std::cout << "acceptance suite (tolerances pinned in tests/acceptance.cpp)" << std::endl;
  const cli::ExperimentConfig base;  // benchmark defaults: K = 2, Ns = 3
  const auto setup = cli::build_setup(base);

  c1_containment(setup);
  c2_noise_dominance(base);
  c3_membership(base);
  c4_invariance(setup);
  c5_monotonicity(setup);

  // Sweep grid shared by criteria 6, 7 and 8.
  std::vector<cli::SweepRow> grid;
  for (int ns = 2; ns <= 6; ++ns) {
    const auto s = ns == base.Ns ? setup : cli::build_setup(cli::with_substeps(base, ns));
    for (int k = 2; k <= 5; ++k) grid.push_back(cli::sweep_cell(s, k, kSpeedupWorkers, 1));
  }

  {
    int premise = 0;
    int dominated = 0;
    for (const auto& r : grid) {
      premise += r.premise_intervals;
      dominated += r.premise_dominated;
    }
    report(6, premise > 0 && dominated == premise,
           "interpolants are dominated by the fine chain wherever the hull premise holds",
           std::to_string(dominated) + "/" + std::to_string(premise) + " premise-true intervals over " +
               std::to_string(grid.size()) + " (K, Ns) cells");
  }

  {
    std::vector<cli::SweepRow> ns3;
    for (const auto& r : grid)
      if (r.Ns == 3) ns3.push_back(r);
    bool trends = true;
    std::string values;
    for (std::size_t i = 0; i < ns3.size(); ++i) {
      const auto& r = ns3[i];
      trends = trends && r.ira_dd < 1.0 && r.dd_mb > 1.0 && r.ira_mb > 1.0;
      if (i > 0) {
        trends = trends && r.ira_dd < ns3[i - 1].ira_dd && r.dd_mb > ns3[i - 1].dd_mb && r.ira_mb > ns3[i - 1].ira_mb;
      }
      values += (i ? "; K=" : "K=") + std::to_string(r.K) + " " + fmt(r.ira_dd) + "/" + fmt(r.dd_mb) + "/" +
                fmt(r.ira_mb);
    }
    const auto& a = ns3.front();
    const bool anchor = std::abs(a.ira_dd - kAnchorIraDd) <= kAnchorTol && std::abs(a.dd_mb - kAnchorDdMb) <= kAnchorTol &&
                        std::abs(a.ira_mb - kAnchorIraMb) <= kAnchorTol;
    report(7, trends && anchor, "width-ratio trends over K at Ns = 3 and the K = 2 anchor row",
           std::string("trends ") + (trends ? "hold" : "violated") + ", anchor " + (anchor ? "within" : "outside") +
               " +-0.3 of (0.84, 4.0, 3.1); IRA/DD, DD/MB, IRA/MB: " + values);
  }

  {
    bool counts = true;
    for (const auto& r : grid) {
      counts = counts && r.mults_fine == r.K * r.Ns && r.mults_phase1 == r.K && r.mults_phase2 == r.K * (r.Ns - 1);
    }
    const auto row = cli::sweep_cell(setup, 2, kSpeedupWorkers, base.timing_reps);
    report(8, counts && row.speedup_par >= kSpeedupMin,
           "multiplication counts match the work model and parallel IRA is at least 1.5x faster than fine DD",
           std::string("counts ") + (counts ? "exact" : "wrong") + " on " + std::to_string(grid.size()) +
               " cells; measured speedup " + fmt(row.speedup_par) + " with " + std::to_string(kSpeedupWorkers) +
               " workers on " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads");
  }

  {
    const cf::BaselinePredictor baseline(base.order);
    const auto ctx = cli::instance_context(setup);
    cf::InstanceOptions opt;
    opt.n_traj = base.n_traj;
    const auto cal = cf::generate_instances(ctx, base.X0, base.calibration_instances, base.calibration_seed, opt);
    const auto test = cf::generate_instances(ctx, base.X0, base.test_instances, base.calibration_seed + 1000003, opt);
    const auto point = cf::calibrate(baseline, cal, ctx.cfg, base.delta, cf::ScoreMode::kPointwise);
    const auto path = cf::calibrate(baseline, cal, ctx.cfg, base.delta, cf::ScoreMode::kPathwise);
    const auto cov = cf::evaluate_coverage(baseline, test, ctx.cfg, point.q_hat, cf::PromptMode::kTeacherForced);
    const auto ci = cf::wilson_interval(cov.pointwise);
    report(9, cov.pointwise.rate() >= kCoverageMin && path.q_hat >= point.q_hat,
           "calibrated baseline reaches the target coverage and the path quantile dominates",
           "coverage " + fmt(cov.pointwise.rate()) + " (95% CI " + fmt(ci.low) + ".." + fmt(ci.high) + ") on " +
               std::to_string(cov.pointwise.total) + " test prompts; q_point " + fmt(point.q_hat) + ", q_path " +
               fmt(path.q_hat));
  }

  {
    const std::vector<double> four{0.1, 0.2, 0.3, 0.4};
    const bool ex1 = cf::conformal_quantile(four, 0.05) == 0.4;
    const std::vector<double> negative{-0.5, -0.25, -1.0};
    const bool ex2 = cf::conformal_quantile(negative, 0.05) == 0.0;
    std::vector<double> scores(99);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : scores) v = u(rng);
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    const bool ex3 = cf::conformal_quantile(scores, 0.05) == std::max(0.0, sorted[94]);
    report(10, ex1 && ex2 && ex3, "conformal quantile worked examples",
           std::string("level>1 -> max: ") + (ex1 ? "ok" : "wrong") + ", negative -> 0: " + (ex2 ? "ok" : "wrong") +
               ", N=99 -> 95th order statistic: " + (ex3 ? "ok" : "wrong"));
  }

  {
    const auto res = cli::run_ablation(setup, nullptr, std::nullopt, kSpeedupWorkers, 1);
    double dd_speedup = 0.0;
    double seq_ratio = -1.0;
    double par_ratio = -2.0;
    for (const auto& r : res.rows) {
      if (r.method == "fine DD") dd_speedup = r.speedup;
      if (r.method == "IRA-seq") seq_ratio = r.width_ratio;
      if (r.method == "IRA-par") par_ratio = r.width_ratio;
    }
    report(12, res.seq_par_identical && seq_ratio == par_ratio && dd_speedup == 1.0,
           "IRA-seq and IRA-par sets are bitwise identical and fine DD is the 1.00x reference",
           std::string("identical ") + (res.seq_par_identical ? "yes" : "no") + ", width ratios " + fmt(seq_ratio) +
               " / " + fmt(par_ratio) + ", DD speedup " + fmt(dd_speedup));
  }

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
