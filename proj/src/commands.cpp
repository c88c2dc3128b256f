#include "ira/commands.hpp"

#include <Eigen/Core>
#include <chrono>
#include <functional>
#include <memory>
#include <ostream>

#include "ira/error.hpp"
#include "ira/experiment.hpp"
#include "ira/io.hpp"
#include "ira/protocol.hpp"

namespace ira::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct Run {
  ExperimentConfig cfg;
  json raw;  // the document the config came from (a manifest when re-running)
  fs::path out;
};

Run load(const CommandOptions& opt) {
  Run run;
  run.raw = json::object();
  if (opt.config) {
    try {
      run.raw = io::read_json(*opt.config);
    } catch (const std::exception& e) {
      throw ConfigError("cannot read config " + opt.config->string() + ": " + e.what());
    }
  }
  run.cfg = parse_config(run.raw);
  if (opt.workers) run.cfg.workers = *opt.workers;
  if (opt.seed) run.cfg.data_seed = *opt.seed;
  if (opt.out) run.cfg.out = *opt.out;
  if (opt.calibration) run.cfg.calibration_file = *opt.calibration;
  validate(run.cfg);
  run.out = run.cfg.out;
  fs::create_directories(run.out);
  return run;
}

// Manifest fields outside "config" only apply when the flag was not given.
std::string manifest_string(const Run& run, const char* key, const std::optional<std::string>& flag,
                            const std::string& fallback) {
  if (flag) return *flag;
  if (run.raw.contains(key) && run.raw.at(key).is_string()) return run.raw.at(key).get<std::string>();
  return fallback;
}

std::vector<int> manifest_range(const Run& run, const char* key, const std::vector<int>& flag,
                                const std::vector<int>& fallback) {
  if (!flag.empty()) return flag;
  if (run.raw.contains(key) && run.raw.at(key).is_array()) return run.raw.at(key).get<std::vector<int>>();
  return fallback;
}

json decisions(const ExperimentConfig& cfg) {
  return json::array({
      "inputs held constant over each coarse interval (zero-order hold of " + std::to_string(cfg.Ns) +
          " fine steps) in data collection, Monte Carlo and model-based chains",
      std::string("coarse noise: ") + std::string(reach::to_string(cfg.coarse_noise)) +
          "; estimation counted as preprocessing, not IRA time",
      "timing: median of timing_reps runs after one discarded warm-up",
      "width ratio: mean interval-hull width over dimensions and fine time points excluding t=0",
      "hausdorff: max over time points of the support-function gap on 128 directions",
      "conformal: teacher-forced prompts, fine-chain endpoint, pointwise scores pooled over substeps",
  });
}

void write_manifest(const Run& run, const std::string& command, json extra, const std::vector<std::string>& outputs) {
  json m{{"tool", "ira"},
         {"command", command},
         {"config", to_json(run.cfg)},
         {"decisions", decisions(run.cfg)},
         {"versions",
          {{"ira", kToolVersion},
           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION)},
           {"compiler", __VERSION__}}},
         {"outputs", outputs}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  io::write_json(run.out / "manifest.json", m);
}

std::unique_ptr<protocol::CommandPredictor> start_predictor(const ExperimentConfig& cfg) {
  if (cfg.predictor_command.empty()) throw PredictorError("no predictor command configured");
  protocol::CommandPredictor::Options o;
  o.argv = cfg.predictor_command;
  o.kappa = cfg.effective_kappa();
  return std::make_unique<protocol::CommandPredictor>(std::move(o));
}

conformal::CalibrationRecord read_calibration(const std::string& path) {
  if (path.empty()) throw ConfigError("no calibration record given (--calibration or calibration_file)");
  if (!fs::exists(path)) throw ConfigError("calibration record not found: " + path);
  try {
    return io::calibration_from_json(io::read_json(path));
  } catch (const std::exception& e) {
    throw ConfigError("cannot read calibration record " + path + ": " + e.what());
  }
}

json proportion_json(const conformal::Proportion& p) {
  const auto ci = conformal::wilson_interval(p);
  return {{"covered", p.covered}, {"total", p.total}, {"rate", p.rate()}, {"ci_low", ci.low}, {"ci_high", ci.high}};
}

json coverage_json(const conformal::CoverageReport& r) {
  return {{"pointwise", proportion_json(r.pointwise)}, {"path", proportion_json(r.path)},
          {"states", proportion_json(r.states)}};
}

int guarded(const std::function<int()>& body, std::ostream& log) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const RankError& e) {
    log << "rank check failed: " << e.what() << '\n';
    return kExitRank;
  } catch (const PredictorError& e) {
    log << "predictor unavailable: " << e.what() << '\n';
    return kExitPredictor;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

std::string timing_csv(const reach::ReachChain& chain) {
  std::string s = "index,t,kind,step_ms\n";
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& st = chain.steps[i];
    s += std::to_string(i) + "," + json(st.t).dump() + "," + std::string(reach::to_string(st.kind)) + "," +
         json(st.step_ms).dump() + "\n";
  }
  return s;
}

}  // namespace

int cmd_reach(const CommandOptions& opt, std::ostream& log) {
  return guarded(
      [&] {
        Run run = load(opt);
        const std::string method = manifest_string(run, "method", opt.method, "ira");
        if (method != "dd" && method != "ira" && method != "ta-ira" && method != "mb") {
          throw ConfigError("unknown method '" + method + "' (expected dd, ira, ta-ira or mb)");
        }
        // Check predictor preconditions before the data-driven setup work.
        std::unique_ptr<protocol::CommandPredictor> predictor;
        std::optional<conformal::CalibrationRecord> record;
        if (method == "ta-ira") {
          if (run.cfg.predictor_command.empty()) throw PredictorError("ta-ira needs predictor_command");
          record = read_calibration(run.cfg.calibration_file);
          predictor = start_predictor(run.cfg);
        }
        const Setup s = build_setup(run.cfg);
        const auto cc = run.cfg.chain();
        json summary{{"method", method}, {"K", cc.K}, {"Ns", cc.Ns}, {"order", cc.order}};

        const auto start = std::chrono::steady_clock::now();
        reach::ReachChain chain;
        if (method == "dd") {
          chain = reach::run_fine_chain(cc, s.fine_model.mz, run.cfg.X0, s.Zw_f);
        } else if (method == "mb") {
          chain = reach::run_model_based(s.fine.A, s.fine.B, run.cfg.X0, run.cfg.U, s.Zw_f, cc.K * cc.Ns, cc.dt_fine,
                                         cc.Ns, cc.order);
        } else {
          reach::IraOptions io_opt;
          io_opt.workers = run.cfg.workers;
          if (predictor) {
            io_opt.predictor = predictor.get();
            io_opt.q_hat = record->q_hat;
            summary["q_hat"] = record->q_hat;
            summary["predictor"] = predictor->name();
          }
          const auto r = reach::run_ira(cc, s.coarse_model.mz, s.fine_model.mz, run.cfg.X0, s.Zw_c, s.Zw_f, io_opt);
          chain = r.merged(cc);
          summary["phase1_mults"] = r.phase1_mults;
          summary["phase2_mults"] = r.phase2_mults;
          summary["predictor_calls"] = r.predictor_calls;
          summary["phase1_ms"] = r.phase1_ms;
          summary["workers"] = run.cfg.workers;
        }
        summary["wall_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        summary["mult_count"] = chain.mult_count;
        summary["n_sets"] = chain.size();
        summary["mean_width"] = chain_width(chain);

        io::write_json(run.out / "chain.json", io::chain_to_json(chain));
        io::write_text(run.out / "chain.csv", io::chain_to_csv(chain));
        io::write_text(run.out / "timing.csv", timing_csv(chain));
        io::write_json(run.out / "summary.json", summary);
        write_manifest(run, "reach", {{"method", method}},
                       {"chain.json", "chain.csv", "timing.csv", "summary.json"});
        log << "reach " << method << ": " << chain.size() << " sets, " << chain.mult_count
            << " model multiplications -> " << run.out.string() << '\n';
        return static_cast<int>(kExitOk);
      },
      log);
}

int cmd_sweep(const CommandOptions& opt, std::ostream& log) {
  return guarded(
      [&] {
        Run run = load(opt);
        const auto ks = manifest_range(run, "k_range", opt.k_range, run.cfg.sweep_K);
        const auto nss = manifest_range(run, "ns_range", opt.ns_range, run.cfg.sweep_Ns);
        if (ks.empty() || nss.empty()) throw ConfigError("sweep ranges must be nonempty");
        for (int k : ks)
          if (k < 1) throw ConfigError("K values must be at least 1");
        std::vector<SweepRow> rows;
        for (int ns : nss) {
          const auto cfg = with_substeps(run.cfg, ns);
          validate(cfg);
          const Setup s = build_setup(cfg);
          for (int k : ks) {
            rows.push_back(sweep_cell(s, k, run.cfg.workers, run.cfg.timing_reps));
            const auto& r = rows.back();
            log << "K=" << k << " Ns=" << ns << " IRA/DD=" << r.ira_dd << " DD/MB=" << r.dd_mb
                << " speedup(par)=" << r.speedup_par << '\n';
          }
        }
        io::write_text(run.out / "sweep.csv", sweep_csv(rows));
        write_manifest(run, "sweep", {{"k_range", ks}, {"ns_range", nss}}, {"sweep.csv"});
        return static_cast<int>(kExitOk);
      },
      log);
}

int cmd_calibrate(const CommandOptions& opt, std::ostream& log) {
  return guarded(
      [&] {
        Run run = load(opt);
        std::unique_ptr<conformal::PredictorInterface> predictor;
        if (run.cfg.predictor_command.empty()) {
          predictor = std::make_unique<conformal::BaselinePredictor>(run.cfg.order);
        } else {
          predictor = start_predictor(run.cfg);
        }
        const Setup s = build_setup(run.cfg);
        const auto outcome = run_calibration(s, *predictor);
        if (outcome.record.degenerate) {
          log << "warning: too few calibration scores for delta=" << run.cfg.delta
              << "; q_hat is the largest score\n";
        }
        io::write_json(run.out / "calibration.json", io::to_json(outcome.record));
        io::write_text(run.out / "coverage.csv", io::coverage_to_csv(outcome.teacher_forced));
        io::write_text(run.out / "coverage_anchored.csv", io::coverage_to_csv(outcome.anchored));
        io::write_json(run.out / "summary.json", {{"predictor", predictor->name()},
                                                  {"q_hat", outcome.record.q_hat},
                                                  {"N_cal", outcome.record.n_cal()},
                                                  {"degenerate", outcome.record.degenerate},
                                                  {"teacher_forced", coverage_json(outcome.teacher_forced)},
                                                  {"anchored", coverage_json(outcome.anchored)},
                                                  {"transfer_gap", outcome.transfer_gap}});
        write_manifest(run, "calibrate", json::object(),
                       {"calibration.json", "coverage.csv", "coverage_anchored.csv", "summary.json"});
        log << "calibrate " << predictor->name() << ": q_hat=" << outcome.record.q_hat
            << " coverage=" << outcome.teacher_forced.pointwise.rate() << '\n';
        return static_cast<int>(kExitOk);
      },
      log);
}

int cmd_ablation(const CommandOptions& opt, std::ostream& log) {
  return guarded(
      [&] {
        Run run = load(opt);
        std::optional<double> q_hat;
        if (!run.cfg.calibration_file.empty()) q_hat = read_calibration(run.cfg.calibration_file).q_hat;
        std::unique_ptr<protocol::CommandPredictor> predictor;
        if (!run.cfg.predictor_command.empty()) {
          try {
            predictor = start_predictor(run.cfg);
          } catch (const PredictorError& e) {
            log << "warning: skipping TA-IRA rows: " << e.what() << '\n';
          }
        }
        const Setup s = build_setup(run.cfg);
        const auto res = run_ablation(s, predictor.get(), q_hat, run.cfg.workers, run.cfg.timing_reps);
        io::write_text(run.out / "ablation.csv", ablation_csv(res));
        io::write_json(run.out / "summary.json",
                       {{"seq_par_identical", res.seq_par_identical}, {"ta_rows", predictor != nullptr}});
        write_manifest(run, "ablation", json::object(), {"ablation.csv", "summary.json"});
        for (const auto& r : res.rows) log << r.method << ": width ratio " << r.width_ratio << '\n';
        return static_cast<int>(kExitOk);
      },
      log);
}

int cmd_sensitivity(const CommandOptions& opt, std::ostream& log) {
  return guarded(
      [&] {
        Run run = load(opt);
        const Setup s = build_setup(run.cfg);
        const auto rep = reach::step_size_sensitivity_report(s.coarse_model.mz, s.fine_model.mz, run.cfg.X0, run.cfg.U,
                                                             s.Zw_c, s.Zw_f, run.cfg.Ns, run.cfg.order);
        const double mb_err = mb_invariance_error(s, run.cfg.K);
        io::write_json(run.out / "sensitivity.json",
                       {{"coarse_width", io::vector_to_json(rep.coarse_width)},
                        {"fine_width", io::vector_to_json(rep.fine_width)},
                        {"hausdorff", rep.hausdorff},
                        {"max_relative_gap", rep.max_relative_gap},
                        {"data_driven_differs", rep.differs},
                        {"model_based_max_support_error", mb_err}});
        write_manifest(run, "sensitivity", json::object(), {"sensitivity.json"});
        log << "data-driven relative width gap " << rep.max_relative_gap << (rep.differs ? " (differs)" : "")
            << "; model-based support error " << mb_err << '\n';
        return static_cast<int>(kExitOk);
      },
      log);
}

int cmd_export_training(const CommandOptions& opt, std::ostream& log) {
  return guarded(
      [&] {
        Run run = load(opt);
        const Setup s = build_setup(run.cfg);
        const int pairs = export_training(s, run.out);
        io::write_json(run.out / "summary.json", {{"pairs", pairs}, {"kappa", run.cfg.effective_kappa()}});
        write_manifest(run, "export-training", json::object(), {"pairs.jsonl", "calibration.jsonl", "summary.json"});
        log << "exported " << pairs << " pairs -> " << run.out.string() << '\n';
        return static_cast<int>(kExitOk);
      },
      log);
}

int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log) {
  if (name == "reach") return cmd_reach(opt, log);
  if (name == "sweep") return cmd_sweep(opt, log);
  if (name == "calibrate") return cmd_calibrate(opt, log);
  if (name == "ablation") return cmd_ablation(opt, log);
  if (name == "sensitivity") return cmd_sensitivity(opt, log);
  if (name == "export-training") return cmd_export_training(opt, log);
  log << "unknown command '" << name << "'\n";
  return kExitConfig;
}

}  // namespace ira::cli
