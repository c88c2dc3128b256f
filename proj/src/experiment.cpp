#include "ira/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ira/error.hpp"
#include "ira/io.hpp"
#include "ira/tokens.hpp"

namespace ira::cli {

using nlohmann::json;

namespace {

json rows_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(io::vector_to_json(m.row(r).transpose()));
  return out;
}

Matrix rows_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError(std::string(name) + " must be a non-empty array of rows");
  }
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != j[0].size()) throw ConfigError(std::string(name) + " has ragged rows");
    for (std::size_t c = 0; c < j[r].size(); ++c) {
      if (!j[r][c].is_number()) throw ConfigError(std::string(name) + " must contain numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

Zonotope read_set(const json& j, const char* key, const Zonotope& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return io::zonotope_from_json(j.at(key));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "system",          "A_c",          "B_c",         "sigma_w",        "dt_fine",
      "dt_coarse",       "T",            "K",           "Ns",             "order",
      "X0",              "U",            "coarse_noise", "data_seed",      "mc_seed",
      "calibration_seed", "workers",     "timing_reps", "mc_samples",     "delta",
      "calibration_instances", "test_instances", "n_traj", "score_mode", "predictor_command",
      "kappa",           "calibration_file", "sweep_K", "sweep_Ns",       "training_samples",
      "holdout_fraction", "out"};
  return keys;
}

sysdata::ContinuousSystem continuous_system(const ExperimentConfig& cfg) {
  if (cfg.system == "benchmark5d") {
    auto sys = sysdata::benchmark_system();
    sys.sigma_w = cfg.sigma_w;
    return sys;
  }
  return sysdata::ContinuousSystem{cfg.A_c, cfg.B_c, cfg.sigma_w};
}

}  // namespace

reach::ChainConfig ExperimentConfig::chain(int K_override) const {
  reach::ChainConfig c;
  c.K = K_override > 0 ? K_override : K;
  c.Ns = Ns;
  c.order = order;
  c.dt_fine = dt_fine;
  c.input_set = U;
  c.coarse_noise_mode = coarse_noise;
  return c;
}

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  Eigen::Index n = 5;
  Eigen::Index m = 1;
  if (cfg.system == "custom") {
    if (cfg.A_c.rows() == 0 || cfg.A_c.rows() != cfg.A_c.cols()) fail("A_c must be a non-empty square matrix");
    if (cfg.B_c.rows() != cfg.A_c.rows() || cfg.B_c.cols() == 0) fail("B_c must have as many rows as A_c");
    n = cfg.A_c.rows();
    m = cfg.B_c.cols();
  } else if (cfg.system != "benchmark5d") {
    fail("system must be 'benchmark5d' or 'custom'");
  }
  if (!(cfg.sigma_w >= 0.0)) fail("sigma_w must be nonnegative");
  if (!(cfg.dt_fine > 0.0) || !(cfg.dt_coarse > 0.0)) fail("step sizes must be positive");
  if (cfg.Ns < 2) fail("Ns must be at least 2");
  if (std::abs(cfg.dt_coarse - cfg.Ns * cfg.dt_fine) > 1e-9 * cfg.dt_coarse) {
    fail("dt_coarse must equal Ns * dt_fine (got " + std::to_string(cfg.dt_coarse) + " vs " +
         std::to_string(cfg.Ns * cfg.dt_fine) + ")");
  }
  if (cfg.K < 1) fail("K must be at least 1");
  if (cfg.order < 1) fail("order must be at least 1");
  if (cfg.T < n + m) fail("T must be at least n + m");
  if (cfg.T / cfg.Ns < n + m) fail("T / Ns coarse samples must be at least n + m");
  if (cfg.X0.dim() != n) fail("X0 dimension does not match the system");
  if (cfg.U.dim() != m) fail("U dimension does not match the system");
  if (cfg.workers < 1) fail("workers must be at least 1");
  if (cfg.timing_reps < 1) fail("timing_reps must be at least 1");
  if (cfg.mc_samples < 1) fail("mc_samples must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) fail("delta must lie in (0, 1)");
  if (cfg.calibration_instances < 1 || cfg.test_instances < 1 || cfg.n_traj < 1) {
    fail("calibration_instances, test_instances and n_traj must be positive");
  }
  if (cfg.kappa < 0) fail("kappa must be nonnegative");
  if (cfg.sweep_K.empty() || cfg.sweep_Ns.empty()) fail("sweep ranges must be nonempty");
  for (int k : cfg.sweep_K)
    if (k < 1) fail("sweep_K entries must be at least 1");
  for (int s : cfg.sweep_Ns) {
    if (s < 2) fail("sweep_Ns entries must be at least 2");
    if (cfg.T / s < n + m) fail("T / Ns is too small for sweep Ns = " + std::to_string(s));
  }
  if (cfg.training_samples < 1) fail("training_samples must be positive");
  if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0)) fail("holdout_fraction must lie in (0, 1)");
}

ExperimentConfig parse_config(const json& input) {
  if (!input.is_object()) throw ConfigError("configuration must be a JSON object");
  // A run manifest carries the configuration under "config".
  const json& j = input.contains("config") && input.at("config").is_object() ? input.at("config") : input;
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().contains(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  ExperimentConfig cfg;
  read(j, "system", cfg.system);
  if (j.contains("A_c")) cfg.A_c = rows_from_json(j.at("A_c"), "A_c");
  if (j.contains("B_c")) cfg.B_c = rows_from_json(j.at("B_c"), "B_c");
  read(j, "sigma_w", cfg.sigma_w);
  read(j, "dt_fine", cfg.dt_fine);
  read(j, "Ns", cfg.Ns);
  cfg.dt_coarse = cfg.Ns * cfg.dt_fine;
  read(j, "dt_coarse", cfg.dt_coarse);
  read(j, "T", cfg.T);
  read(j, "K", cfg.K);
  read(j, "order", cfg.order);
  if (cfg.system == "custom" && cfg.A_c.rows() > 0) {
    const auto n = cfg.A_c.rows();
    cfg.X0 = Zonotope(setcalc::Vector::Ones(n), 0.1 * Matrix::Identity(n, n));
  }
  cfg.X0 = read_set(j, "X0", cfg.X0);
  cfg.U = read_set(j, "U", cfg.U);
  if (j.contains("coarse_noise")) {
    const auto mode = j.at("coarse_noise").get<std::string>();
    if (mode == "estimated") cfg.coarse_noise = reach::CoarseNoiseMode::kEstimated;
    else if (mode == "exact-oracle") cfg.coarse_noise = reach::CoarseNoiseMode::kExactOracle;
    else throw ConfigError("coarse_noise must be 'estimated' or 'exact-oracle'");
  }
  read(j, "data_seed", cfg.data_seed);
  read(j, "mc_seed", cfg.mc_seed);
  read(j, "calibration_seed", cfg.calibration_seed);
  read(j, "workers", cfg.workers);
  read(j, "timing_reps", cfg.timing_reps);
  read(j, "mc_samples", cfg.mc_samples);
  read(j, "delta", cfg.delta);
  read(j, "calibration_instances", cfg.calibration_instances);
  read(j, "test_instances", cfg.test_instances);
  read(j, "n_traj", cfg.n_traj);
  if (j.contains("score_mode")) {
    try {
      cfg.score_mode = conformal::score_mode_from_string(j.at("score_mode").get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  read(j, "predictor_command", cfg.predictor_command);
  read(j, "kappa", cfg.kappa);
  read(j, "calibration_file", cfg.calibration_file);
  read(j, "sweep_K", cfg.sweep_K);
  read(j, "sweep_Ns", cfg.sweep_Ns);
  read(j, "training_samples", cfg.training_samples);
  read(j, "holdout_fraction", cfg.holdout_fraction);
  read(j, "out", cfg.out);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = io::read_json(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j{{"system", cfg.system},
         {"sigma_w", cfg.sigma_w},
         {"dt_fine", cfg.dt_fine},
         {"dt_coarse", cfg.dt_coarse},
         {"T", cfg.T},
         {"K", cfg.K},
         {"Ns", cfg.Ns},
         {"order", cfg.order},
         {"X0", io::to_json(cfg.X0)},
         {"U", io::to_json(cfg.U)},
         {"coarse_noise", std::string(reach::to_string(cfg.coarse_noise))},
         {"data_seed", cfg.data_seed},
         {"mc_seed", cfg.mc_seed},
         {"calibration_seed", cfg.calibration_seed},
         {"workers", cfg.workers},
         {"timing_reps", cfg.timing_reps},
         {"mc_samples", cfg.mc_samples},
         {"delta", cfg.delta},
         {"calibration_instances", cfg.calibration_instances},
         {"test_instances", cfg.test_instances},
         {"n_traj", cfg.n_traj},
         {"score_mode", std::string(conformal::to_string(cfg.score_mode))},
         {"predictor_command", cfg.predictor_command},
         {"kappa", cfg.kappa},
         {"calibration_file", cfg.calibration_file},
         {"sweep_K", cfg.sweep_K},
         {"sweep_Ns", cfg.sweep_Ns},
         {"training_samples", cfg.training_samples},
         {"holdout_fraction", cfg.holdout_fraction},
         {"out", cfg.out}};
  if (cfg.system == "custom") {
    j["A_c"] = rows_to_json(cfg.A_c);
    j["B_c"] = rows_to_json(cfg.B_c);
  }
  return j;
}

ExperimentConfig with_substeps(const ExperimentConfig& cfg, int Ns) {
  ExperimentConfig out = cfg;
  out.Ns = Ns;
  out.dt_coarse = Ns * cfg.dt_fine;
  return out;
}

Setup build_setup(const ExperimentConfig& cfg) {
  validate(cfg);
  Setup s;
  s.cfg = cfg;
  const auto sys = continuous_system(cfg);
  s.fine = sysdata::discretize(sys, cfg.dt_fine);
  s.coarse = sysdata::discretize(sys, cfg.dt_coarse);
  s.Zw_f = s.fine.noise;
  s.fine_data = sysdata::collect_data(s.fine, cfg.T, cfg.X0.center(), {cfg.U, cfg.Ns}, cfg.data_seed);
  s.coarse_data = sysdata::subsample_coarse(s.fine_data, cfg.Ns);

  s.fine_model = ddmodel::build_model_set(s.fine_data, s.Zw_f, ddmodel::Resolution::kFine, cfg.dt_fine);
  s.fine_model.provenance.seed = cfg.data_seed;
  const auto est = ddmodel::estimate_coarse_noise(ddmodel::extract_A_block(s.fine_model), s.Zw_f, cfg.Ns, cfg.order);
  s.noise_mults = est.multiplications;
  s.Zw_c_exact = sysdata::exact_coarse_noise(s.fine.A, s.Zw_f, cfg.Ns);
  s.Zw_c = cfg.coarse_noise == reach::CoarseNoiseMode::kEstimated ? est.noise : s.Zw_c_exact;
  s.coarse_model = ddmodel::build_model_set(s.coarse_data, s.Zw_c, ddmodel::Resolution::kCoarse, cfg.dt_coarse);
  s.coarse_model.provenance.seed = cfg.data_seed;
  return s;
}

double median_ms(const std::function<void()>& fn, int reps) {
  if (reps < 1) throw InvalidArgument("median_ms: reps must be positive");
  fn();
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  return times.size() % 2 == 1 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
}

double chain_width(const reach::ReachChain& chain) {
  std::vector<Zonotope> sets;
  for (std::size_t i = 1; i < chain.size(); ++i) sets.push_back(chain.set(i));
  return reach::mean_hull_width(sets);
}

SweepRow sweep_cell(const Setup& s, int K, int workers, int reps) {
  const auto cfg = s.cfg.chain(K);
  const auto& fm = s.fine_model.mz;
  const auto& cm = s.coarse_model.mz;
  SweepRow row;
  row.K = K;
  row.Ns = cfg.Ns;

  reach::ReachChain dd;
  row.t_dd_ms = median_ms([&] { dd = reach::run_fine_chain(cfg, fm, s.cfg.X0, s.Zw_f); }, reps);
  reach::IraResult seq;
  row.t_ira_seq_ms = median_ms([&] { seq = reach::run_ira(cfg, cm, fm, s.cfg.X0, s.Zw_c, s.Zw_f); }, reps);
  reach::IraOptions par_opt;
  par_opt.workers = workers;
  row.t_ira_par_ms = median_ms([&] { reach::run_ira(cfg, cm, fm, s.cfg.X0, s.Zw_c, s.Zw_f, par_opt); }, reps);
  row.speedup_seq = row.t_dd_ms / row.t_ira_seq_ms;
  row.speedup_par = row.t_dd_ms / row.t_ira_par_ms;
  row.depth_speedup = reach::depth_model(K, cfg.Ns).speedup;

  const auto ira = seq.merged(cfg);
  const auto mb = reach::run_model_based(s.fine.A, s.fine.B, s.cfg.X0, s.cfg.U, s.Zw_f, K * cfg.Ns, cfg.dt_fine, cfg.Ns,
                                         cfg.order);
  const double w_dd = chain_width(dd);
  const double w_ira = chain_width(ira);
  const double w_mb = chain_width(mb);
  row.ira_dd = w_ira / w_dd;
  row.dd_mb = w_dd / w_mb;
  row.ira_mb = w_ira / w_mb;
  const int n_dirs = std::max<int>(128, 2 * static_cast<int>(s.cfg.X0.dim()));
  for (std::size_t i = 0; i < dd.size(); ++i) {
    row.hausdorff = std::max(row.hausdorff, setcalc::hausdorff_estimate(ira.set(i), dd.set(i), n_dirs));
  }
  row.mults_fine = dd.mult_count;
  row.mults_phase1 = seq.phase1_mults;
  row.mults_phase2 = seq.phase2_mults;

  const auto dirs = setcalc::direction_set(s.cfg.X0.dim(), 64);
  for (int k = 0; k < K; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    if (!reach::check_tightness_premise(seq.anchors.set(ks), dd.set(ks * static_cast<std::size_t>(cfg.Ns)))) continue;
    ++row.premise_intervals;
    bool ok = true;
    for (int j = 1; j < cfg.Ns; ++j) {
      const auto& interp = seq.interpolants[ks][static_cast<std::size_t>(j - 1)];
      const auto& fine = dd.set(ks * static_cast<std::size_t>(cfg.Ns) + static_cast<std::size_t>(j));
      for (const auto& d : dirs) {
        ok = ok && setcalc::support_function(interp, d) <= setcalc::support_function(fine, d) + 1e-9;
      }
    }
    row.premise_dominated += ok ? 1 : 0;
  }
  return row;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "K,Ns,t_dd_ms,t_ira_seq_ms,t_ira_par_ms,speedup_seq,speedup_par,depth_speedup,ira_dd,dd_mb,ira_mb,"
        "hausdorff,mults_fine,mults_phase1,mults_phase2,premise_intervals,premise_dominated\n";
  for (const auto& r : rows) {
    os << r.K << ',' << r.Ns << ',' << r.t_dd_ms << ',' << r.t_ira_seq_ms << ',' << r.t_ira_par_ms << ','
       << r.speedup_seq << ',' << r.speedup_par << ',' << r.depth_speedup << ',' << r.ira_dd << ',' << r.dd_mb << ','
       << r.ira_mb << ',' << r.hausdorff << ',' << r.mults_fine << ',' << r.mults_phase1 << ',' << r.mults_phase2
       << ',' << r.premise_intervals << ',' << r.premise_dominated << '\n';
  }
  return os.str();
}

AblationResult run_ablation(const Setup& s, const conformal::PredictorInterface* predictor,
                            std::optional<double> q_hat, int workers, int reps) {
  const auto cfg = s.cfg.chain();
  const auto& fm = s.fine_model.mz;
  const auto& cm = s.coarse_model.mz;
  AblationResult res;

  reach::ReachChain dd;
  const double t_dd = median_ms([&] { dd = reach::run_fine_chain(cfg, fm, s.cfg.X0, s.Zw_f); }, reps);
  const double w_dd = chain_width(dd);

  auto run_row = [&](const std::string& name, const reach::IraOptions& opt, const std::string& guarantee) {
    reach::IraResult r;
    const double t = median_ms([&] { r = reach::run_ira(cfg, cm, fm, s.cfg.X0, s.Zw_c, s.Zw_f, opt); }, reps);
    res.rows.push_back({name, t, t_dd / t, chain_width(r.merged(cfg)) / w_dd, guarantee});
    return r.merged(cfg);
  };

  const auto seq = run_row("IRA-seq", reach::IraOptions{}, "det.");
  reach::IraOptions par;
  par.workers = workers;
  const auto parc = run_row("IRA-par", par, "det.");
  res.seq_par_identical = seq.size() == parc.size();
  for (std::size_t i = 0; res.seq_par_identical && i < seq.size(); ++i) {
    res.seq_par_identical = seq.set(i) == parc.set(i);
  }

  if (predictor != nullptr) {
    reach::IraOptions ta;
    ta.workers = workers;
    ta.predictor = predictor;
    ta.q_hat = 0.0;
    run_row("TA-IRA (no q_hat)", ta, "none");
    if (q_hat.has_value()) {
      ta.q_hat = *q_hat;
      std::ostringstream g;
      g << "prob. " << 1.0 - s.cfg.delta;
      run_row("TA-IRA + conformal", ta, g.str());
    }
  }
  res.rows.push_back({"fine DD", t_dd, 1.0, 1.0, "det."});
  return res;
}

std::string ablation_csv(const AblationResult& res) {
  std::ostringstream os;
  os << "method,runtime_ms,speedup,width_ratio,guarantee\n";
  for (const auto& r : res.rows) {
    os << r.method << ',' << r.runtime_ms << ',' << r.speedup << ',' << r.width_ratio << ',' << r.guarantee << '\n';
  }
  return os.str();
}

conformal::InstanceContext instance_context(const Setup& s) {
  return conformal::InstanceContext{s.fine, s.fine_model.mz, s.coarse_model.mz, s.Zw_f, s.Zw_c, s.cfg.chain()};
}

CalibrationOutcome run_calibration(const Setup& s, const conformal::PredictorInterface& predictor) {
  const auto ctx = instance_context(s);
  conformal::InstanceOptions opt;
  opt.n_traj = s.cfg.n_traj;
  const auto cal = conformal::generate_instances(ctx, s.cfg.X0, s.cfg.calibration_instances, s.cfg.calibration_seed, opt);
  const auto test =
      conformal::generate_instances(ctx, s.cfg.X0, s.cfg.test_instances, s.cfg.calibration_seed + 1000003, opt);
  CalibrationOutcome out;
  out.record = conformal::calibrate(predictor, cal, ctx.cfg, s.cfg.delta, s.cfg.score_mode);
  out.teacher_forced =
      conformal::evaluate_coverage(predictor, test, ctx.cfg, out.record.q_hat, conformal::PromptMode::kTeacherForced);
  out.anchored =
      conformal::evaluate_coverage(predictor, test, ctx.cfg, out.record.q_hat, conformal::PromptMode::kAnchored);
  out.transfer_gap = out.teacher_forced.pointwise.rate() - out.anchored.pointwise.rate();
  return out;
}

double mb_invariance_error(const Setup& s, int K) {
  const int Ns = s.cfg.Ns;
  const auto coarse = reach::run_model_based(s.coarse.A, s.coarse.B, s.cfg.X0, s.cfg.U, s.Zw_c_exact, K,
                                             s.cfg.dt_coarse, 1, reach::kNoReduction);
  const auto fine = reach::run_model_based(s.fine.A, s.fine.B, s.cfg.X0, s.cfg.U, s.Zw_f, K * Ns, s.cfg.dt_fine, Ns,
                                           reach::kNoReduction);
  double worst = 0.0;
  for (int k = 0; k <= K; ++k) {
    for (const auto& d : setcalc::direction_set(s.cfg.X0.dim(), 64)) {
      worst = std::max(worst, std::abs(setcalc::support_function(coarse.set(static_cast<std::size_t>(k)), d) -
                                       setcalc::support_function(fine.set(static_cast<std::size_t>(k * Ns)), d)));
    }
  }
  return worst;
}

int export_training(const Setup& s, const std::filesystem::path& dir) {
  const auto cfg = s.cfg.chain();
  const int per_chain = cfg.K * (cfg.Ns - 1);
  const int chains = (s.cfg.training_samples + per_chain - 1) / per_chain;
  const int holdout = std::max(1, static_cast<int>(std::lround(s.cfg.holdout_fraction * chains)));
  const int kappa = s.cfg.effective_kappa();
  const double t_total = cfg.K * cfg.Ns * cfg.dt_fine;
  std::filesystem::create_directories(dir);
  std::ofstream pairs(dir / "pairs.jsonl");
  std::ofstream calib(dir / "calibration.jsonl");
  if (!pairs || !calib) throw std::runtime_error("cannot write training files under " + dir.string());

  std::mt19937_64 rng(s.cfg.calibration_seed + 2000003);
  int written = 0;
  for (int c = 0; c < chains; ++c) {
    const bool held_out = c >= chains - holdout;
    const Zonotope X0 = conformal::augment_initial_set(s.cfg.X0, {}, rng);
    const std::uint64_t traj_seed = rng();
    const auto chain = reach::run_fine_chain(cfg, s.fine_model.mz, X0, s.Zw_f);
    for (int k = 0; k < cfg.K; ++k) {
      const auto end_idx = static_cast<std::size_t>((k + 1) * cfg.Ns);
      const auto endpoint = tokens::tokenize(chain.set(end_idx), chain.steps[end_idx].t, t_total, kappa);
      for (int j = 1; j < cfg.Ns; ++j) {
        const auto cur_idx = static_cast<std::size_t>(k * cfg.Ns + j - 1);
        json rec{{"chain", c},
                 {"split", held_out ? "calibration" : "train"},
                 {"k", k},
                 {"j", j},
                 {"Ns", cfg.Ns},
                 {"kappa", kappa},
                 {"n", X0.dim()},
                 {"current", tokens::to_json(tokens::tokenize(chain.set(cur_idx), chain.steps[cur_idx].t, t_total, kappa))},
                 {"endpoint", tokens::to_json(endpoint)},
                 {"target", tokens::to_json(tokens::tokenize(chain.set(cur_idx + 1), chain.steps[cur_idx + 1].t,
                                                             t_total, kappa))}};
        pairs << rec.dump() << '\n';
        ++written;
      }
    }
    if (held_out) {
      const auto trajs =
          sysdata::monte_carlo(s.fine, X0, s.cfg.U, cfg.K * cfg.Ns, cfg.Ns, s.cfg.n_traj, traj_seed);
      json states = json::array();
      for (const auto& traj : trajs) {
        json one = json::array();
        for (const auto& x : traj) one.push_back(io::vector_to_json(x));
        states.push_back(std::move(one));
      }
      calib << json{{"chain", c}, {"X0", io::to_json(X0)}, {"N_traj", s.cfg.n_traj}, {"states", states}}.dump()
            << '\n';
    }
  }
  return written;
}

}  // namespace ira::cli
