#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <json.hpp>
#include <sstream>

#include "ira/commands.hpp"
#include "ira/error.hpp"
#include "ira/experiment.hpp"
#include "ira/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ira::cli;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ira_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Small settings so every command finishes in about a second.
json small_config() {
  return {{"timing_reps", 1},          {"calibration_instances", 30}, {"test_instances", 30},
          {"n_traj", 5},               {"training_samples", 40},      {"sweep_K", {2, 3}},
          {"workers", 2}};
}

fs::path write_config(const fs::path& dir, const json& j) {
  const auto p = dir / "config.json";
  ira::io::write_json(p, j);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd, CommandOptions opt, std::string* log_out = nullptr) {
  std::ostringstream log;
  const int code = run_command(cmd, opt, log);
  if (log_out) *log_out = log.str();
  return code;
}

CommandOptions options(const fs::path& config, const fs::path& out) {
  CommandOptions o;
  o.config = config;
  o.out = out.string();
  return o;
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("configs with inconsistent step sizes are rejected at parse time") {
  CHECK_THROWS_AS(parse_config(json{{"dt_coarse", 0.2}}), ira::ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"Ns", 4}, {"dt_coarse", 0.15}}), ira::ConfigError);
  CHECK_NOTHROW(parse_config(json{{"Ns", 4}}));
  CHECK_NOTHROW(parse_config(json{{"Ns", 3}, {"dt_fine", 0.05}, {"dt_coarse", 0.15}}));
  CHECK(parse_config(json{{"Ns", 4}}).dt_coarse == doctest::Approx(0.2));

  const auto dir = scratch("delta");
  const auto cfg = write_config(dir, {{"dt_coarse", 0.2}});
  std::string log;
  CHECK(run("reach", options(cfg, dir / "out"), &log) == kExitConfig);
  CHECK(log.find("dt_coarse") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "chain.json"));
}

TEST_CASE("malformed or unknown configuration is a config error") {
  CHECK_THROWS_AS(parse_config(json{{"no_such_field", 1}}), ira::ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"K", "two"}}), ira::ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"delta", 1.5}}), ira::ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"system", "custom"}}), ira::ConfigError);
  CHECK_THROWS_AS(parse_config(json::array()), ira::ConfigError);

  const auto dir = scratch("malformed");
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(run("reach", options(dir / "broken.json", dir / "out")) == kExitConfig);
  CHECK(run("reach", options(dir / "missing.json", dir / "out")) == kExitConfig);
  CommandOptions o = options(write_config(dir, json::object()), dir / "out");
  o.method = "rk4";
  CHECK(run("reach", o) == kExitConfig);
  CHECK(run("no-such-command", o) == kExitConfig);
}

TEST_CASE("configuration round-trips through json") {
  ExperimentConfig cfg;
  cfg.K = 3;
  cfg.Ns = 4;
  cfg.dt_coarse = 0.2;
  cfg.coarse_noise = ira::reach::CoarseNoiseMode::kExactOracle;
  cfg.score_mode = ira::conformal::ScoreMode::kPathwise;
  cfg.predictor_command = {"python3", "-m", "surrogate"};
  const auto back = parse_config(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));

  ExperimentConfig custom;
  custom.system = "custom";
  custom.A_c = ira::setcalc::Matrix::Identity(2, 2) * -1.0;
  custom.B_c = ira::setcalc::Matrix::Ones(2, 1);
  custom.X0 = ira::setcalc::Zonotope(ira::setcalc::Vector::Ones(2), 0.1 * ira::setcalc::Matrix::Identity(2, 2));
  CHECK(to_json(parse_config(to_json(custom))) == to_json(custom));
}

TEST_CASE("reach exports have the expected structure for every method") {
  const auto dir = scratch("reach");
  const auto cfg = write_config(dir, small_config());
  std::map<std::string, std::vector<std::string>> kinds;
  for (const std::string method : {"dd", "ira", "mb"}) {
    CommandOptions o = options(cfg, dir / method);
    o.method = method;
    REQUIRE(run("reach", o) == kExitOk);
    for (const auto* f : {"chain.json", "chain.csv", "timing.csv", "summary.json", "manifest.json"}) {
      CHECK(fs::exists(dir / method / f));
    }
    const auto chain = ira::io::read_json(dir / method / "chain.json");
    REQUIRE(chain["steps"].size() == 7);
    CHECK(chain["steps"][6]["t"].get<double>() == doctest::Approx(0.30));
    for (const auto& st : chain["steps"]) kinds[method].push_back(st["kind"].get<std::string>());
  }
  CHECK(std::count(kinds["ira"].begin(), kinds["ira"].end(), "anchor") == 3);  // X0 plus two anchors
  CHECK(std::count(kinds["ira"].begin(), kinds["ira"].end(), "interpolated") == 4);
  CHECK(std::count(kinds["dd"].begin(), kinds["dd"].end(), "fine") == 7);

  const auto summary = ira::io::read_json(dir / "ira" / "summary.json");
  CHECK(summary["phase1_mults"] == 2);
  CHECK(summary["phase2_mults"] == 4);
  CHECK(ira::io::read_json(dir / "dd" / "summary.json")["mult_count"] == 6);

  const auto manifest = ira::io::read_json(dir / "ira" / "manifest.json");
  CHECK(manifest["command"] == "reach");
  CHECK(manifest["method"] == "ira");
  CHECK(manifest["config"]["data_seed"] == 1);
  CHECK(manifest["decisions"].size() > 0);
  CHECK(manifest["versions"].contains("eigen"));
}

TEST_CASE("a run manifest alone reproduces the chain exports") {
  const auto dir = scratch("manifest");
  const auto cfg = write_config(dir, small_config());
  for (const std::string method : {"dd", "ira", "mb"}) {
    CommandOptions first = options(cfg, dir / (method + "_a"));
    first.method = method;
    first.seed = 17;
    first.workers = 1;
    REQUIRE(run("reach", first) == kExitOk);

    CommandOptions again;
    again.config = dir / (method + "_a") / "manifest.json";
    again.out = (dir / (method + "_b")).string();
    REQUIRE(run("reach", again) == kExitOk);
    CHECK(slurp(dir / (method + "_a") / "chain.json") == slurp(dir / (method + "_b") / "chain.json"));
    CHECK(slurp(dir / (method + "_a") / "chain.csv") == slurp(dir / (method + "_b") / "chain.csv"));
    CHECK(ira::io::read_json(dir / (method + "_b") / "manifest.json")["config"]["data_seed"] == 17);
  }
  // A different seed changes the data and therefore the data-driven chain.
  CommandOptions other = options(cfg, dir / "dd_c");
  other.method = "dd";
  other.seed = 18;
  REQUIRE(run("reach", other) == kExitOk);
  CHECK(slurp(dir / "dd_a" / "chain.json") != slurp(dir / "dd_c" / "chain.json"));
}

TEST_CASE("rank-deficient data aborts naming the resolution") {
  const auto dir = scratch("rank");
  json cfg = small_config();
  cfg["system"] = "custom";
  cfg["A_c"] = {{-1.0, 0.0}, {0.0, -1.0}};  // both states decay identically from (1, 1)
  cfg["B_c"] = {{0.0}, {0.0}};
  cfg["sigma_w"] = 0.0;
  std::string log;
  CHECK(run("reach", options(write_config(dir, cfg), dir / "out"), &log) == kExitRank);
  CHECK(log.find("fine") != std::string::npos);
  CHECK_THROWS_AS(build_setup(parse_config(cfg)), ira::RankError);
}

TEST_CASE("ta-ira runs through an external predictor process") {
  const auto dir = scratch("ta");
  json cfg = small_config();
  cfg["predictor_command"] = {FAKE_PREDICTOR_PATH, "--kappa", "20"};
  const auto cfg_path = write_config(dir, cfg);

  REQUIRE(run("calibrate", options(cfg_path, dir / "cal")) == kExitOk);
  const auto record = ira::io::calibration_from_json(ira::io::read_json(dir / "cal" / "calibration.json"));
  CHECK(record.q_hat >= 0.0);
  CHECK(record.predictor.rfind("command:", 0) == 0);

  CommandOptions o = options(cfg_path, dir / "ta");
  o.method = "ta-ira";
  o.calibration = (dir / "cal" / "calibration.json").string();
  REQUIRE(run("reach", o) == kExitOk);
  const auto summary = ira::io::read_json(dir / "ta" / "summary.json");
  CHECK(summary["predictor_calls"] == 4);
  CHECK(summary["phase2_mults"] == 0);
  CHECK(summary["q_hat"].get<double>() == record.q_hat);

  // The manifest records the calibration file, so it reproduces the run.
  CommandOptions again;
  again.config = dir / "ta" / "manifest.json";
  again.out = (dir / "ta2").string();
  REQUIRE(run("reach", again) == kExitOk);
  CHECK(slurp(dir / "ta" / "chain.json") == slurp(dir / "ta2" / "chain.json"));

  CommandOptions ab = options(cfg_path, dir / "ab");
  ab.calibration = o.calibration;
  REQUIRE(run("ablation", ab) == kExitOk);
  const auto csv = slurp(dir / "ab" / "ablation.csv");
  CHECK(csv.find("TA-IRA (no q_hat)") != std::string::npos);
  CHECK(csv.find("TA-IRA + conformal") != std::string::npos);
}

TEST_CASE("ta-ira preconditions map to exit codes") {
  const auto dir = scratch("ta_errors");
  const auto plain = write_config(dir, small_config());
  const auto cal_dir = dir / "cal";
  REQUIRE(run("calibrate", options(plain, cal_dir)) == kExitOk);
  const auto cal = (cal_dir / "calibration.json").string();

  CommandOptions no_predictor = options(plain, dir / "a");
  no_predictor.method = "ta-ira";
  no_predictor.calibration = cal;
  CHECK(run("reach", no_predictor) == kExitPredictor);

  json with_pred = small_config();
  with_pred["predictor_command"] = {FAKE_PREDICTOR_PATH};
  ira::io::write_json(dir / "pred.json", with_pred);
  CommandOptions no_cal = options(dir / "pred.json", dir / "b");
  no_cal.method = "ta-ira";
  CHECK(run("reach", no_cal) == kExitConfig);
  no_cal.calibration = (dir / "nope.json").string();
  CHECK(run("reach", no_cal) == kExitConfig);

  for (const auto& argv : {json{"/definitely/not/here"}, json{FAKE_PREDICTOR_PATH, "--fail-handshake"},
                           json{FAKE_PREDICTOR_PATH, "--always-error"}, json{FAKE_PREDICTOR_PATH, "--kappa", "7"}}) {
    json bad = small_config();
    bad["predictor_command"] = argv;
    ira::io::write_json(dir / "bad.json", bad);
    CommandOptions o = options(dir / "bad.json", dir / "c");
    o.method = "ta-ira";
    o.calibration = cal;
    CHECK(run("reach", o) == kExitPredictor);
  }
}

TEST_CASE("every command succeeds without a predictor") {
  const auto dir = scratch("degrade");
  const auto cfg = write_config(dir, small_config());
  for (const std::string cmd : {"reach", "sweep", "calibrate", "ablation", "sensitivity", "export-training"}) {
    std::string log;
    CHECK_MESSAGE(run(cmd, options(cfg, dir / cmd), &log) == kExitOk, cmd << ": " << log);
    CHECK(fs::exists(dir / cmd / "manifest.json"));
  }
  const auto sweep = slurp(dir / "sweep" / "sweep.csv");
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 3);
  const auto ablation = slurp(dir / "ablation" / "ablation.csv");
  CHECK(ablation.find("TA-IRA") == std::string::npos);
  CHECK(ira::io::read_json(dir / "ablation" / "summary.json")["seq_par_identical"] == true);
  CHECK(ira::io::read_json(dir / "sensitivity" / "sensitivity.json")["data_driven_differs"] == true);
  CHECK(ira::io::read_json(dir / "calibrate" / "summary.json")["predictor"] == "baseline-blend");

  // An unreachable predictor only drops the TA rows from the ablation.
  json bad = small_config();
  bad["predictor_command"] = {"/definitely/not/here"};
  ira::io::write_json(dir / "bad.json", bad);
  std::string log;
  CHECK(run("ablation", options(dir / "bad.json", dir / "ab_bad"), &log) == kExitOk);
  CHECK(log.find("skipping") != std::string::npos);
}

TEST_CASE("sweep honours explicit ranges and records them in the manifest") {
  const auto dir = scratch("sweep");
  CommandOptions o = options(write_config(dir, small_config()), dir / "out");
  o.k_range = {2};
  o.ns_range = {2, 3};
  REQUIRE(run("sweep", o) == kExitOk);
  const auto csv = slurp(dir / "out" / "sweep.csv");
  CHECK(csv.find("\n2,2,") != std::string::npos);
  CHECK(csv.find("\n2,3,") != std::string::npos);
  const auto manifest = ira::io::read_json(dir / "out" / "manifest.json");
  CHECK(manifest["ns_range"] == json({2, 3}));

  CommandOptions again;
  again.config = dir / "out" / "manifest.json";
  again.out = (dir / "again").string();
  REQUIRE(run("sweep", again) == kExitOk);
  const auto csv2 = slurp(dir / "again" / "sweep.csv");
  CHECK(std::count(csv2.begin(), csv2.end(), '\n') == 3);

  o.ns_range = {1};
  CHECK(run("sweep", o) == kExitConfig);
}

TEST_CASE("export-training writes tagged pairs and held-out trajectories") {
  const auto dir = scratch("export");
  REQUIRE(run("export-training", options(write_config(dir, small_config()), dir / "out")) == kExitOk);
  std::ifstream pairs(dir / "out" / "pairs.jsonl");
  std::string line;
  int n = 0;
  int held = 0;
  std::set<int> calib_chains;
  while (std::getline(pairs, line)) {
    const auto rec = json::parse(line);
    ++n;
    CHECK(rec["kappa"] == 20);
    CHECK(rec["current"].size() == 21);
    CHECK(rec["target"][0].size() == 6);
    CHECK(rec["j"].get<int>() >= 1);
    CHECK(rec["j"].get<int>() <= 2);
    if (rec["split"] == "calibration") {
      ++held;
      calib_chains.insert(rec["chain"].get<int>());
    }
  }
  CHECK(n == 40);  // ceil(40 / (K (Ns - 1))) = 10 chains of 4 pairs
  CHECK(held == 8);
  std::ifstream calib(dir / "out" / "calibration.jsonl");
  int chains = 0;
  while (std::getline(calib, line)) {
    const auto rec = json::parse(line);
    CHECK(calib_chains.contains(rec["chain"].get<int>()));
    CHECK(rec["states"].size() == 5);
    CHECK(rec["states"][0].size() == 7);
    ++chains;
  }
  CHECK(chains == 2);
}

TEST_CASE("the ira binary maps failures to exit codes") {
  const auto dir = scratch("binary");
  const std::string bin = IRA_CLI_PATH;
  ira::io::write_json(dir / "bad.json", {{"dt_coarse", 0.2}});
  ira::io::write_json(dir / "ok.json", small_config());
  CHECK(shell(bin + " --help") == 0);
  CHECK(shell(bin) == kExitConfig);
  CHECK(shell(bin + " reach --method rk4") == kExitConfig);
  CHECK(shell(bin + " reach --config " + (dir / "bad.json").string() + " --out " + (dir / "o1").string()) ==
        kExitConfig);
  CHECK(shell(bin + " reach --method ta-ira --config " + (dir / "ok.json").string() + " --out " +
              (dir / "o2").string()) == kExitPredictor);
  CHECK(shell(bin + " reach --method dd --workers 1 --seed 5 --config " + (dir / "ok.json").string() + " --out " +
              (dir / "o3").string()) == kExitOk);
  CHECK(ira::io::read_json(dir / "o3" / "manifest.json")["config"]["data_seed"] == 5);
}

TEST_CASE("median timing discards the warm-up run") {
  int calls = 0;
  std::vector<int> seen;
  median_ms([&] { seen.push_back(calls++); }, 4);
  CHECK(calls == 5);
  CHECK_THROWS_AS(median_ms([] {}, 0), ira::InvalidArgument);
  CHECK(median_ms([] {}, 3) >= 0.0);
}

TEST_CASE("chain width ignores the initial set") {
  using ira::setcalc::Matrix;
  using ira::setcalc::Vector;
  using ira::setcalc::Zonotope;
  ira::reach::ReachChain chain;
  chain.steps.push_back({0.0, ira::reach::SetKind::kFine, Zonotope(Vector::Zero(2), 100.0 * Matrix::Identity(2, 2)), 0.0});
  chain.steps.push_back({0.1, ira::reach::SetKind::kFine, Zonotope(Vector::Zero(2), Matrix::Identity(2, 2)), 0.0});
  chain.steps.push_back({0.2, ira::reach::SetKind::kFine, Zonotope(Vector::Zero(2), 2.0 * Matrix::Identity(2, 2)), 0.0});
  // Widths 2 and 4 per axis.
  CHECK(chain_width(chain) == doctest::Approx(3.0));
}

TEST_CASE("sweep cells count multiplications per the work model") {
  auto cfg = parse_config(json{{"timing_reps", 1}});
  for (int ns : {2, 3, 4}) {
    const auto s = build_setup(with_substeps(cfg, ns));
    for (int k : {1, 2, 3}) {
      const auto row = sweep_cell(s, k, 2, 1);
      CHECK(row.mults_fine == k * ns);
      CHECK(row.mults_phase1 == k);
      CHECK(row.mults_phase2 == k * (ns - 1));
      CHECK(row.premise_dominated == row.premise_intervals);
      CHECK(row.premise_intervals >= 1);  // interval 0 starts from X0 itself
      CHECK(row.dd_mb > 1.0);
      CHECK(row.depth_speedup == doctest::Approx(static_cast<double>(k * ns) / (k + ns - 1)));
    }
  }
}
