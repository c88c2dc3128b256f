#include "ira/io.hpp"

#include <fstream>
#include <sstream>

#include "ira/error.hpp"

namespace ira::io {

namespace {

std::string number(double v) {
  // Same shortest round-trip form the JSON documents use.
  return json(v).dump();
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidArgument(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw InvalidArgument("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidArgument("expected a numeric array");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(vector_to_json(m.col(c)));
  return out;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows) {
  if (!j.is_array()) throw InvalidArgument("expected an array of columns");
  Matrix m(rows, static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    const Vector col = vector_from_json(j[c]);
    if (col.size() != rows) throw InvalidArgument("matrix column has the wrong length");
    m.col(static_cast<Eigen::Index>(c)) = col;
  }
  return m;
}

json to_json(const Zonotope& z) {
  return {{"dim", z.dim()}, {"center", vector_to_json(z.center())}, {"generators", matrix_to_json(z.generators())}};
}

Zonotope zonotope_from_json(const json& j) {
  const auto dim = field(j, "dim").get<Eigen::Index>();
  Vector c = vector_from_json(field(j, "center"));
  if (c.size() != dim) throw InvalidArgument("zonotope center does not match dim");
  return Zonotope(std::move(c), matrix_from_json(field(j, "generators"), dim));
}

json to_json(const MatrixZonotope& m) {
  json gens = json::array();
  for (Eigen::Index i = 0; i < m.num_generators(); ++i) gens.push_back(matrix_to_json(m.generator(i)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"center", matrix_to_json(m.center())}, {"generators", gens}};
}

MatrixZonotope matrix_zonotope_from_json(const json& j) {
  const auto rows = field(j, "rows").get<Eigen::Index>();
  const auto cols = field(j, "cols").get<Eigen::Index>();
  Matrix center = matrix_from_json(field(j, "center"), rows);
  if (center.cols() != cols) throw InvalidArgument("matrix zonotope center does not match cols");
  std::vector<Matrix> gens;
  for (const auto& g : field(j, "generators")) gens.push_back(matrix_from_json(g, rows));
  return MatrixZonotope(std::move(center), gens);
}

json to_json(const ddmodel::ModelSet& ms) {
  const auto& p = ms.provenance;
  return {{"source", std::string(ddmodel::to_string(ms.source))},
          {"step", ms.step},
          {"provenance",
           {{"samples", p.samples}, {"step", p.step}, {"seed", p.seed}, {"rank_ok", p.rank_ok},
            {"gram_condition", p.gram_condition}}},
          {"mz", to_json(ms.mz)}};
}

ddmodel::ModelSet model_set_from_json(const json& j) {
  ddmodel::ModelSet ms;
  const auto src = field(j, "source").get<std::string>();
  if (src != "fine" && src != "coarse") throw InvalidArgument("model set source must be fine or coarse");
  ms.source = src == "fine" ? ddmodel::Resolution::kFine : ddmodel::Resolution::kCoarse;
  ms.step = field(j, "step").get<double>();
  const auto& p = field(j, "provenance");
  ms.provenance.samples = field(p, "samples").get<Eigen::Index>();
  ms.provenance.step = field(p, "step").get<double>();
  ms.provenance.seed = field(p, "seed").get<std::uint64_t>();
  ms.provenance.rank_ok = field(p, "rank_ok").get<bool>();
  ms.provenance.gram_condition = field(p, "gram_condition").get<double>();
  ms.mz = matrix_zonotope_from_json(field(j, "mz"));
  return ms;
}

json to_json(const sysdata::DataMatrices& d, std::uint64_t seed) {
  json out{{"seed", seed},
           {"samples", d.samples()},
           {"n", d.X_minus.rows()},
           {"m", d.U_minus.rows()},
           {"X_minus", matrix_to_json(d.X_minus)},
           {"X_plus", matrix_to_json(d.X_plus)},
           {"U_minus", matrix_to_json(d.U_minus)}};
  if (d.W_minus.size() > 0) out["W_minus"] = matrix_to_json(d.W_minus);
  return out;
}

sysdata::DataMatrices data_from_json(const json& j) {
  const auto n = field(j, "n").get<Eigen::Index>();
  const auto m = field(j, "m").get<Eigen::Index>();
  sysdata::DataMatrices d;
  d.X_minus = matrix_from_json(field(j, "X_minus"), n);
  d.X_plus = matrix_from_json(field(j, "X_plus"), n);
  d.U_minus = matrix_from_json(field(j, "U_minus"), m);
  if (j.contains("W_minus")) d.W_minus = matrix_from_json(j.at("W_minus"), n);
  if (d.X_plus.cols() != d.X_minus.cols() || d.U_minus.cols() != d.X_minus.cols()) {
    throw InvalidArgument("data matrices have different column counts");
  }
  return d;
}

json chain_to_json(const reach::ReachChain& chain) {
  json records = json::array();
  for (const auto& s : chain.steps) {
    const auto hull = setcalc::interval_hull(s.set);
    records.push_back({{"t", s.t},
                       {"kind", std::string(reach::to_string(s.kind))},
                       {"center", vector_to_json(s.set.center())},
                       {"generators", matrix_to_json(s.set.generators())},
                       {"hull_lower", vector_to_json(hull.lower)},
                       {"hull_upper", vector_to_json(hull.upper)}});
  }
  return {{"mult_count", chain.mult_count}, {"steps", records}};
}

std::string chain_to_csv(const reach::ReachChain& chain) {
  std::ostringstream os;
  os << "t,dim,lower,upper\n";
  for (const auto& s : chain.steps) {
    const auto hull = setcalc::interval_hull(s.set);
    for (Eigen::Index d = 0; d < hull.lower.size(); ++d) {
      os << number(s.t) << ',' << d << ',' << number(hull.lower(d)) << ',' << number(hull.upper(d)) << '\n';
    }
  }
  return os.str();
}

json to_json(const conformal::CalibrationRecord& rec) {
  return {{"scores", rec.scores},
          {"delta", rec.delta},
          {"q_hat", rec.q_hat},
          {"mode", std::string(conformal::to_string(rec.mode))},
          {"N_cal", rec.n_cal()},
          {"N_instances", rec.n_instances},
          {"N_traj", rec.n_traj},
          {"degenerate", rec.degenerate},
          {"predictor", rec.predictor}};
}

conformal::CalibrationRecord calibration_from_json(const json& j) {
  conformal::CalibrationRecord rec;
  rec.scores = field(j, "scores").get<std::vector<double>>();
  rec.delta = field(j, "delta").get<double>();
  rec.q_hat = field(j, "q_hat").get<double>();
  rec.mode = conformal::score_mode_from_string(field(j, "mode").get<std::string>());
  rec.n_instances = j.value("N_instances", 0);
  rec.n_traj = j.value("N_traj", 0);
  rec.degenerate = j.value("degenerate", false);
  rec.predictor = j.value("predictor", std::string());
  if (!(rec.q_hat >= 0.0)) throw InvalidArgument("calibration record has a negative q_hat");
  return rec;
}

std::string coverage_to_csv(const conformal::CoverageReport& rep) {
  std::ostringstream os;
  os << "substep,coverage,ci_low,ci_high\n";
  auto row = [&](const std::string& label, const conformal::Proportion& p) {
    const auto ci = conformal::wilson_interval(p);
    os << label << ',' << number(p.rate()) << ',' << number(ci.low) << ',' << number(ci.high) << '\n';
  };
  for (std::size_t j = 0; j < rep.per_substep.size(); ++j) row(std::to_string(j + 1), rep.per_substep[j]);
  row("all", rep.pointwise);
  row("path", rep.path);
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return json::parse(f);
}

}  // namespace ira::io
