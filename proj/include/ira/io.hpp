#pragma once

// JSON documents and CSV tables for sets, model sets, data, chains and
// calibration results. Doubles are written in shortest round-trip form, so a
// dump followed by a parse reproduces every finite value bit for bit.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ira/conformal.hpp"
#include "ira/ddmodel.hpp"
#include "ira/reach.hpp"
#include "ira/sysdata.hpp"

namespace ira::io {

using json = nlohmann::json;
using setcalc::Matrix;
using setcalc::MatrixZonotope;
using setcalc::Vector;
using setcalc::Zonotope;

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

// Matrices are arrays of columns.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, Eigen::Index rows);

// {dim, center, generators}; generators is the list of generator columns.
json to_json(const Zonotope& z);
Zonotope zonotope_from_json(const json& j);

// {rows, cols, center, generators}; each matrix as an array of columns.
json to_json(const MatrixZonotope& m);
MatrixZonotope matrix_zonotope_from_json(const json& j);

json to_json(const ddmodel::ModelSet& ms);
ddmodel::ModelSet model_set_from_json(const json& j);

json to_json(const sysdata::DataMatrices& d, std::uint64_t seed);
sysdata::DataMatrices data_from_json(const json& j);

// Records {t, kind, center, generators, hull_lower, hull_upper}. Timings are left out so exports are reproducible.
json chain_to_json(const reach::ReachChain& chain);
// Columns t,dim,lower,upper.
std::string chain_to_csv(const reach::ReachChain& chain);

json to_json(const conformal::CalibrationRecord& rec);
conformal::CalibrationRecord calibration_from_json(const json& j);

// Columns substep,coverage,ci_low,ci_high; extra rows "all" and "path".
std::string coverage_to_csv(const conformal::CoverageReport& rep);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace ira::io
