#pragma once

// Fixed-size token grid for zonotopes exchanged with a learned predictor:
// kappa+1 rows [c; g_1; ...; g_kappa], each row augmented with the time fraction tau.

#include <json.hpp>

#include "ira/setcalc.hpp"

namespace ira::tokens {

using setcalc::Matrix;
using setcalc::Zonotope;

struct TokenGrid {
  int kappa = 0;
  int n = 0;
  // (kappa+1) x (n+1); last column holds tau.
  Matrix rows;

  double tau() const { return rows(0, n); }
};

/**
 * Reduces z to at most kappa generators (order kappa/n, which must be integral when
 * reduction is needed), pads with zero generators and appends tau = t / t_total.
 */
TokenGrid tokenize(const Zonotope& z, double t, double t_total, int kappa);

/// Inverse of tokenize; trailing all-zero generator rows (padding) are dropped.
Zonotope detokenize(const TokenGrid& grid);

nlohmann::json to_json(const TokenGrid& grid);

/// Throws InvalidArgument unless the array has kappa+1 rows of n+1 finite numbers.
TokenGrid grid_from_json(const nlohmann::json& j, int kappa, int n);

}  // namespace ira::tokens
