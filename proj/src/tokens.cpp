#include "ira/tokens.hpp"

#include <cmath>

#include "ira/error.hpp"

namespace ira::tokens {

TokenGrid tokenize(const Zonotope& z, double t, double t_total, int kappa) {
  const auto n = static_cast<int>(z.dim());
  if (kappa < 0 || n < 1) throw InvalidArgument("tokenize: invalid kappa or empty zonotope");
  if (!(t_total > 0.0)) throw InvalidArgument("tokenize: t_total must be positive");
  const double tau = t / t_total;
  if (!(tau >= 0.0 && tau <= 1.0 + 1e-12)) throw InvalidArgument("tokenize: time fraction outside [0, 1]");

  Zonotope reduced = z;
  if (z.num_generators() > kappa) {
    if (kappa % n != 0 || kappa < n) {
      throw InvalidArgument("tokenize: kappa mismatch, " + std::to_string(z.num_generators()) +
                            " generators cannot be reduced to " + std::to_string(kappa));
    }
    reduced = setcalc::reduce_order(z, kappa / n);
  }

  TokenGrid grid;
  grid.kappa = kappa;
  grid.n = n;
  grid.rows = Matrix::Zero(kappa + 1, n + 1);
  grid.rows.block(0, 0, 1, n) = reduced.center().transpose();
  const auto gamma = reduced.num_generators();
  grid.rows.block(1, 0, gamma, n) = reduced.generators().transpose();
  grid.rows.col(n).setConstant(std::min(tau, 1.0));
  return grid;
}

Zonotope detokenize(const TokenGrid& grid) {
  if (grid.rows.rows() != grid.kappa + 1 || grid.rows.cols() != grid.n + 1) {
    throw InvalidArgument("detokenize: grid shape does not match kappa and n");
  }
  Eigen::Index used = grid.kappa;
  while (used > 0 && grid.rows.row(used).head(grid.n).isZero(0.0)) --used;
  return Zonotope(grid.rows.row(0).head(grid.n).transpose(), grid.rows.block(1, 0, used, grid.n).transpose());
}

nlohmann::json to_json(const TokenGrid& grid) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < grid.rows.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < grid.rows.cols(); ++c) row.push_back(grid.rows(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

TokenGrid grid_from_json(const nlohmann::json& j, int kappa, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != kappa + 1) {
    throw InvalidArgument("token grid: expected " + std::to_string(kappa + 1) + " rows");
  }
  TokenGrid grid;
  grid.kappa = kappa;
  grid.n = n;
  grid.rows.resize(kappa + 1, n + 1);
  for (int r = 0; r <= kappa; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != n + 1) {
      throw InvalidArgument("token grid: expected rows of length " + std::to_string(n + 1));
    }
    for (int c = 0; c <= n; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number() || !std::isfinite(v.get<double>())) throw InvalidArgument("token grid: non-finite entry");
      grid.rows(r, c) = v.get<double>();
    }
  }
  return grid;
}

}  // namespace ira::tokens
