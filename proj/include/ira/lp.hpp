#pragma once

// Dense bounded-variable simplex for the feasibility problems behind the
// membership oracles: does some a in [-r, r]^gamma satisfy G a = b?

#include <Eigen/Dense>

namespace ira::lp {

struct BoxFeasibility {
  bool feasible = false;
  // Phase-1 objective after row normalization (sum of artificial residuals).
  double residual = 0.0;
  // Witness coefficients; meaningful when feasible.
  Eigen::VectorXd coefficients;
  int iterations = 0;
};

/**
 * Decides whether G a = b has a solution with |a_i| <= radius.
 *
 * Rows are scaled by their largest coefficient before solving; an all-zero row
 * requires |b_i| <= residual_tol. Feasible when the phase-1 objective (in the
 * scaled rows) is at most residual_tol.
 */
BoxFeasibility solve_box_feasibility(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                                     double radius, double residual_tol);

}  // namespace ira::lp
