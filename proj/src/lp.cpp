#include "ira/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ira/error.hpp"

namespace ira::lp {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Status : unsigned char { kBasic, kLower, kUpper, kFixed };

constexpr double kCostTol = 1e-11;
constexpr double kPivotTol = 1e-11;
constexpr double kTieTol = 1e-13;
constexpr int kDegenerateBeforeBland = 50;

}  // namespace

BoxFeasibility solve_box_feasibility(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                                     double radius, double residual_tol) {
  if (G.rows() != b.size()) {
    throw InvalidArgument("solve_box_feasibility: row count of G does not match b");
  }
  if (!(radius >= 0.0)) {
    throw InvalidArgument("solve_box_feasibility: radius must be nonnegative");
  }
  const Eigen::Index n_vars = G.cols();
  BoxFeasibility out;
  out.coefficients = Eigen::VectorXd::Zero(n_vars);

  // beta = a + radius in [0, 2 radius]  =>  G beta = b + radius * G 1
  const Eigen::VectorXd shifted = b + radius * G.rowwise().sum();
  const double global_scale = G.size() > 0 ? G.cwiseAbs().maxCoeff() : 0.0;

  std::vector<Eigen::Index> rows;
  std::vector<double> row_scale;
  double zero_row_violation = 0.0;
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    const double s = G.cols() > 0 ? G.row(i).cwiseAbs().maxCoeff() : 0.0;
    if (s <= 1e-14 * global_scale || s == 0.0) {
      zero_row_violation += std::abs(b(i));
      continue;
    }
    rows.push_back(i);
    row_scale.push_back(s);
  }
  if (zero_row_violation > residual_tol) {
    out.residual = zero_row_violation;
    return out;
  }

  const auto m = static_cast<Eigen::Index>(rows.size());
  if (m == 0) {
    out.feasible = true;
    out.residual = zero_row_violation;
    return out;
  }

  const Eigen::Index n_total = n_vars + m;
  RowMatrix T = RowMatrix::Zero(m, n_total);
  Eigen::VectorXd xb(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    const double s = row_scale[static_cast<std::size_t>(r)];
    const double sign = shifted(i) < 0.0 ? -1.0 : 1.0;
    T.row(r).head(n_vars) = (sign / s) * G.row(i);
    T(r, n_vars + r) = 1.0;
    xb(r) = sign * shifted(i) / s;
  }

  const double inf = std::numeric_limits<double>::infinity();
  const double ub_struct = 2.0 * radius;
  std::vector<double> upper(static_cast<std::size_t>(n_total), inf);
  std::vector<Status> status(static_cast<std::size_t>(n_total), Status::kLower);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < n_vars; ++j) {
    upper[static_cast<std::size_t>(j)] = ub_struct;
    if (ub_struct == 0.0) status[static_cast<std::size_t>(j)] = Status::kFixed;
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    basis[static_cast<std::size_t>(r)] = n_vars + r;
    status[static_cast<std::size_t>(n_vars + r)] = Status::kBasic;
  }

  // Phase-1 costs: 1 on artificials. Reduced costs d_j = c_j - c_B' T_j.
  Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(n_total);
  d.head(n_vars) = -T.leftCols(n_vars).colwise().sum();

  const int max_iterations = 200 * static_cast<int>(n_total) + 1000;
  bool bland = false;
  int degenerate_run = 0;
  Eigen::VectorXd column(m);

  for (int it = 0;; ++it) {
    if (it > max_iterations) {
      throw std::runtime_error("solve_box_feasibility: iteration limit exceeded");
    }
    out.iterations = it;

    Eigen::Index enter = -1;
    double best = 0.0;
    for (Eigen::Index j = 0; j < n_total; ++j) {
      const Status st = status[static_cast<std::size_t>(j)];
      double gain = 0.0;
      if (st == Status::kLower && d(j) < -kCostTol) {
        gain = -d(j);
      } else if (st == Status::kUpper && d(j) > kCostTol) {
        gain = d(j);
      } else {
        continue;
      }
      if (bland) {
        enter = j;
        break;
      }
      if (gain > best) {
        best = gain;
        enter = j;
      }
    }
    if (enter < 0) break;

    const double dir = status[static_cast<std::size_t>(enter)] == Status::kLower ? 1.0 : -1.0;
    column = T.col(enter);

    double theta = upper[static_cast<std::size_t>(enter)];
    Eigen::Index leave = -1;
    bool leave_to_upper = false;
    double leave_alpha = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) {
      const double alpha = dir * column(r);
      const double ub = upper[static_cast<std::size_t>(basis[static_cast<std::size_t>(r)])];
      double t;
      bool to_upper;
      if (alpha > kPivotTol) {
        t = xb(r) / alpha;
        to_upper = false;
      } else if (alpha < -kPivotTol && std::isfinite(ub)) {
        t = (ub - xb(r)) / (-alpha);
        to_upper = true;
      } else {
        continue;
      }
      t = std::max(t, 0.0);
      bool take = t < theta - kTieTol;
      if (!take && leave >= 0 && std::abs(t - theta) <= kTieTol) {
        take = bland ? basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)]
                     : std::abs(alpha) > std::abs(leave_alpha);
      }
      if (take) {
        theta = t;
        leave = r;
        leave_to_upper = to_upper;
        leave_alpha = alpha;
      }
    }
    if (!std::isfinite(theta)) break;  // unbounded ray; cannot lower the phase-1 objective further

    degenerate_run = theta <= 1e-13 ? degenerate_run + 1 : 0;
    if (degenerate_run > kDegenerateBeforeBland) bland = true;

    xb -= (dir * theta) * column;

    if (leave < 0) {
      auto& st = status[static_cast<std::size_t>(enter)];
      st = st == Status::kLower ? Status::kUpper : Status::kLower;
      continue;
    }

    const double start =
        status[static_cast<std::size_t>(enter)] == Status::kLower ? 0.0 : upper[static_cast<std::size_t>(enter)];
    const Eigen::Index leaving = basis[static_cast<std::size_t>(leave)];
    if (leaving >= n_vars) {
      status[static_cast<std::size_t>(leaving)] = Status::kFixed;
    } else {
      status[static_cast<std::size_t>(leaving)] = leave_to_upper ? Status::kUpper : Status::kLower;
    }
    xb(leave) = start + dir * theta;
    basis[static_cast<std::size_t>(leave)] = enter;
    status[static_cast<std::size_t>(enter)] = Status::kBasic;

    const double pivot = T(leave, enter);
    T.row(leave) /= pivot;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (r == leave) continue;
      const double f = T(r, enter);
      if (f != 0.0) T.row(r) -= f * T.row(leave);
    }
    const double dj = d(enter);
    if (dj != 0.0) d -= dj * T.row(leave);

    for (Eigen::Index r = 0; r < m; ++r) {
      const double ub = upper[static_cast<std::size_t>(basis[static_cast<std::size_t>(r)])];
      xb(r) = std::clamp(xb(r), 0.0, ub);
    }
  }

  double objective = zero_row_violation;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n_vars);
  for (Eigen::Index j = 0; j < n_vars; ++j) {
    if (status[static_cast<std::size_t>(j)] == Status::kUpper) beta(j) = ub_struct;
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index v = basis[static_cast<std::size_t>(r)];
    if (v >= n_vars) {
      objective += xb(r);
    } else {
      beta(v) = xb(r);
    }
  }
  out.residual = objective;
  out.feasible = objective <= residual_tol;
  out.coefficients = beta.array() - radius;
  return out;
}

}  // namespace ira::lp
