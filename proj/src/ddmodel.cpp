#include "ira/ddmodel.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <string>

#include "ira/error.hpp"
#include "ira/lp.hpp"

namespace ira::ddmodel {

std::string_view to_string(Resolution r) { return r == Resolution::kFine ? "fine" : "coarse"; }

Matrix right_pseudo_inverse(const Matrix& D, double* gram_condition) {
  const Matrix gram = D * D.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double cond = ev(0) > 0.0 ? ev(ev.size() - 1) / ev(0) : std::numeric_limits<double>::infinity();
  if (gram_condition != nullptr) *gram_condition = cond;
  if (!(cond <= kMaxGramCondition)) {
    throw RankError("", "D_- D_-^T is ill-conditioned (condition " + std::to_string(cond) + ")");
  }
  return D.transpose() * gram.ldlt().solve(Matrix::Identity(gram.rows(), gram.cols()));
}

ModelSet build_model_set(const sysdata::DataMatrices& data, const Zonotope& Zw, Resolution source, double step) {
  const std::string res(to_string(source));
  if (data.X_plus.cols() != data.X_minus.cols() || data.U_minus.cols() != data.X_minus.cols()) {
    throw InvalidArgument("build_model_set: data matrices have different column counts");
  }
  if (Zw.dim() != data.X_plus.rows()) throw InvalidArgument("build_model_set: noise dimension mismatch");

  const Matrix D = data.D_minus();
  if (!sysdata::check_rank(D)) {
    throw RankError(res, "D_- does not have full row rank at the " + res + " resolution");
  }
  ModelSet ms;
  ms.source = source;
  ms.step = step;
  ms.provenance.samples = data.samples();
  ms.provenance.step = step;
  ms.provenance.rank_ok = true;

  Matrix pinv;
  try {
    pinv = right_pseudo_inverse(D, &ms.provenance.gram_condition);
  } catch (const RankError& e) {
    throw RankError(res, std::string(e.what()) + " at the " + res + " resolution");
  }

  const MatrixZonotope Mw = setcalc::self_concatenate(Zw, static_cast<int>(data.samples()));
  ms.mz = Mw.negated().translated(data.X_plus).right_multiply(pinv);
  return ms;
}

ABlock extract_A_block(const ModelSet& ms) { return ABlock{ms.mz.column_block(0, ms.state_dim())}; }

CoarseNoiseEstimate estimate_coarse_noise(const ABlock& ab, const Zonotope& Zw_f, int Ns, int order) {
  if (Ns < 1) throw InvalidArgument("estimate_coarse_noise: Ns must be positive");
  CoarseNoiseEstimate out{Zw_f, 0};
  for (int i = 1; i < Ns; ++i) {
    out.noise = setcalc::reduce_order(setcalc::minkowski_sum(setcalc::mz_zono_mul(ab.mz, out.noise), Zw_f), order);
    ++out.multiplications;
  }
  return out;
}

bool verify_membership(const MatrixZonotope& mz, const Matrix& M, double tol) {
  if (M.rows() != mz.rows() || M.cols() != mz.cols()) throw InvalidArgument("verify_membership: shape mismatch");
  const Matrix diff = M - mz.center();
  const Vector b = Eigen::Map<const Vector>(diff.data(), diff.size());
  return lp::solve_box_feasibility(mz.vectorized_generators(), b, 1.0, tol).feasible;
}

bool verify_membership(const ModelSet& ms, const Matrix& M, double tol) { return verify_membership(ms.mz, M, tol); }

}  // namespace ira::ddmodel
