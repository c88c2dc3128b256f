#include "ira/conformal.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ira/error.hpp"

namespace ira::conformal {

std::string_view to_string(ScoreMode mode) { return mode == ScoreMode::kPointwise ? "pointwise" : "pathwise"; }

ScoreMode score_mode_from_string(std::string_view s) {
  if (s == "pointwise") return ScoreMode::kPointwise;
  if (s == "pathwise") return ScoreMode::kPathwise;
  throw InvalidArgument("unknown score mode '" + std::string(s) + "'");
}

double pointwise_score(const Zonotope& predicted, std::span<const Vector> states) {
  if (states.empty()) throw InvalidArgument("pointwise_score: no states");
  const auto hull = setcalc::interval_hull(predicted);
  double score = -std::numeric_limits<double>::infinity();
  for (const auto& x : states) {
    if (x.size() != predicted.dim()) throw InvalidArgument("pointwise_score: state dimension mismatch");
    const double v = std::max((hull.lower - x).maxCoeff(), (x - hull.upper).maxCoeff());
    score = std::max(score, v);
  }
  return score;
}

double pathwise_score(std::span<const Zonotope> predicted, std::span<const std::vector<Vector>> states) {
  if (predicted.size() != states.size() || predicted.empty()) {
    throw InvalidArgument("pathwise_score: predictions and state samples are not aligned");
  }
  double score = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < predicted.size(); ++j) score = std::max(score, pointwise_score(predicted[j], states[j]));
  return score;
}

double conformal_quantile(std::span<const double> scores, double delta) {
  if (scores.empty()) throw InvalidArgument("conformal_quantile: no calibration scores");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("conformal_quantile: delta must lie in (0, 1)");
  const auto n = static_cast<long long>(scores.size());
  // ceil(level * N) equals ceil((N+1)(1-delta)); the small offset absorbs round-off in the product.
  const auto rank = static_cast<long long>(std::ceil(static_cast<double>(n + 1) * (1.0 - delta) - 1e-9));
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double q = rank > n ? sorted.back() : sorted[static_cast<std::size_t>(std::max(rank, 1LL) - 1)];
  return std::max(0.0, q);
}

Zonotope inflate(const Zonotope& z, double q) {
  if (!(q >= 0.0)) throw InvalidArgument("inflate: q must be nonnegative");
  return setcalc::minkowski_sum(z, setcalc::scaled_identity(z.dim(), q));
}

BaselinePredictor::BaselinePredictor(int order) : order_(order) {
  if (order < 1) throw InvalidArgument("BaselinePredictor: order must be positive");
}

Zonotope BaselinePredictor::predict(const Zonotope& current, const Zonotope& endpoint, const Substep& step) const {
  if (current.dim() != endpoint.dim()) throw InvalidArgument("BaselinePredictor: dimension mismatch");
  if (step.Ns < 1 || step.j < 0 || step.j > step.Ns) throw InvalidArgument("BaselinePredictor: invalid substep");
  const double w_end = static_cast<double>(step.j) / step.Ns;
  const double w_cur = 1.0 - w_end;
  const Vector c = w_cur * current.center() + w_end * endpoint.center();
  const Eigen::Index gc = w_cur > 0.0 ? current.num_generators() : 0;
  const Eigen::Index ge = w_end > 0.0 ? endpoint.num_generators() : 0;
  Matrix G(current.dim(), gc + ge);
  if (gc > 0) G.leftCols(gc) = w_cur * current.generators();
  if (ge > 0) G.rightCols(ge) = w_end * endpoint.generators();
  return setcalc::reduce_order(Zonotope(c, std::move(G)), order_);
}

FineStepPredictor::FineStepPredictor(MatrixZonotope fine_model, Zonotope input_set, Zonotope noise, int order)
    : model_(std::move(fine_model)), input_set_(std::move(input_set)), noise_(std::move(noise)), order_(order) {}

Zonotope FineStepPredictor::predict(const Zonotope& current, const Zonotope&, const Substep&) const {
  return reach::propagate_step(model_, current, input_set_, noise_, order_);
}

ScaledPredictor::ScaledPredictor(const PredictorInterface& inner, double factor) : inner_(inner), factor_(factor) {
  if (!(factor >= 0.0)) throw InvalidArgument("ScaledPredictor: factor must be nonnegative");
}

Zonotope ScaledPredictor::predict(const Zonotope& current, const Zonotope& endpoint, const Substep& step) const {
  const Zonotope z = inner_.predict(current, endpoint, step);
  return Zonotope(z.center(), factor_ * z.generators());
}

std::string ScaledPredictor::name() const { return inner_.name() + "*" + std::to_string(factor_); }

Zonotope augment_initial_set(const Zonotope& base, const AugmentationOptions& opt, std::mt19937_64& rng) {
  if (!(opt.scale_low > 0.0 && opt.scale_low <= opt.scale_high) || opt.translation < 0.0) {
    throw InvalidArgument("augment_initial_set: invalid augmentation ranges");
  }
  const Eigen::Index n = base.dim();
  std::uniform_real_distribution<double> shift(-opt.translation, opt.translation);
  std::uniform_real_distribution<double> scale(opt.scale_low, opt.scale_high);
  Vector c = base.center();
  for (Eigen::Index i = 0; i < n; ++i) c(i) += shift(rng);
  Matrix G = base.generators();
  for (Eigen::Index i = 0; i < G.cols(); ++i) G.col(i) *= scale(rng);
  if (opt.rotate && n > 1) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix R(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) R(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(R);
    Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix upper = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (upper(i, i) < 0.0) Q.col(i) *= -1.0;
    }
    G = Q * G;
  }
  return Zonotope(std::move(c), std::move(G));
}

std::vector<CalibrationInstance> generate_instances(const InstanceContext& ctx, const Zonotope& base_X0, int count,
                                                    std::uint64_t seed, const InstanceOptions& opt) {
  ctx.cfg.validate();
  if (count < 0 || opt.n_traj < 1) throw InvalidArgument("generate_instances: invalid count or n_traj");
  const int K = ctx.cfg.K;
  const int Ns = ctx.cfg.Ns;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_k(0, K - 1);

  std::vector<CalibrationInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    CalibrationInstance inst;
    inst.X0 = augment_initial_set(base_X0, opt.augmentation, rng);
    inst.k = pick_k(rng);
    const std::uint64_t traj_seed = rng();

    reach::ChainConfig fine_cfg = ctx.cfg;
    fine_cfg.K = inst.k + 1;
    const auto fine = reach::run_fine_chain(fine_cfg, ctx.fine_model, inst.X0, ctx.Zw_f);
    for (int j = 0; j <= Ns; ++j) inst.fine_sets.push_back(fine.set(static_cast<std::size_t>(inst.k * Ns + j)));
    const auto anchors = reach::compute_anchors(fine_cfg, ctx.coarse_model, inst.X0, ctx.Zw_c);
    inst.anchor_k = anchors.set(static_cast<std::size_t>(inst.k));
    inst.anchor_k1 = anchors.set(static_cast<std::size_t>(inst.k) + 1);

    const auto trajs = sysdata::monte_carlo(ctx.truth, inst.X0, ctx.cfg.input_set, (inst.k + 1) * Ns, Ns,
                                            opt.n_traj, traj_seed);
    inst.states.resize(static_cast<std::size_t>(Ns - 1));
    for (int j = 1; j < Ns; ++j) {
      auto& slot = inst.states[static_cast<std::size_t>(j - 1)];
      slot.reserve(trajs.size());
      for (const auto& traj : trajs) slot.push_back(traj[static_cast<std::size_t>(inst.k * Ns + j)]);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<Zonotope> predict_instance(const PredictorInterface& predictor, const CalibrationInstance& inst,
                                       const reach::ChainConfig& cfg, PromptMode mode) {
  const int Ns = cfg.Ns;
  const double t_total = cfg.K * Ns * cfg.dt_fine;
  const Zonotope& endpoint = mode == PromptMode::kTeacherForced ? inst.fine_sets.back() : inst.anchor_k1;
  std::vector<Zonotope> out;
  out.reserve(static_cast<std::size_t>(Ns - 1));
  for (int j = 1; j < Ns; ++j) {
    const Zonotope& current = mode == PromptMode::kTeacherForced ? inst.fine_sets[static_cast<std::size_t>(j - 1)]
                              : j == 1                           ? inst.anchor_k
                                                                 : out.back();
    const Substep step{j, Ns, (inst.k * Ns + j - 1) * cfg.dt_fine / t_total, (inst.k + 1) * Ns * cfg.dt_fine / t_total};
    out.push_back(predictor.predict(current, endpoint, step));
  }
  return out;
}

CalibrationRecord calibrate(const PredictorInterface& predictor, std::span<const CalibrationInstance> instances,
                            const reach::ChainConfig& cfg, double delta, ScoreMode mode) {
  if (instances.empty()) throw InvalidArgument("calibrate: no calibration instances");
  CalibrationRecord rec;
  rec.delta = delta;
  rec.mode = mode;
  rec.n_instances = static_cast<int>(instances.size());
  rec.n_traj = static_cast<int>(instances.front().states.front().size());
  rec.predictor = predictor.name();
  for (const auto& inst : instances) {
    const auto preds = predict_instance(predictor, inst, cfg, PromptMode::kTeacherForced);
    if (mode == ScoreMode::kPathwise) {
      rec.scores.push_back(pathwise_score(preds, inst.states));
    } else {
      for (std::size_t j = 0; j < preds.size(); ++j) rec.scores.push_back(pointwise_score(preds[j], inst.states[j]));
    }
  }
  rec.q_hat = conformal_quantile(rec.scores, delta);
  rec.degenerate = static_cast<double>(rec.n_cal() + 1) * (1.0 - delta) > rec.n_cal();
  return rec;
}

Interval wilson_interval(const Proportion& p, double z) {
  if (p.total <= 0) return {0.0, 1.0};
  const double n = p.total;
  const double phat = p.rate();
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

CoverageReport evaluate_coverage(const PredictorInterface& predictor, std::span<const CalibrationInstance> instances,
                                 const reach::ChainConfig& cfg, double q_hat, PromptMode prompts) {
  if (!(q_hat >= 0.0)) throw InvalidArgument("evaluate_coverage: q_hat must be nonnegative");
  CoverageReport rep;
  rep.q_hat = q_hat;
  rep.prompts = prompts;
  rep.per_substep.resize(static_cast<std::size_t>(cfg.Ns - 1));
  for (const auto& inst : instances) {
    const auto preds = predict_instance(predictor, inst, cfg, prompts);
    bool path_ok = true;
    for (std::size_t j = 0; j < preds.size(); ++j) {
      const bool ok = pointwise_score(preds[j], inst.states[j]) <= q_hat;
      path_ok = path_ok && ok;
      rep.pointwise.covered += ok ? 1 : 0;
      ++rep.pointwise.total;
      rep.per_substep[j].covered += ok ? 1 : 0;
      ++rep.per_substep[j].total;
      for (const auto& x : inst.states[j]) {
        rep.states.covered += pointwise_score(preds[j], std::span<const Vector>(&x, 1)) <= q_hat ? 1 : 0;
        ++rep.states.total;
      }
    }
    rep.path.covered += path_ok ? 1 : 0;
    ++rep.path.total;
  }
  return rep;
}

}  // namespace ira::conformal
