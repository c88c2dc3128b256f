#include "ira/reach.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "ira/error.hpp"

namespace ira::reach {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Zonotope maybe_reduce(const Zonotope& z, int order) {
  return order == kNoReduction ? z : setcalc::reduce_order(z, order);
}

// Fixed pool consuming interval indices; closes and joins on destruction.
class IntervalPool {
 public:
  template <typename Fn>
  IntervalPool(int threads, int intervals, Fn&& work) : errors_(static_cast<std::size_t>(intervals)) {
    threads_.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      threads_.emplace_back([this, &work] {
        for (;;) {
          int k;
          {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [this] { return !queue_.empty() || closed_; });
            if (queue_.empty()) return;
            k = queue_.front();
            queue_.pop_front();
          }
          try {
            work(k);
          } catch (...) {
            errors_[static_cast<std::size_t>(k)] = std::current_exception();
          }
        }
      });
    }
  }

  IntervalPool(const IntervalPool&) = delete;
  IntervalPool& operator=(const IntervalPool&) = delete;

  ~IntervalPool() { finish(); }

  void dispatch(int k) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(k);
    }
    cv_.notify_one();
  }

  // Waits for all dispatched work, then rethrows the first failure by interval order.
  void wait_and_rethrow() {
    finish();
    for (const auto& e : errors_) {
      if (e) std::rethrow_exception(e);
    }
  }

 private:
  void finish() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
    threads_.clear();
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<int> queue_;
  bool closed_ = false;
  std::vector<std::exception_ptr> errors_;
  std::vector<std::jthread> threads_;
};

}  // namespace

std::string_view to_string(SetKind kind) {
  switch (kind) {
    case SetKind::kAnchor:
      return "anchor";
    case SetKind::kInterpolated:
      return "interpolated";
    case SetKind::kFine:
      return "fine";
    case SetKind::kModelBased:
      return "model_based";
  }
  return "unknown";
}

std::string_view to_string(CoarseNoiseMode mode) {
  return mode == CoarseNoiseMode::kEstimated ? "estimated" : "exact-oracle";
}

void ChainConfig::validate() const {
  if (K < 1) throw InvalidArgument("ChainConfig: K must be at least 1");
  if (Ns < 2) throw InvalidArgument("ChainConfig: Ns must be at least 2");
  if (order < 1) throw InvalidArgument("ChainConfig: reduction order must be at least 1");
  if (!(dt_fine > 0.0)) throw InvalidArgument("ChainConfig: dt_fine must be positive");
}

std::vector<Zonotope> ReachChain::sets() const {
  std::vector<Zonotope> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.set);
  return out;
}

Zonotope propagate_step(const MatrixZonotope& model, const Zonotope& R, const Zonotope& U, const Zonotope& Zw,
                        int order) {
  if (model.rows() != Zw.dim() || model.cols() != R.dim() + U.dim()) {
    throw InvalidArgument("propagate_step: model, state, input and noise dimensions are inconsistent");
  }
  const Zonotope product = setcalc::mz_zono_mul(model, setcalc::cartesian_product(R, U));
  return maybe_reduce(setcalc::minkowski_sum(product, Zw), order);
}

Zonotope propagate_step(const Matrix& AB, const Zonotope& R, const Zonotope& U, const Zonotope& Zw, int order) {
  if (AB.rows() != Zw.dim() || AB.cols() != R.dim() + U.dim()) {
    throw InvalidArgument("propagate_step: model, state, input and noise dimensions are inconsistent");
  }
  const Zonotope mapped = setcalc::linear_map(AB, setcalc::cartesian_product(R, U));
  return maybe_reduce(setcalc::minkowski_sum(mapped, Zw), order);
}

ReachChain compute_anchors(const ChainConfig& cfg, const MatrixZonotope& coarse_model, const Zonotope& X0,
                           const Zonotope& Zw_c) {
  if (cfg.K < 0) throw InvalidArgument("compute_anchors: K must be nonnegative");
  ReachChain chain;
  chain.steps.reserve(static_cast<std::size_t>(cfg.K) + 1);
  chain.steps.push_back({0.0, SetKind::kAnchor, X0, 0.0});
  for (int k = 0; k < cfg.K; ++k) {
    const auto start = Clock::now();
    Zonotope next = propagate_step(coarse_model, chain.steps.back().set, cfg.input_set, Zw_c, cfg.order);
    chain.steps.push_back({(k + 1) * cfg.dt_coarse(), SetKind::kAnchor, std::move(next), ms_since(start)});
    ++chain.mult_count;
  }
  return chain;
}

std::vector<Zonotope> interpolate_interval(int k, const Zonotope& anchor, const MatrixZonotope& fine_model,
                                           const ChainConfig& cfg, const Zonotope& Zw_f) {
  if (k < 0) throw InvalidArgument("interpolate_interval: negative interval index");
  std::vector<Zonotope> out;
  out.reserve(static_cast<std::size_t>(std::max(cfg.Ns - 1, 0)));
  const Zonotope* current = &anchor;
  for (int j = 1; j < cfg.Ns; ++j) {
    out.push_back(propagate_step(fine_model, *current, cfg.input_set, Zw_f, cfg.order));
    current = &out.back();
  }
  return out;
}

ReachChain run_fine_chain(const ChainConfig& cfg, const MatrixZonotope& fine_model, const Zonotope& X0,
                          const Zonotope& Zw_f) {
  const int steps = cfg.K * cfg.Ns;
  if (steps < 0) throw InvalidArgument("run_fine_chain: negative horizon");
  ReachChain chain;
  chain.steps.reserve(static_cast<std::size_t>(steps) + 1);
  chain.steps.push_back({0.0, SetKind::kFine, X0, 0.0});
  for (int j = 0; j < steps; ++j) {
    const auto start = Clock::now();
    Zonotope next = propagate_step(fine_model, chain.steps.back().set, cfg.input_set, Zw_f, cfg.order);
    chain.steps.push_back({(j + 1) * cfg.dt_fine, SetKind::kFine, std::move(next), ms_since(start)});
    ++chain.mult_count;
  }
  return chain;
}

ReachChain run_model_based(const Matrix& A, const Matrix& B, const Zonotope& X0, const Zonotope& U,
                           const Zonotope& Zw, int steps, double dt, int input_hold, int order) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (A.cols() != n || B.rows() != n || X0.dim() != n || U.dim() != m || Zw.dim() != n) {
    throw InvalidArgument("run_model_based: dimension mismatch");
  }
  if (input_hold < 1) throw InvalidArgument("run_model_based: input_hold must be positive");
  if (steps < 0) throw InvalidArgument("run_model_based: negative horizon");

  ReachChain chain;
  chain.steps.reserve(static_cast<std::size_t>(steps) + 1);
  chain.steps.push_back({0.0, SetKind::kModelBased, X0, 0.0});

  if (input_hold == 1) {
    Matrix AB(n, n + m);
    AB << A, B;
    for (int j = 0; j < steps; ++j) {
      const auto start = Clock::now();
      Zonotope next = propagate_step(AB, chain.steps.back().set, U, Zw, order);
      chain.steps.push_back({(j + 1) * dt, SetKind::kModelBased, std::move(next), ms_since(start)});
    }
    return chain;
  }

  // Augmented state [x; u] with u' = u inside a hold block.
  Matrix transition = Matrix::Zero(n + m, n + m);
  transition.topLeftCorner(n, n) = A;
  transition.topRightCorner(n, m) = B;
  transition.bottomRightCorner(m, m) = Matrix::Identity(m, m);
  Matrix project = Matrix::Zero(n, n + m);
  project.leftCols(n) = Matrix::Identity(n, n);
  const Zonotope noise_aug = setcalc::cartesian_product(Zw, Zonotope::point(Vector::Zero(m)));

  Zonotope augmented;
  for (int j = 0; j < steps; ++j) {
    const auto start = Clock::now();
    if (j % input_hold == 0) augmented = setcalc::cartesian_product(chain.steps.back().set, U);
    augmented = setcalc::minkowski_sum(setcalc::linear_map(transition, augmented), noise_aug);
    augmented = maybe_reduce(augmented, order);
    chain.steps.push_back(
        {(j + 1) * dt, SetKind::kModelBased, setcalc::linear_map(project, augmented), ms_since(start)});
  }
  return chain;
}

ReachChain IraResult::merged(const ChainConfig& cfg) const {
  ReachChain out;
  const int K = static_cast<int>(interpolants.size());
  for (int k = 0; k <= K; ++k) {
    out.steps.push_back(anchors.steps.at(static_cast<std::size_t>(k)));
    if (k == K) break;
    const auto& interval = interpolants[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < interval.size(); ++j) {
      const double t = (k * cfg.Ns + static_cast<int>(j) + 1) * cfg.dt_fine;
      const auto& ms = interpolant_ms.at(static_cast<std::size_t>(k));
      out.steps.push_back({t, SetKind::kInterpolated, interval[j], j < ms.size() ? ms[j] : 0.0});
    }
  }
  out.mult_count = phase1_mults + phase2_mults;
  return out;
}

IraResult run_ira(const ChainConfig& cfg, const MatrixZonotope& coarse_model, const MatrixZonotope& fine_model,
                  const Zonotope& X0, const Zonotope& Zw_c, const Zonotope& Zw_f, const IraOptions& options) {
  cfg.validate();
  const auto* predictor = options.predictor;
  if (predictor != nullptr && !options.q_hat.has_value()) {
    throw InvalidArgument("run_ira: a predictor requires a calibrated quantile");
  }
  if (options.q_hat.has_value() && !(*options.q_hat >= 0.0)) {
    throw InvalidArgument("run_ira: quantile must be nonnegative");
  }
  const int K = cfg.K;
  const int Ns = cfg.Ns;
  const double t_total = options.t_total.value_or(K * Ns * cfg.dt_fine);
  const auto start = Clock::now();

  IraResult res;
  res.anchors.steps.resize(static_cast<std::size_t>(K) + 1);
  res.anchors.steps[0] = {0.0, SetKind::kAnchor, X0, 0.0};
  res.interpolants.resize(static_cast<std::size_t>(K));
  res.interpolant_ms.resize(static_cast<std::size_t>(K));
  if (predictor != nullptr) res.raw_predictions.resize(static_cast<std::size_t>(K));

  auto run_interval = [&](int k) {
    const auto ks = static_cast<std::size_t>(k);
    auto& out = res.interpolants[ks];
    auto& ms = res.interpolant_ms[ks];
    out.reserve(static_cast<std::size_t>(Ns - 1));
    ms.reserve(static_cast<std::size_t>(Ns - 1));
    if (predictor == nullptr) {
      const Zonotope* prev = &res.anchors.steps[ks].set;
      for (int j = 1; j < Ns; ++j) {
        const auto step_start = Clock::now();
        out.push_back(propagate_step(fine_model, *prev, cfg.input_set, Zw_f, cfg.order));
        ms.push_back(ms_since(step_start));
        prev = &out.back();
      }
      return;
    }
    const Zonotope& endpoint = res.anchors.steps[ks + 1].set;
    const Zonotope inflation = setcalc::scaled_identity(X0.dim(), *options.q_hat);
    auto& raw = res.raw_predictions[ks];
    raw.reserve(static_cast<std::size_t>(Ns - 1));
    const Zonotope* current = &res.anchors.steps[ks].set;
    for (int j = 1; j < Ns; ++j) {
      const conformal::Substep step{j, Ns, ((k * Ns) + j - 1) * cfg.dt_fine / t_total,
                                    (k + 1) * Ns * cfg.dt_fine / t_total};
      const auto step_start = Clock::now();
      raw.push_back(predictor->predict(*current, endpoint, step));
      if (raw.back().dim() != X0.dim()) throw PredictorError("run_ira: predictor returned a set of wrong dimension");
      out.push_back(setcalc::minkowski_sum(raw.back(), inflation));
      ms.push_back(ms_since(step_start));
      current = &raw.back();
    }
  };

  auto phase1_step = [&](int k) {
    const auto step_start = Clock::now();
    Zonotope next = propagate_step(coarse_model, res.anchors.steps[static_cast<std::size_t>(k)].set, cfg.input_set,
                                   Zw_c, cfg.order);
    res.anchors.steps[static_cast<std::size_t>(k) + 1] = {(k + 1) * cfg.dt_coarse(), SetKind::kAnchor,
                                                          std::move(next), ms_since(step_start)};
  };

  if (options.workers <= 1) {
    for (int k = 0; k < K; ++k) phase1_step(k);
    res.phase1_ms = ms_since(start);
    for (int k = 0; k < K; ++k) run_interval(k);
  } else {
    IntervalPool pool(std::min(options.workers, K), K, run_interval);
    if (predictor == nullptr) pool.dispatch(0);
    for (int k = 0; k < K; ++k) {
      phase1_step(k);
      // Exact interpolation of interval k+1 needs anchor k+1; a predictor also needs the endpoint k+1.
      if (predictor == nullptr && k + 1 < K) pool.dispatch(k + 1);
      if (predictor != nullptr) pool.dispatch(k);
    }
    res.phase1_ms = ms_since(start);
    pool.wait_and_rethrow();
  }

  res.anchors.mult_count = K;
  res.phase1_mults = K;
  if (predictor == nullptr) {
    res.phase2_mults = K * (Ns - 1);
  } else {
    res.predictor_calls = K * (Ns - 1);
  }
  res.total_ms = ms_since(start);
  return res;
}

bool check_tightness_premise(const Zonotope& anchor, const Zonotope& fine_set) {
  if (anchor.dim() != fine_set.dim()) throw InvalidArgument("check_tightness_premise: dimension mismatch");
  return setcalc::interval_hull(fine_set).contains(setcalc::interval_hull(anchor));
}

SensitivityReport step_size_sensitivity_report(const MatrixZonotope& coarse_model, const MatrixZonotope& fine_model,
                                               const Zonotope& X0, const Zonotope& U, const Zonotope& Zw_c,
                                               const Zonotope& Zw_f, int Ns, int order) {
  if (Ns < 1) throw InvalidArgument("step_size_sensitivity_report: Ns must be positive");
  SensitivityReport rep;
  rep.coarse_set = propagate_step(coarse_model, X0, U, Zw_c, order);
  rep.fine_set = X0;
  for (int j = 0; j < Ns; ++j) rep.fine_set = propagate_step(fine_model, rep.fine_set, U, Zw_f, order);

  rep.coarse_width = setcalc::interval_hull(rep.coarse_set).width();
  rep.fine_width = setcalc::interval_hull(rep.fine_set).width();
  for (Eigen::Index d = 0; d < rep.coarse_width.size(); ++d) {
    const double scale = std::max(rep.coarse_width(d), rep.fine_width(d));
    if (scale > 0.0) {
      rep.max_relative_gap =
          std::max(rep.max_relative_gap, std::abs(rep.coarse_width(d) - rep.fine_width(d)) / scale);
    }
  }
  rep.hausdorff = setcalc::hausdorff_estimate(rep.coarse_set, rep.fine_set, std::max<int>(128, 2 * X0.dim()));
  rep.differs = rep.max_relative_gap > kSensitivityGap;
  return rep;
}

DepthModel depth_model(int K, int Ns) {
  if (K < 1 || Ns < 1) throw InvalidArgument("depth_model: K and Ns must be positive");
  DepthModel d;
  d.total_fine = static_cast<long long>(K) * Ns;
  d.work_ira = K + static_cast<long long>(K) * (Ns - 1);
  d.depth_ira = K + (Ns - 1);
  d.speedup = static_cast<double>(d.total_fine) / static_cast<double>(d.depth_ira);
  return d;
}

double mean_hull_width(std::span<const Zonotope> sets) {
  double total = 0.0;
  Eigen::Index count = 0;
  for (const auto& z : sets) {
    total += setcalc::interval_hull(z).width().sum();
    count += z.dim();
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

}  // namespace ira::reach
