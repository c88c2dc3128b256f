#include "ira/setcalc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "ira/error.hpp"
#include "ira/lp.hpp"

namespace ira::setcalc {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Zonotope

Zonotope::Zonotope(Vector center, Matrix generators)
    : center_(std::move(center)), generators_(std::move(generators)) {
  if (generators_.cols() == 0) generators_.resize(center_.size(), 0);
  require(generators_.rows() == center_.size(), "Zonotope: generator rows must equal center dimension");
  require(center_.allFinite() && generators_.allFinite(), "Zonotope: non-finite entry");
}

Zonotope Zonotope::point(Vector center) {
  const auto n = center.size();
  return Zonotope(std::move(center), Matrix(n, 0));
}

Zonotope Zonotope::box(Vector center, const Vector& radius) {
  require(radius.size() == center.size(), "Zonotope::box: radius dimension mismatch");
  require((radius.array() >= 0.0).all(), "Zonotope::box: negative radius");
  return Zonotope(std::move(center), Matrix(radius.asDiagonal()));
}

Zonotope Zonotope::negated() const { return Zonotope(-center_, -generators_); }

Zonotope Zonotope::translated(const Vector& shift) const {
  require(shift.size() == dim(), "Zonotope::translated: dimension mismatch");
  return Zonotope(center_ + shift, generators_);
}

Vector Zonotope::point_at(const Vector& coefficients) const {
  require(coefficients.size() == num_generators(), "Zonotope::point_at: coefficient count mismatch");
  return center_ + generators_ * coefficients;
}

bool operator==(const Zonotope& a, const Zonotope& b) {
  return a.center_.size() == b.center_.size() && a.generators_.cols() == b.generators_.cols() &&
         a.center_ == b.center_ && a.generators_ == b.generators_;
}

Zonotope scaled_identity(Eigen::Index dim, double radius) {
  require(radius >= 0.0, "scaled_identity: negative radius");
  return Zonotope(Vector::Zero(dim), radius * Matrix::Identity(dim, dim));
}

// ---------------------------------------------------------------------------
// MatrixZonotope

MatrixZonotope::MatrixZonotope(Matrix center, std::span<const Matrix> generators)
    : center_(std::move(center)), num_generators_(static_cast<Eigen::Index>(generators.size())) {
  require(center_.allFinite(), "MatrixZonotope: non-finite center");
  stacked_.resize(num_generators_ * center_.rows(), center_.cols());
  for (Eigen::Index i = 0; i < num_generators_; ++i) {
    const Matrix& g = generators[static_cast<std::size_t>(i)];
    require(g.rows() == center_.rows() && g.cols() == center_.cols(),
            "MatrixZonotope: generator shape differs from center");
    require(g.allFinite(), "MatrixZonotope: non-finite generator");
    stacked_.middleRows(i * center_.rows(), center_.rows()) = g;
  }
}

MatrixZonotope MatrixZonotope::from_stacked(Matrix center, Matrix stacked_generators) {
  require(center.allFinite() && stacked_generators.allFinite(), "MatrixZonotope: non-finite entry");
  require(stacked_generators.cols() == center.cols() || stacked_generators.rows() == 0,
          "MatrixZonotope: stacked generator width differs from center");
  MatrixZonotope out;
  if (center.rows() == 0) {
    require(stacked_generators.rows() == 0, "MatrixZonotope: generators for empty center");
    out.num_generators_ = 0;
  } else {
    require(stacked_generators.rows() % center.rows() == 0,
            "MatrixZonotope: stacked generator height not a multiple of rows");
    out.num_generators_ = stacked_generators.rows() / center.rows();
  }
  if (stacked_generators.rows() == 0) stacked_generators.resize(0, center.cols());
  out.center_ = std::move(center);
  out.stacked_ = std::move(stacked_generators);
  return out;
}

MatrixZonotope MatrixZonotope::point(Matrix center) {
  const auto cols = center.cols();
  return from_stacked(std::move(center), Matrix(0, cols));
}

MatrixZonotope MatrixZonotope::column_block(Eigen::Index first, Eigen::Index count) const {
  require(first >= 0 && count >= 0 && first + count <= cols(), "MatrixZonotope::column_block: range out of bounds");
  return from_stacked(center_.middleCols(first, count), stacked_.middleCols(first, count));
}

MatrixZonotope MatrixZonotope::right_multiply(const Matrix& right) const {
  require(right.rows() == cols(), "MatrixZonotope::right_multiply: dimension mismatch");
  return from_stacked(center_ * right, stacked_ * right);
}

MatrixZonotope MatrixZonotope::negated() const { return from_stacked(-center_, -stacked_); }

MatrixZonotope MatrixZonotope::translated(const Matrix& shift) const {
  require(shift.rows() == rows() && shift.cols() == cols(), "MatrixZonotope::translated: shape mismatch");
  return from_stacked(center_ + shift, stacked_);
}

Matrix MatrixZonotope::vectorized_generators() const {
  const Eigen::Index len = rows() * cols();
  Matrix out(len, num_generators_);
  for (Eigen::Index i = 0; i < num_generators_; ++i) {
    const Matrix g = generator(i);
    out.col(i) = Eigen::Map<const Vector>(g.data(), len);
  }
  return out;
}

// ---------------------------------------------------------------------------
// IntervalBox

bool IntervalBox::contains(const IntervalBox& inner, double tol) const {
  if (inner.lower.size() != lower.size()) throw InvalidArgument("IntervalBox::contains: dimension mismatch");
  return (inner.lower.array() >= lower.array() - tol).all() && (inner.upper.array() <= upper.array() + tol).all();
}

// ---------------------------------------------------------------------------
// Set operations

Zonotope linear_map(const Matrix& map, const Zonotope& z) {
  require(map.cols() == z.dim(), "linear_map: matrix column count must equal zonotope dimension");
  return Zonotope(map * z.center(), map * z.generators());
}

Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b) {
  require(a.dim() == b.dim(), "minkowski_sum: dimension mismatch");
  Matrix g(a.dim(), a.num_generators() + b.num_generators());
  g << a.generators(), b.generators();
  return Zonotope(a.center() + b.center(), std::move(g));
}

Zonotope cartesian_product(const Zonotope& a, const Zonotope& b) {
  Vector c(a.dim() + b.dim());
  c << a.center(), b.center();
  Matrix g = Matrix::Zero(c.size(), a.num_generators() + b.num_generators());
  g.topLeftCorner(a.dim(), a.num_generators()) = a.generators();
  g.bottomRightCorner(b.dim(), b.num_generators()) = b.generators();
  return Zonotope(std::move(c), std::move(g));
}

MatrixZonotope self_concatenate(const Zonotope& z, int copies) {
  require(copies >= 1, "self_concatenate: number of copies must be positive");
  const Eigen::Index n = z.dim();
  const Eigen::Index T = copies;
  const Eigen::Index gamma = z.num_generators();
  Matrix center = z.center().replicate(1, T);
  // Generator (i, j): g_i in column j, index i*T + j.
  Matrix stacked = Matrix::Zero(gamma * T * n, T);
  for (Eigen::Index i = 0; i < gamma; ++i) {
    for (Eigen::Index j = 0; j < T; ++j) {
      stacked.block((i * T + j) * n, j, n, 1) = z.generators().col(i);
    }
  }
  return MatrixZonotope::from_stacked(std::move(center), std::move(stacked));
}

Zonotope mz_zono_mul(const MatrixZonotope& m, const Zonotope& z) {
  require(m.cols() == z.dim(), "mz_zono_mul: matrix zonotope column count must equal zonotope dimension");
  const Eigen::Index n = m.rows();
  const Eigen::Index gz = z.num_generators();
  const Eigen::Index gm = m.num_generators();

  Matrix gens(n, gz + gm + gm * gz);
  gens.leftCols(gz).noalias() = m.center() * z.generators();
  if (gm > 0) {
    const Vector gc = m.stacked_generators() * z.center();
    gens.middleCols(gz, gm) = Eigen::Map<const Matrix>(gc.data(), n, gm);
    if (gz > 0) {
      const Matrix cross = m.stacked_generators() * z.generators();
      for (Eigen::Index i = 0; i < gm; ++i) {
        gens.middleCols(gz + gm + i * gz, gz) = cross.middleRows(i * n, n);
      }
    }
  }
  return Zonotope(m.center() * z.center(), std::move(gens));
}

IntervalBox interval_hull(const Zonotope& z) {
  const Vector radius = z.generators().cwiseAbs().rowwise().sum();
  return IntervalBox{z.center() - radius, z.center() + radius};
}

Zonotope reduce_order(const Zonotope& z, int order) {
  require(order >= 1, "reduce_order: order * dim must be at least dim");
  const Eigen::Index n = z.dim();
  const Eigen::Index gamma = z.num_generators();
  if (gamma <= order * n) return z;

  const Eigen::Index keep = static_cast<Eigen::Index>(order - 1) * n;
  const Matrix& G = z.generators();
  std::vector<double> metric(static_cast<std::size_t>(gamma));
  for (Eigen::Index i = 0; i < gamma; ++i) {
    const auto col = G.col(i).cwiseAbs();
    metric[static_cast<std::size_t>(i)] = col.sum() - col.maxCoeff();
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(gamma));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return metric[static_cast<std::size_t>(a)] > metric[static_cast<std::size_t>(b)];
  });
  std::vector<Eigen::Index> kept(idx.begin(), idx.begin() + keep);
  std::sort(kept.begin(), kept.end());

  Vector box = Vector::Zero(n);
  for (auto it = idx.begin() + keep; it != idx.end(); ++it) box += G.col(*it).cwiseAbs();

  Matrix out(n, keep + n);
  for (Eigen::Index k = 0; k < keep; ++k) out.col(k) = G.col(kept[static_cast<std::size_t>(k)]);
  out.rightCols(n) = box.asDiagonal();
  return Zonotope(z.center(), std::move(out));
}

double support_function(const Zonotope& z, const Vector& direction) {
  require(direction.size() == z.dim(), "support_function: dimension mismatch");
  return direction.dot(z.center()) + (direction.transpose() * z.generators()).cwiseAbs().sum();
}

bool contains_point(const Zonotope& z, const Vector& x) {
  require(x.size() == z.dim(), "contains_point: dimension mismatch");
  const Vector offset = x - z.center();
  if (z.num_generators() == 0) return offset.cwiseAbs().maxCoeff() <= kContainmentTolerance;

  // Cheap rejection outside the interval hull.
  const Vector radius = z.generators().cwiseAbs().rowwise().sum();
  if ((offset.cwiseAbs() - radius).maxCoeff() > kContainmentTolerance * (1.0 + radius.maxCoeff())) return false;

  const auto res = lp::solve_box_feasibility(z.generators(), offset, 1.0 + kContainmentTolerance, 1e-10);
  return res.feasible;
}

std::vector<Vector> direction_set(Eigen::Index dim, int count) {
  require(dim >= 1, "direction_set: dimension must be positive");
  require(count >= 2 * dim, "direction_set: need at least 2*dim directions");
  static constexpr std::array<int, 32> kPrimes{2,  3,  5,  7,  11, 13, 17, 19, 23,  29,  31,  37,  41,  43,  47,  53,
                                               59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
  require(dim <= static_cast<Eigen::Index>(kPrimes.size()), "direction_set: dimension too large");

  std::vector<Vector> dirs;
  dirs.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < dim; ++i) {
    dirs.push_back(Vector::Unit(dim, i));
    dirs.push_back(-Vector::Unit(dim, i));
  }
  auto radical_inverse = [](long long k, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (k > 0) {
      r += f * static_cast<double>(k % base);
      k /= base;
      f *= inv;
    }
    return r;
  };
  for (long long k = 1; static_cast<int>(dirs.size()) < count; ++k) {
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = 2.0 * radical_inverse(k, kPrimes[static_cast<std::size_t>(i)]) - 1.0;
    const double nrm = v.norm();
    if (nrm < 1e-3) continue;
    dirs.push_back(v / nrm);
  }
  return dirs;
}

double hausdorff_estimate(const Zonotope& a, const Zonotope& b, int n_dirs) {
  require(a.dim() == b.dim(), "hausdorff_estimate: dimension mismatch");
  double worst = 0.0;
  for (const Vector& d : direction_set(a.dim(), n_dirs)) {
    worst = std::max(worst, std::abs(support_function(a, d) - support_function(b, d)));
  }
  return worst;
}

}  // namespace ira::setcalc
