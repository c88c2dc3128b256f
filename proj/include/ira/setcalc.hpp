#pragma once

/**
 * @file setcalc.hpp
 * @brief Zonotope and matrix-zonotope algebra.
 *
 * A zonotope is Z = <c, G> = { c + G a | a in [-1, 1]^gamma }. A matrix zonotope
 * is the same construction over matrices: { C + sum_i a_i G_i | a in [-1, 1]^gamma }.
 * All operations are pure and return new values.
 */

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace ira::setcalc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Zonotope {
 public:
  Zonotope() = default;

  /// Throws InvalidArgument on shape mismatch or non-finite entries.
  Zonotope(Vector center, Matrix generators);

  /// Degenerate zonotope without generators.
  static Zonotope point(Vector center);

  /// Axis-aligned box with the given center and half-widths.
  static Zonotope box(Vector center, const Vector& radius);

  Eigen::Index dim() const { return center_.size(); }
  Eigen::Index num_generators() const { return generators_.cols(); }
  const Vector& center() const { return center_; }
  const Matrix& generators() const { return generators_; }

  /// { -z | z in Z }
  Zonotope negated() const;

  /// Z + t (center shift only).
  Zonotope translated(const Vector& shift) const;

  /// Maps coefficient vector a in [-1,1]^gamma to c + G a.
  Vector point_at(const Vector& coefficients) const;

  friend bool operator==(const Zonotope& a, const Zonotope& b);

 private:
  Vector center_;
  Matrix generators_;
};

/**
 * Matrix zonotope with a rows x cols center. Generators are stored stacked
 * vertically in one (gamma*rows) x cols matrix so products with vectors and
 * generator matrices reduce to single dense multiplications.
 */
class MatrixZonotope {
 public:
  MatrixZonotope() = default;
  MatrixZonotope(Matrix center, std::span<const Matrix> generators);

  /// Builds from a pre-stacked generator block (gamma*rows x cols).
  static MatrixZonotope from_stacked(Matrix center, Matrix stacked_generators);

  /// Point matrix zonotope {M}.
  static MatrixZonotope point(Matrix center);

  Eigen::Index rows() const { return center_.rows(); }
  Eigen::Index cols() const { return center_.cols(); }
  Eigen::Index num_generators() const { return num_generators_; }
  const Matrix& center() const { return center_; }
  const Matrix& stacked_generators() const { return stacked_; }

  Matrix generator(Eigen::Index i) const { return stacked_.middleRows(i * rows(), rows()); }

  /// Keeps columns [first, first+count) of the center and of every generator.
  MatrixZonotope column_block(Eigen::Index first, Eigen::Index count) const;

  /// { M R | M in this } for a fixed right factor R (exact).
  MatrixZonotope right_multiply(const Matrix& right) const;

  /// { -M | M in this }
  MatrixZonotope negated() const;

  /// { M + S | M in this } for a fixed matrix S.
  MatrixZonotope translated(const Matrix& shift) const;

  /// Each generator flattened column-major into one column of a (rows*cols) x gamma matrix.
  Matrix vectorized_generators() const;

 private:
  Matrix center_;
  Matrix stacked_;
  Eigen::Index num_generators_ = 0;
};

struct IntervalBox {
  Vector lower;
  Vector upper;

  Vector width() const { return upper - lower; }
  bool contains(const IntervalBox& inner, double tol = 0.0) const;
};

Zonotope linear_map(const Matrix& map, const Zonotope& z);
Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b);
Zonotope cartesian_product(const Zonotope& a, const Zonotope& b);

/// All n x T matrices whose columns are independently members of z.
MatrixZonotope self_concatenate(const Zonotope& z, int copies);

/**
 * Outer approximation of { M x | M in m, x in z }.
 *
 * Generator layout: [C G_z | G_1 c_z ... G_k c_z | G_i g_j for i outer, j inner].
 * Zero-generator inputs reduce to a plain linear map.
 */
Zonotope mz_zono_mul(const MatrixZonotope& m, const Zonotope& z);

IntervalBox interval_hull(const Zonotope& z);

/// Girard box reduction to at most order*dim generators. Result contains z.
Zonotope reduce_order(const Zonotope& z, int order);

/// h_Z(d) = d'c + sum_i |d'g_i|.
double support_function(const Zonotope& z, const Vector& direction);

/// Exact membership test by linear feasibility, with 1e-9 slack on the coefficient bound.
bool contains_point(const Zonotope& z, const Vector& x);

inline constexpr double kContainmentTolerance = 1e-9;

/// Deterministic direction set: +-e_i followed by normalized Halton points; count >= 2*dim.
std::vector<Vector> direction_set(Eigen::Index dim, int count);

/// max_d |h_a(d) - h_b(d)| over direction_set(dim, n_dirs). Lower bound on the Hausdorff distance.
double hausdorff_estimate(const Zonotope& a, const Zonotope& b, int n_dirs);

/// Ball of radius r in the infinity norm: <0, r I>.
Zonotope scaled_identity(Eigen::Index dim, double radius);

}  // namespace ira::setcalc
