#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "lbld/common.hpp"

namespace lbld::geo {

// Supported Riemannian manifolds with closed-form distance, geodesic average,
// exp/log, and uniform sampling. Products are built recursively from factors.
class Manifold {
 public:
  enum class Kind { Circle, Interval, Product, Sphere2, Hemisphere2, SO3 };

  // Default-constructs the unit interval; factories build everything else.
  Manifold() : kind_(Kind::Interval), a_(0.0), b_(1.0) {}

  static Manifold circle(double circumference);
  static Manifold interval(double lo, double hi);
  static Manifold product(std::vector<Manifold> factors);
  static Manifold sphere2();
  static Manifold hemisphere2();
  static Manifold so3();

  Kind kind() const { return kind_; }
  double circumference() const { return a_; }
  double lo() const { return a_; }
  double hi() const { return b_; }
  const std::vector<Manifold>& factors() const { return factors_; }

  // Intrinsic dimension m.
  int intrinsic_dim() const;
  // Length of the coordinate vector of a point (3 for spheres, 4 for
  // rotations, 1 per one-dimensional factor).
  int coord_dim() const;
  // Length of the tangent component vector (ambient 3-vector for spheres,
  // axis-angle 3-vector for rotations).
  int tangent_dim() const;
  // Largest distance below which the minimizing geodesic (and hence the
  // weighted average) is unique.
  double uniqueness_bound() const;

 private:
  Kind kind_ = Kind::Interval;
  double a_ = 0.0, b_ = 0.0;
  std::vector<Manifold> factors_;
};

// A point of a manifold, stored in the chart described in Manifold::coord_dim.
// Angles live in [0, circumference); sphere points are unit 3-vectors;
// rotations are unit quaternions (w, x, y, z).
struct Point {
  Eigen::VectorXd coords;
};

// Tangent vector at a base point; components as in Manifold::tangent_dim.
struct TangentVector {
  Point base;
  Eigen::VectorXd components;
};

// Collected by the rejection samplers so callers can monitor acceptance.
struct PairStats {
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate() const {
    return attempts == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempts);
  }
};

// Throws std::invalid_argument on shape mismatch, std::domain_error when the
// coordinates violate the manifold's invariants (1e-9 unit-norm tolerance).
void check_point(const Manifold& m, const Point& p);

// Geodesic distance. Symmetric, nonnegative, zero iff the inputs are the same
// manifold point (antipodal quaternions are the same rotation).
double distance(const Manifold& m, const Point& x, const Point& y);

// Point at parameter t in [0,1] along the minimizing geodesic from x to y.
// Throws AmbiguousGeodesicError at or beyond the uniqueness bound.
Point average(const Manifold& m, const Point& x, const Point& y, double t);

// Uniform draw with respect to the Riemannian volume measure.
Point sample_uniform(const Manifold& m, Rng& rng);

// Uniform draw from {(x,y) : d(x,y) <= eps} by rejection from the product
// measure. Throws PathologicalEpsilonError when a full trial window of
// attempts sees no acceptance.
std::pair<Point, Point> sample_pair(const Manifold& m, double eps, Rng& rng,
                                    PairStats* stats = nullptr);

// Variant for product manifolds where the locality constraint applies to a
// single factor only (the orientation circle of the Gaussian dataset); all
// other factors are drawn independently uniform.
std::pair<Point, Point> sample_pair_factor_local(const Manifold& m, double eps, Rng& rng,
                                                 int factor = 0, PairStats* stats = nullptr);

// Uniform draw from the geodesic eps-ball around x (clipped at boundaries).
// Closed-form samplers exist for circles, intervals, spheres, and products of
// one-dimensional factors; other kinds fall back to rejection.
Point sample_in_ball(const Manifold& m, const Point& x, double eps, Rng& rng);

// Riemannian exponential map at v.base. Throws std::domain_error when the
// metric norm of v reaches the uniqueness bound or the endpoint leaves the
// manifold (interval ends, hemisphere rim).
Point exp_map(const Manifold& m, const TangentVector& v);

// Inverse of exp_map; requires d(x,y) below the uniqueness bound.
TangentVector log_map(const Manifold& m, const Point& x, const Point& y);

// Metric norm |v|_g. For rotations this is half the Euclidean norm of the
// axis-angle components, matching the arccos quaternion distance.
double metric_norm(const Manifold& m, const TangentVector& v);

// Orthonormal basis of the tangent space at x, one column per intrinsic
// dimension, expressed in tangent components.
Eigen::MatrixXd tangent_basis(const Manifold& m, const Point& x);

// Wraps a real number into [0, period).
double wrap_angle(double a, double period);

}  // namespace lbld::geo
