#include "lbld/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lbld::geo {

namespace {

constexpr double kUnitNormTol = 1e-9;
constexpr std::uint64_t kRejectionWindow = 1'000'000;

double clamp01(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

// ---- quaternion helpers (coords are (w, x, y, z)) ----

Eigen::Vector4d qmul(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  return Eigen::Vector4d(
      a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
      a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
      a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
      a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

Eigen::Vector4d qconj(const Eigen::Vector4d& a) {
  return Eigen::Vector4d(a[0], -a[1], -a[2], -a[3]);
}

// exp of the axis-angle rate w: rotation by |w| about w/|w| as a unit quaternion.
Eigen::Vector4d quat_exp(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  Eigen::Vector4d q;
  if (angle < 1e-14) {
    q << 1.0, 0.5 * w[0], 0.5 * w[1], 0.5 * w[2];
    q.normalize();
    return q;
  }
  const double half = 0.5 * angle;
  const double s = std::sin(half) / angle;
  q << std::cos(half), s * w[0], s * w[1], s * w[2];
  return q;
}

Eigen::Vector3d quat_log(Eigen::Vector4d q) {
  if (q[0] < 0.0) q = -q;
  const double vnorm = q.tail<3>().norm();
  if (vnorm < 1e-14) return Eigen::Vector3d::Zero();
  const double angle = 2.0 * std::atan2(vnorm, q[0]);
  return (angle / vnorm) * q.tail<3>();
}

// ---- product slicing ----

int factor_coord_offset(const Manifold& m, int i) {
  int off = 0;
  for (int k = 0; k < i; ++k) off += m.factors()[k].coord_dim();
  return off;
}

int factor_tangent_offset(const Manifold& m, int i) {
  int off = 0;
  for (int k = 0; k < i; ++k) off += m.factors()[k].tangent_dim();
  return off;
}

Point factor_point(const Manifold& m, int i, const Point& p) {
  return Point{p.coords.segment(factor_coord_offset(m, i), m.factors()[i].coord_dim())};
}

double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

Eigen::VectorXd gaussian_vector(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

// Sphere point from a base x, polar angle theta away from x, azimuth phi in
// the tangent plane spanned by (e1, e2).
Eigen::Vector3d sphere_cap_point(const Eigen::Vector3d& x, const Eigen::Vector3d& e1,
                                 const Eigen::Vector3d& e2, double cos_theta, double phi) {
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  Eigen::Vector3d y =
      cos_theta * x + sin_theta * (std::cos(phi) * e1 + std::sin(phi) * e2);
  y.normalize();
  return y;
}

bool all_one_dimensional(const Manifold& m) {
  for (const auto& f : m.factors()) {
    if (f.kind() != Manifold::Kind::Circle && f.kind() != Manifold::Kind::Interval) return false;
  }
  return true;
}

[[noreturn]] void bad_point(const char* what) { throw std::domain_error(what); }

}  // namespace

// ---- Manifold ----

Manifold Manifold::circle(double circumference) {
  if (!(circumference > 0.0)) throw std::invalid_argument("circle: circumference must be positive");
  Manifold m;
  m.kind_ = Kind::Circle;
  m.a_ = circumference;
  return m;
}

Manifold Manifold::interval(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("interval: requires lo < hi");
  Manifold m;
  m.kind_ = Kind::Interval;
  m.a_ = lo;
  m.b_ = hi;
  return m;
}

Manifold Manifold::product(std::vector<Manifold> factors) {
  if (factors.empty()) throw std::invalid_argument("product: needs at least one factor");
  Manifold m;
  m.kind_ = Kind::Product;
  m.factors_ = std::move(factors);
  return m;
}

Manifold Manifold::sphere2() {
  Manifold m;
  m.kind_ = Kind::Sphere2;
  return m;
}

Manifold Manifold::hemisphere2() {
  Manifold m;
  m.kind_ = Kind::Hemisphere2;
  return m;
}

Manifold Manifold::so3() {
  Manifold m;
  m.kind_ = Kind::SO3;
  return m;
}

int Manifold::intrinsic_dim() const {
  switch (kind_) {
    case Kind::Circle:
    case Kind::Interval:
      return 1;
    case Kind::Sphere2:
    case Kind::Hemisphere2:
      return 2;
    case Kind::SO3:
      return 3;
    case Kind::Product: {
      int m = 0;
      for (const auto& f : factors_) m += f.intrinsic_dim();
      return m;
    }
  }
  return 0;
}

int Manifold::coord_dim() const {
  switch (kind_) {
    case Kind::Circle:
    case Kind::Interval:
      return 1;
    case Kind::Sphere2:
    case Kind::Hemisphere2:
      return 3;
    case Kind::SO3:
      return 4;
    case Kind::Product: {
      int n = 0;
      for (const auto& f : factors_) n += f.coord_dim();
      return n;
    }
  }
  return 0;
}

int Manifold::tangent_dim() const {
  switch (kind_) {
    case Kind::Circle:
    case Kind::Interval:
      return 1;
    case Kind::Sphere2:
    case Kind::Hemisphere2:
      return 3;
    case Kind::SO3:
      return 3;
    case Kind::Product: {
      int n = 0;
      for (const auto& f : factors_) n += f.tangent_dim();
      return n;
    }
  }
  return 0;
}

double Manifold::uniqueness_bound() const {
  switch (kind_) {
    case Kind::Circle:
      return 0.5 * a_;
    case Kind::Interval:
      return std::numeric_limits<double>::infinity();
    case Kind::Sphere2:
    case Kind::Hemisphere2:
      // The closed upper hemisphere is geodesically convex below distance pi:
      // the height of a great-circle arc is a sinusoid whose zeros are pi
      // apart, so an arc shorter than pi with nonnegative endpoints stays
      // nonnegative.
      return kPi;
    case Kind::SO3:
      return 0.5 * kPi;
    case Kind::Product: {
      double b = std::numeric_limits<double>::infinity();
      for (const auto& f : factors_) b = std::min(b, f.uniqueness_bound());
      return b;
    }
  }
  return 0.0;
}

// ---- validation ----

void check_point(const Manifold& m, const Point& p) {
  if (p.coords.size() != m.coord_dim())
    throw std::invalid_argument("point has wrong coordinate length for manifold");
  switch (m.kind()) {
    case Manifold::Kind::Circle:
      if (!(p.coords[0] >= 0.0) || !(p.coords[0] < m.circumference()))
        bad_point("circle coordinate outside [0, circumference)");
      break;
    case Manifold::Kind::Interval:
      if (!(p.coords[0] >= m.lo()) || !(p.coords[0] <= m.hi()))
        bad_point("interval coordinate outside [lo, hi]");
      break;
    case Manifold::Kind::Sphere2:
    case Manifold::Kind::Hemisphere2:
      if (std::abs(p.coords.norm() - 1.0) > kUnitNormTol) bad_point("sphere point not unit norm");
      if (m.kind() == Manifold::Kind::Hemisphere2 && p.coords[2] < 0.0)
        bad_point("hemisphere point below the equator");
      break;
    case Manifold::Kind::SO3:
      if (std::abs(p.coords.norm() - 1.0) > kUnitNormTol) bad_point("quaternion not unit norm");
      break;
    case Manifold::Kind::Product: {
      for (int i = 0; i < static_cast<int>(m.factors().size()); ++i)
        check_point(m.factors()[i], factor_point(m, i, p));
      break;
    }
  }
}

double wrap_angle(double a, double period) {
  double r = a - period * std::floor(a / period);
  if (r >= period) r -= period;
  if (r < 0.0) r += period;
  return r;
}

// ---- distance ----

double distance(const Manifold& m, const Point& x, const Point& y) {
  if (x.coords.size() != m.coord_dim() || y.coords.size() != m.coord_dim())
    throw std::invalid_argument("distance: point/manifold mismatch");
  switch (m.kind()) {
    case Manifold::Kind::Circle: {
      const double c = m.circumference();
      const double d = std::abs(x.coords[0] - y.coords[0]);
      return std::min(d, c - d);
    }
    case Manifold::Kind::Interval:
      return std::abs(x.coords[0] - y.coords[0]);
    case Manifold::Kind::Sphere2:
    case Manifold::Kind::Hemisphere2: {
      const double dot = clamp01(x.coords.dot(y.coords), -1.0, 1.0);
      return std::acos(dot);
    }
    case Manifold::Kind::SO3: {
      const double dot = clamp01(std::abs(x.coords.dot(y.coords)), 0.0, 1.0);
      return std::acos(dot);
    }
    case Manifold::Kind::Product: {
      double s = 0.0;
      for (int i = 0; i < static_cast<int>(m.factors().size()); ++i) {
        const double di = distance(m.factors()[i], factor_point(m, i, x), factor_point(m, i, y));
        s += di * di;
      }
      return std::sqrt(s);
    }
  }
  return 0.0;
}

// ---- average ----

namespace {

// Signed shortest angular offset from x to y on a circle of circumference c,
// in (-c/2, c/2]. Exactly antisymmetric under swapping x and y except at the
// cut c/2, which callers treat as ambiguous.
double circle_offset(double x, double y, double c) {
  double d = wrap_angle(y - x, c);
  if (d > 0.5 * c) d -= c;
  return d;
}

Point sphere_average(const Manifold& m, const Point& x, const Point& y, double t) {
  const double theta = distance(m, x, y);
  if (theta >= m.uniqueness_bound())
    throw AmbiguousGeodesicError("sphere average: endpoints at or beyond antipodal");
  if (t == 0.0) return x;
  if (t == 1.0) return y;
  if (theta < 1e-15) return x;
  const double s = std::sin(theta);
  Eigen::VectorXd v =
      (std::sin((1.0 - t) * theta) * x.coords + std::sin(t * theta) * y.coords) / s;
  v.normalize();
  if (m.kind() == Manifold::Kind::Hemisphere2 && v[2] < 0.0) {
    if (v[2] < -1e-12) bad_point("hemisphere average left the hemisphere");
    v[2] = 0.0;
    v.normalize();
  }
  return Point{v};
}

Point so3_average(const Manifold& m, const Point& x, const Point& y, double t) {
  const double d = distance(m, x, y);
  if (d >= m.uniqueness_bound())
    throw AmbiguousGeodesicError("rotation average: endpoints at or beyond the cut locus");
  if (t == 0.0) return x;
  if (t == 1.0) return y;
  Eigen::Vector4d a = x.coords, b = y.coords;
  if (a.dot(b) < 0.0) b = -b;  // sign alignment before interpolation
  const double theta = std::acos(clamp01(a.dot(b), -1.0, 1.0));
  Eigen::Vector4d q;
  if (theta < 1e-15) {
    q = a;
  } else {
    q = (std::sin((1.0 - t) * theta) * a + std::sin(t * theta) * b) / std::sin(theta);
  }
  q.normalize();
  return Point{q};
}

}  // namespace

Point average(const Manifold& m, const Point& x, const Point& y, double t) {
  if (x.coords.size() != m.coord_dim() || y.coords.size() != m.coord_dim())
    throw std::invalid_argument("average: point/manifold mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("average: t outside [0,1]");
  switch (m.kind()) {
    case Manifold::Kind::Circle: {
      const double c = m.circumference();
      const double d = distance(m, x, y);
      if (d >= m.uniqueness_bound())
        throw AmbiguousGeodesicError("circle average: antipodal endpoints");
      if (t == 0.0) return x;
      if (t == 1.0) return y;
      const double off = circle_offset(x.coords[0], y.coords[0], c);
      return Point{Eigen::VectorXd::Constant(1, wrap_angle(x.coords[0] + t * off, c))};
    }
    case Manifold::Kind::Interval: {
      const double v = (1.0 - t) * x.coords[0] + t * y.coords[0];
      return Point{Eigen::VectorXd::Constant(1, v)};
    }
    case Manifold::Kind::Sphere2:
    case Manifold::Kind::Hemisphere2:
      return sphere_average(m, x, y, t);
    case Manifold::Kind::SO3:
      return so3_average(m, x, y, t);
    case Manifold::Kind::Product: {
      Eigen::VectorXd coords(m.coord_dim());
      for (int i = 0; i < static_cast<int>(m.factors().size()); ++i) {
        const Point avi =
            average(m.factors()[i], factor_point(m, i, x), factor_point(m, i, y), t);
        coords.segment(factor_coord_offset(m, i), m.factors()[i].coord_dim()) = avi.coords;
      }
      return Point{coords};
    }
  }
  return x;
}

// ---- sampling ----

Point sample_uniform(const Manifold& m, Rng& rng) {
  switch (m.kind()) {
    case Manifold::Kind::Circle:
      return Point{Eigen::VectorXd::Constant(1, uniform01(rng) * m.circumference())};
    case Manifold::Kind::Interval:
      return Point{Eigen::VectorXd::Constant(1, m.lo() + uniform01(rng) * (m.hi() - m.lo()))};
    case Manifold::Kind::Sphere2: {
      Eigen::VectorXd v;
      do {
        v = gaussian_vector(3, rng);
      } while (v.norm() < 1e-12);
      v.normalize();
      return Point{v};
    }
    case Manifold::Kind::Hemisphere2: {
      // Rejection of the lower half keeps the draw uniform on the hemisphere.
      for (;;) {
        Eigen::VectorXd v = gaussian_vector(3, rng);
        if (v.norm() < 1e-12) continue;
        v.normalize();
        if (v[2] >= 0.0) return Point{v};
      }
    }
    case Manifold::Kind::SO3: {
      Eigen::VectorXd v;
      do {
        v = gaussian_vector(4, rng);
      } while (v.norm() < 1e-12);
      v.normalize();
      return Point{v};
    }
    case Manifold::Kind::Product: {
      Eigen::VectorXd coords(m.coord_dim());
      for (int i = 0; i < static_cast<int>(m.factors().size()); ++i)
        coords.segment(factor_coord_offset(m, i), m.factors()[i].coord_dim()) =
            sample_uniform(m.factors()[i], rng).coords;
      return Point{coords};
    }
  }
  return Point{};
}

std::pair<Point, Point> sample_pair(const Manifold& m, double eps, Rng& rng, PairStats* stats) {
  if (!(eps > 0.0)) throw std::invalid_argument("sample_pair: eps must be positive");
  std::uint64_t misses = 0;
  for (;;) {
    Point x = sample_uniform(m, rng);
    Point y = sample_uniform(m, rng);
    if (stats) ++stats->attempts;
    if (distance(m, x, y) <= eps) {
      if (stats) ++stats->accepted;
      return {std::move(x), std::move(y)};
    }
    if (++misses >= kRejectionWindow)
      throw PathologicalEpsilonError("sample_pair: acceptance rate below 1e-6");
  }
}

std::pair<Point, Point> sample_pair_factor_local(const Manifold& m, double eps, Rng& rng,
                                                 int factor, PairStats* stats) {
  if (m.kind() != Manifold::Kind::Product)
    throw std::invalid_argument("sample_pair_factor_local: product manifold required");
  if (factor < 0 || factor >= static_cast<int>(m.factors().size()))
    throw std::invalid_argument("sample_pair_factor_local: factor index out of range");
  if (!(eps > 0.0)) throw std::invalid_argument("sample_pair_factor_local: eps must be positive");
  const Manifold& mf = m.factors()[factor];
  const int off = factor_coord_offset(m, factor);
  std::uint64_t misses = 0;
  for (;;) {
    Point x = sample_uniform(m, rng);
    Point y = sample_uniform(m, rng);
    if (stats) ++stats->attempts;
    const Point fx{x.coords.segment(off, mf.coord_dim())};
    const Point fy{y.coords.segment(off, mf.coord_dim())};
    if (distance(mf, fx, fy) <= eps) {
      if (stats) ++stats->accepted;
      return {std::move(x), std::move(y)};
    }
    if (++misses >= kRejectionWindow)
      throw PathologicalEpsilonError("sample_pair_factor_local: acceptance rate below 1e-6");
  }
}

Point sample_in_ball(const Manifold& m, const Point& x, double eps, Rng& rng) {
  if (!(eps > 0.0)) throw std::invalid_argument("sample_in_ball: eps must be positive");
  switch (m.kind()) {
    case Manifold::Kind::Circle: {
      const double r = std::min(eps, 0.5 * m.circumference());
      const double off = (2.0 * uniform01(rng) - 1.0) * r;
      return Point{Eigen::VectorXd::Constant(1, wrap_angle(x.coords[0] + off, m.circumference()))};
    }
    case Manifold::Kind::Interval: {
      const double lo = std::max(m.lo(), x.coords[0] - eps);
      const double hi = std::min(m.hi(), x.coords[0] + eps);
      return Point{Eigen::VectorXd::Constant(1, lo + uniform01(rng) * (hi - lo))};
    }
    case Manifold::Kind::Sphere2:
    case Manifold::Kind::Hemisphere2: {
      // Uniform on the geodesic cap: cos(theta) uniform in [cos eps, 1].
      const Eigen::MatrixXd basis = tangent_basis(m, x);
      const double cmin = std::cos(std::min(eps, kPi));
      for (;;) {
        const double ct = cmin + uniform01(rng) * (1.0 - cmin);
        const double phi = uniform01(rng) * 2.0 * kPi;
        Eigen::Vector3d y = sphere_cap_point(x.coords, basis.col(0), basis.col(1), ct, phi);
        if (m.kind() == Manifold::Kind::Hemisphere2 && y[2] < 0.0) continue;
        return Point{y};
      }
    }
    case Manifold::Kind::Product: {
      if (all_one_dimensional(m)) {
        // Flat chart: the geodesic ball is the Euclidean ball of the offsets.
        const int n = static_cast<int>(m.factors().size());
        for (;;) {
          Eigen::VectorXd dir;
          do {
            dir = gaussian_vector(n, rng);
          } while (dir.norm() < 1e-12);
          dir.normalize();
          const double r = eps * std::pow(uniform01(rng), 1.0 / n);
          Eigen::VectorXd coords(m.coord_dim());
          bool ok = true;
          for (int i = 0; i < n; ++i) {
            const Manifold& f = m.factors()[i];
            const double xi = x.coords[factor_coord_offset(m, i)];
            const double off = r * dir[i];
            if (f.kind() == Manifold::Kind::Circle) {
              if (std::abs(off) > 0.5 * f.circumference()) {
                ok = false;
                break;
              }
              coords[factor_coord_offset(m, i)] = wrap_angle(xi + off, f.circumference());
            } else {
              const double v = xi + off;
              if (v < f.lo() || v > f.hi()) {
                ok = false;
                break;
              }
              coords[factor_coord_offset(m, i)] = v;
            }
          }
          if (ok) return Point{coords};
        }
      }
      [[fallthrough]];
    }
    case Manifold::Kind::SO3: {
      // Generic rejection from the uniform measure.
      std::uint64_t misses = 0;
      for (;;) {
        Point y = sample_uniform(m, rng);
        if (distance(m, x, y) <= eps) return y;
        if (++misses >= kRejectionWindow)
          throw PathologicalEpsilonError("sample_in_ball: acceptance rate below 1e-6");
      }
    }
  }
  return x;
}

// ---- exp / log / tangent structure ----

double metric_norm(const Manifold& m, const TangentVector& v) {
  if (v.components.size() != m.tangent_dim())
    throw std::invalid_argument("metric_norm: tangent/manifold mismatch");
  switch (m.kind()) {
    case Manifold::Kind::Circle:
    case Manifold::Kind::Interval:
    case Manifold::Kind::Sphere2:
    case Manifold::Kind::Hemisphere2:
      return v.components.norm();
    case Manifold::Kind::SO3:
      // Axis-angle rate w rotates by |w|; the arccos quaternion distance
      // advances by half that.
      return 0.5 * v.components.norm();
    case Manifold::Kind::Product: {
      double s = 0.0;
      for (int i = 0; i < static_cast<int>(m.factors().size()); ++i) {
        const Manifold& f = m.factors()[i];
        TangentVector vi{factor_point(m, i, v.base),
                         v.components.segment(factor_tangent_offset(m, i), f.tangent_dim())};
        const double ni = metric_norm(f, vi);
        s += ni * ni;
      }
      return std::sqrt(s);
    }
  }
  return 0.0;
}

Point exp_map(const Manifold& m, const TangentVector& v) {
  if (v.components.size() != m.tangent_dim() || v.base.coords.size() != m.coord_dim())
    throw std::invalid_argument("exp_map: tangent/manifold mismatch");
  const double n = metric_norm(m, v);
  if (n >= m.uniqueness_bound()) throw std::domain_error("exp_map: |v| reaches the uniqueness bound");
  switch (m.kind()) {
    case Manifold::Kind::Circle:
      return Point{Eigen::VectorXd::Constant(
          1, wrap_angle(v.base.coords[0] + v.components[0], m.circumference()))};
    case Manifold::Kind::Interval: {
      const double y = v.base.coords[0] + v.components[0];
      if (y < m.lo() || y > m.hi()) throw std::domain_error("exp_map: endpoint outside interval");
      return Point{Eigen::VectorXd::Constant(1, y)};
    }
    case Manifold::Kind::Sphere2:
    case Manifold::Kind::Hemisphere2: {
      if (n < 1e-15) return v.base;
      Eigen::Vector3d dir = v.components / v.components.norm();
      Eigen::Vector3d y = std::cos(n) * v.base.coords + std::sin(n) * dir;
      y.normalize();
      if (m.kind() == Manifold::Kind::Hemisphere2 && y[2] < 0.0) {
        if (y[2] < -1e-12) throw std::domain_error("exp_map: endpoint left the hemisphere");
        y[2] = 0.0;
        y.normalize();
      }
      return Point{y};
    }
    case Manifold::Kind::SO3: {
      const Eigen::Vector4d q = v.base.coords;
      return Point{qmul(q, quat_exp(v.components))};
    }
    case Manifold::Kind::Product: {
      Eigen::VectorXd coords(m.coord_dim());
      for (int i = 0; i < static_cast<int>(m.factors().size()); ++i) {
        const Manifold& f = m.factors()[i];
        TangentVector vi{factor_point(m, i, v.base),
                         v.components.segment(factor_tangent_offset(m, i), f.tangent_dim())};
        coords.segment(factor_coord_offset(m, i), f.coord_dim()) = exp_map(f, vi).coords;
      }
      return Point{coords};
    }
  }
  return v.base;
}

TangentVector log_map(const Manifold& m, const Point& x, const Point& y) {
  if (x.coords.size() != m.coord_dim() || y.coords.size() != m.coord_dim())
    throw std::invalid_argument("log_map: point/manifold mismatch");
  const double d = distance(m, x, y);
  if (d >= m.uniqueness_bound()) throw std::domain_error("log_map: beyond the uniqueness bound");
  switch (m.kind()) {
    case Manifold::Kind::Circle:
      return TangentVector{
          x, Eigen::VectorXd::Constant(1, circle_offset(x.coords[0], y.coords[0], m.circumference()))};
    case Manifold::Kind::Interval:
      return TangentVector{x, Eigen::VectorXd::Constant(1, y.coords[0] - x.coords[0])};
    case Manifold::Kind::Sphere2:
    case Manifold::Kind::Hemisphere2: {
      if (d < 1e-15) return TangentVector{x, Eigen::VectorXd::Zero(3)};
      Eigen::Vector3d proj = y.coords - std::cos(d) * x.coords;
      const double pn = proj.norm();
      if (pn < 1e-15) return TangentVector{x, Eigen::VectorXd::Zero(3)};
      return TangentVector{x, (d / pn) * proj};
    }
    case Manifold::Kind::SO3: {
      const Eigen::Vector4d r = qmul(qconj(x.coords), y.coords);
      return TangentVector{x, quat_log(r)};
    }
    case Manifold::Kind::Product: {
      Eigen::VectorXd comp(m.tangent_dim());
      for (int i = 0; i < static_cast<int>(m.factors().size()); ++i) {
        const Manifold& f = m.factors()[i];
        comp.segment(factor_tangent_offset(m, i), f.tangent_dim()) =
            log_map(f, factor_point(m, i, x), factor_point(m, i, y)).components;
      }
      return TangentVector{x, comp};
    }
  }
  return TangentVector{x, Eigen::VectorXd::Zero(m.tangent_dim())};
}

Eigen::MatrixXd tangent_basis(const Manifold& m, const Point& x) {
  switch (m.kind()) {
    case Manifold::Kind::Circle:
    case Manifold::Kind::Interval:
      return Eigen::MatrixXd::Ones(1, 1);
    case Manifold::Kind::Sphere2:
    case Manifold::Kind::Hemisphere2: {
      const Eigen::Vector3d p = x.coords;
      Eigen::Vector3d ref = std::abs(p[0]) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
      Eigen::Vector3d e1 = (ref - ref.dot(p) * p).normalized();
      Eigen::Vector3d e2 = p.cross(e1).normalized();
      Eigen::MatrixXd basis(3, 2);
      basis.col(0) = e1;
      basis.col(1) = e2;
      return basis;
    }
    case Manifold::Kind::SO3:
      // Axis-angle rates of Euclidean norm 2 have unit metric norm.
      return 2.0 * Eigen::MatrixXd::Identity(3, 3);
    case Manifold::Kind::Product: {
      Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m.tangent_dim(), m.intrinsic_dim());
      int col = 0;
      for (int i = 0; i < static_cast<int>(m.factors().size()); ++i) {
        const Manifold& f = m.factors()[i];
        const Eigen::MatrixXd bi = tangent_basis(f, factor_point(m, i, x));
        basis.block(factor_tangent_offset(m, i), col, f.tangent_dim(), f.intrinsic_dim()) = bi;
        col += f.intrinsic_dim();
      }
      return basis;
    }
  }
  return Eigen::MatrixXd();
}

}  // namespace lbld::geo
