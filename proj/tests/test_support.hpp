#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lbld/geometry.hpp"

namespace lbld::test {

// Equality of manifold points at tolerances below the resolution of the
// arccos-based distances (which only resolve ~1.5e-8 near zero). Spheres are
// compared chordally, rotations modulo quaternion sign, circles modulo wrap.
inline bool same_point(const lbld::geo::Manifold& m, const lbld::geo::Point& p,
                       const lbld::geo::Point& q, double tol) {
  using Kind = lbld::geo::Manifold::Kind;
  switch (m.kind()) {
    case Kind::Circle:
    case Kind::Interval:
      return lbld::geo::distance(m, p, q) <= tol;
    case Kind::Sphere2:
    case Kind::Hemisphere2:
      return (p.coords - q.coords).norm() <= tol;
    case Kind::SO3:
      return std::min((p.coords - q.coords).norm(), (p.coords + q.coords).norm()) <= tol;
    case Kind::Product: {
      int off = 0;
      for (const auto& f : m.factors()) {
        const lbld::geo::Point fp{p.coords.segment(off, f.coord_dim())};
        const lbld::geo::Point fq{q.coords.segment(off, f.coord_dim())};
        if (!same_point(f, fp, fq, tol)) return false;
        off += f.coord_dim();
      }
      return true;
    }
  }
  return false;
}

// Asymptotic Kolmogorov-Smirnov p-value for a sample against the uniform
// distribution on [lo, hi].
inline double ks_uniform_pvalue(std::vector<double> sample, double lo, double hi) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = (sample[i] - lo) / (hi - lo);
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::min(1.0, std::max(0.0, p));
}

// Central finite differences over every entry of every parameter matrix.
// `value` must recompute the scalar loss from the current parameter values.
template <class ValueFn>
double gradient_relative_error(std::vector<Eigen::MatrixXd*> params,
                               const std::vector<Eigen::MatrixXd>& grads, ValueFn value,
                               double step = 1e-5) {
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Eigen::MatrixXd& mat = *params[p];
    for (int i = 0; i < mat.rows(); ++i)
      for (int j = 0; j < mat.cols(); ++j) {
        const double keep = mat(i, j);
        mat(i, j) = keep + step;
        const double fp = value();
        mat(i, j) = keep - step;
        const double fm = value();
        mat(i, j) = keep;
        const double fd = (fp - fm) / (2.0 * step);
        const double diff = grads[p](i, j) - fd;
        num += diff * diff;
        den += fd * fd;
      }
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

// Kolmogorov-Smirnov p-value against an arbitrary CDF.
template <class Cdf>
double ks_pvalue(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double c = cdf(sample[i]);
    d = std::max(d, std::abs(c - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::min(1.0, std::max(0.0, p));
}

}  // namespace lbld::test
