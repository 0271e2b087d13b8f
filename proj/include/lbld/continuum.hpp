#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "lbld/common.hpp"
#include "lbld/geometry.hpp"

namespace lbld::continuum {

// Closed-form embedding of a manifold into R^l with exact directional
// derivatives along geodesics: dgrad(x, v) = d/dt phi(exp_x(t v)) at 0 and
// dhess(x, v) = d^2/dt^2 phi(exp_x(t v)) at 0, for unit tangents v.
struct Embedding {
  std::string name;
  geo::Manifold domain;
  std::function<Eigen::VectorXd(const geo::Point&)> map;
  std::function<Eigen::VectorXd(const geo::Point&, const Eigen::VectorXd&)> dgrad;
  std::function<Eigen::VectorXd(const geo::Point&, const Eigen::VectorXd&)> dhess;
  // Integrand independent of the base point; the manifold average collapses
  // to one evaluation.
  bool homogeneous = false;
  geo::Point base_point;
};

// [0,1]^2 mapped identically into R^2: flat, distortion-free.
Embedding flat_square_identity();
// Unit-circumference-2pi circle mapped onto the radius-rho circle in R^2.
Embedding circle_embedding(double rho);
// Unit sphere mapped identically into R^3.
Embedding sphere_identity();
// S^1 x [0,1] mapped onto the unit cylinder in R^3.
Embedding cylinder_embedding();

// Post-composition with x -> rotation * x + shift (a rigid motion of R^l).
Embedding with_rigid_motion(const Embedding& emb, const Eigen::MatrixXd& rotation,
                            const Eigen::VectorXd& shift);

// Quadrature nodes on the unit sphere S^{m-1} with weights summing to one.
// m = 1: the two endpoints; m = 2: equispaced angles; m = 3: Gauss-Legendre
// in the polar cosine times a trapezoid in azimuth.
struct QuadratureRule {
  int dim = 2;
  Eigen::MatrixXd nodes;    // one row per node, m columns
  Eigen::VectorXd weights;  // sums to 1
};

QuadratureRule make_rule(int dim, int size = 0);

// Singular-value penalty: the quadrature average of gamma(|B v|) over the
// unit sphere of R^m. Nonnegative; zero iff all singular values are one.
// Throws SingularGammaError when a node sees |B v| < 1e-12.
double Gamma(const Eigen::MatrixXd& b, const QuadratureRule& rule);

struct McResult {
  double value = 0.0;
  double std_err = 0.0;
  std::uint64_t samples = 0;
};

// Monte-Carlo estimate of the pair energy: x uniform on the manifold, y
// uniform in the geodesic eps-ball around x, averaging
// gamma(d1) + lambda |d2|^2. Shards deterministically across workers.
McResult mc_energy(const Embedding& emb, double eps, double lambda, std::uint64_t samples,
                   std::uint64_t seed, int workers = 1);

// Deterministic evaluation of the vanishing-radius limit: the double average
// over the manifold and the unit tangent sphere of
// gamma(|dgrad|) + lambda |dhess|^2. Homogeneous embeddings use their base
// point; others average over `manifold_samples` seeded uniform draws.
double limit_energy(const Embedding& emb, const QuadratureRule& rule, double lambda,
                    std::uint64_t manifold_samples = 100'000, std::uint64_t seed = 12345);

enum class FitStatus {
  Ok,            // slope fitted from significant differences
  ExactMatch,    // all |mc - limit| at machine precision; nothing to fit
  Inconclusive,  // Monte-Carlo noise drowns the differences
};

struct ConsistencyRow {
  double epsilon = 0.0;
  double mc_value = 0.0;
  double std_err = 0.0;
  double limit_value = 0.0;
  double abs_diff = 0.0;
};

struct ConsistencyReport {
  std::string embedding;
  std::vector<ConsistencyRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  FitStatus status = FitStatus::Ok;
};

// Runs mc_energy for every radius with common random numbers (same seed),
// compares against limit_energy, and fits log|difference| against log eps by
// least squares.
ConsistencyReport consistency_rate(const Embedding& emb, const std::vector<double>& eps_list,
                                   std::uint64_t samples, double lambda, std::uint64_t seed,
                                   int workers = 1);

// CSV report: header, one row per radius, then a fitted-slope summary line.
void write_report(const ConsistencyReport& report, const std::string& path);

}  // namespace lbld::continuum
