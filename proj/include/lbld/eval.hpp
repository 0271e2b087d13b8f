#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "lbld/common.hpp"
#include "lbld/geometry.hpp"
#include "lbld/imaging.hpp"
#include "lbld/nn.hpp"

namespace lbld::eval {

// Principal axes of a latent code cloud, ordered by decreasing standard
// deviation.
struct PcaResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // columns, orthonormal
  Eigen::VectorXd stds;        // nonincreasing
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps, run until
// the off-diagonal Frobenius norm falls below tol * ||A||_F.
void jacobi_eigen_symmetric(const Eigen::MatrixXd& a, Eigen::VectorXd& eigenvalues,
                            Eigen::MatrixXd& eigenvectors, double tol = 1e-12);

// Sample covariance (1/(N-1)) diagonalized by Jacobi; needs >= 2 codes.
PcaResult pca(const Eigen::MatrixXd& codes);

// Number of principal directions with std >= tau * stds[0].
int dim_usage(const Eigen::VectorXd& stds, double tau = 0.05);

// Interpolation quality curves over a t grid: err_i compares the decoded
// linear interpolation of the endpoint codes against the rendered geodesic
// average; err_b is the plain reconstruction error of that average. err(t) is
// sqrt of the clamped mean of err_i^2 - err_b^2; the signed mean is kept too.
struct InterpCurve {
  Eigen::VectorXd t;
  Eigen::VectorXd err;
  Eigen::VectorXd signed_mean_sq;
  Eigen::VectorXd err_i_mean;
  Eigen::VectorXd err_b_mean;
};

InterpCurve interp_errors(const nn::Mlp& encoder, const nn::Mlp& decoder,
                          const img::RendererConfig& renderer, const geo::Manifold& manifold,
                          const std::vector<std::pair<geo::Point, geo::Point>>& pairs,
                          const Eigen::VectorXd& t_grid);

// Uniform t grid over [0,1] including both endpoints.
Eigen::VectorXd uniform_grid(int points);

// Projects centered codes onto three selected principal components and writes
// `id,c_a,c_b,c_c[,label...]` rows. Labels are optional per-code annotations
// (manifold coordinates, typically).
void export_projection(const Eigen::MatrixXd& codes, const PcaResult& pca,
                       const std::array<int, 3>& dims, const Eigen::MatrixXd& labels,
                       const std::string& path);

void write_pca_stds(const PcaResult& pca, const std::string& path);
void write_interp_curve(const InterpCurve& curve, const std::string& path);

}  // namespace lbld::eval
