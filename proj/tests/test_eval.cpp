#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lbld/eval.hpp"
#include "test_support.hpp"

using namespace lbld;
using namespace lbld::eval;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = normal(rng);
  return m;
}

nn::Mlp identity_net(int n) {
  nn::Mlp m;
  m.spec = nn::MlpSpec{{n, n}};
  m.weights = {Eigen::MatrixXd::Identity(n, n)};
  m.biases = {Eigen::MatrixXd::Zero(1, n)};
  return m;
}

}  // namespace

TEST_CASE("jacobi matches a library eigensolver") {
  Rng rng(3);
  for (int it = 0; it < 20; ++it) {
    const Eigen::MatrixXd m = random_matrix(6, 6, rng);
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::VectorXd evals;
    Eigen::MatrixXd evecs;
    jacobi_eigen_symmetric(sym, evals, evecs);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(sym);
    const Eigen::VectorXd ref_sorted = ref.eigenvalues().reverse();
    CHECK((evals - ref_sorted).cwiseAbs().maxCoeff() < 1e-10);

    // Orthonormal basis and exact reconstruction.
    CHECK((evecs.transpose() * evecs - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-10);
    const Eigen::MatrixXd rebuilt = evecs * evals.asDiagonal() * evecs.transpose();
    CHECK((rebuilt - sym).norm() < 1e-10);
  }
}

TEST_CASE("pca closed forms") {
  Rng rng(5);

  // Codes on a line segment: a single nonzero std.
  {
    const Eigen::VectorXd dir = Eigen::Vector4d(1, 2, -1, 0.5).normalized();
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd codes(200, 4);
    for (int i = 0; i < 200; ++i) codes.row(i) = (u(rng) * dir).transpose();
    const PcaResult p = pca(codes);
    CHECK(p.stds[0] > 0.1);
    for (int i = 1; i < 4; ++i) CHECK(p.stds[i] < 1e-9);
  }

  // Isotropic cloud: all stds within 10% of each other.
  {
    const Eigen::MatrixXd codes = random_matrix(10'000, 5, rng);
    const PcaResult p = pca(codes);
    CHECK(p.stds[0] / p.stds[4] < 1.1);
  }

  // Covariance rebuilt from components and stds matches the sample covariance.
  {
    const Eigen::MatrixXd codes = random_matrix(300, 4, rng);
    const PcaResult p = pca(codes);
    const Eigen::MatrixXd centered = codes.rowwise() - p.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / 299.0;
    const Eigen::MatrixXd rebuilt =
        p.components * p.stds.array().square().matrix().asDiagonal() * p.components.transpose();
    CHECK((rebuilt - cov).cwiseAbs().maxCoeff() < 1e-8);
    for (int i = 0; i + 1 < p.stds.size(); ++i) CHECK(p.stds[i] >= p.stds[i + 1]);
  }

  CHECK_THROWS_AS(pca(Eigen::MatrixXd::Zero(1, 3)), std::invalid_argument);
}

TEST_CASE("pca invariances") {
  Rng rng(7);
  const Eigen::MatrixXd codes = random_matrix(500, 4, rng);
  const PcaResult base = pca(codes);

  // Translation leaves the spectrum untouched.
  const Eigen::RowVectorXd shift = random_matrix(1, 4, rng);
  const PcaResult shifted = pca((codes.rowwise() + shift).eval());
  CHECK((shifted.stds - base.stds).cwiseAbs().maxCoeff() < 1e-9);

  // Rotation leaves the spectrum untouched.
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(4, 4, rng)).householderQ();
  const PcaResult rotated = pca(codes * q);
  CHECK((rotated.stds - base.stds).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("dim_usage thresholds") {
  Eigen::VectorXd a(3);
  a << 1, 0, 0;
  CHECK(dim_usage(a, 0.5) == 1);
  CHECK(dim_usage(a, 0.0001) == 1);

  Eigen::VectorXd b(3);
  b << 1, 0.5, 0.04;
  CHECK(dim_usage(b, 0.05) == 2);

  Eigen::VectorXd c = Eigen::VectorXd::Constant(6, 0.3);
  CHECK(dim_usage(c, 0.05) == 6);

  // Monotone nonincreasing in tau.
  Eigen::VectorXd d(5);
  d << 1, 0.7, 0.3, 0.08, 0.01;
  int prev = 6;
  for (double tau : {0.001, 0.01, 0.05, 0.2, 0.5, 0.9}) {
    const int k = dim_usage(d, tau);
    CHECK(k <= prev);
    prev = k;
  }
}

TEST_CASE("interp errors vanish for an identity autoencoder on the flat square") {
  const auto cfg = img::RendererConfig::defaults(img::Dataset::FlatSquare);
  const auto m = img::make_manifold(cfg);
  const nn::Mlp id = identity_net(2);

  Rng rng(9);
  std::vector<std::pair<geo::Point, geo::Point>> pairs;
  for (int i = 0; i < 32; ++i) pairs.push_back(geo::sample_pair(m, 0.25, rng));

  const InterpCurve curve = interp_errors(id, id, cfg, m, pairs, uniform_grid(11));
  // Endpoint coincidence is exact; interior points only see f32 pixel noise.
  CHECK(curve.err[0] == 0.0);
  CHECK(curve.err[10] == 0.0);
  CHECK(curve.signed_mean_sq[0] == 0.0);
  CHECK(curve.err.maxCoeff() < 1e-6);
  CHECK(curve.err_i_mean.maxCoeff() < 1e-6);
  CHECK(curve.err_b_mean.maxCoeff() < 1e-6);
}

TEST_CASE("interp endpoint identity holds for trained-like random nets") {
  const auto cfg = img::RendererConfig::defaults(img::Dataset::FlatSquare);
  const auto m = img::make_manifold(cfg);
  Rng rng(11);
  const nn::Mlp enc = nn::kaiming_init(nn::MlpSpec{{2, 8, 3}}, rng);
  const nn::Mlp dec = nn::kaiming_init(nn::MlpSpec{{3, 8, 2}}, rng);
  std::vector<std::pair<geo::Point, geo::Point>> pairs;
  for (int i = 0; i < 16; ++i) pairs.push_back(geo::sample_pair(m, 0.25, rng));
  const InterpCurve curve = interp_errors(enc, dec, cfg, m, pairs, uniform_grid(5));
  CHECK(curve.err[0] == 0.0);
  CHECK(curve.err[4] == 0.0);
  CHECK(std::abs(curve.signed_mean_sq[0]) < 1e-12);
  CHECK(std::abs(curve.signed_mean_sq[4]) < 1e-12);
}

TEST_CASE("projection export") {
  Rng rng(13);
  // Rank-2 cloud in R^5.
  const Eigen::MatrixXd basis = random_matrix(2, 5, rng);
  const Eigen::MatrixXd coeff = random_matrix(400, 2, rng);
  const Eigen::MatrixXd codes = coeff * basis;
  const PcaResult p = pca(codes);

  const std::string path = (std::filesystem::temp_directory_path() / "lbld_proj.csv").string();
  export_projection(codes, p, {0, 1, 2}, Eigen::MatrixXd(), path);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "id,c_a,c_b,c_c");
  int rows = 0;
  double max_c3 = 0.0;
  std::string line;
  while (std::getline(is, line)) {
    const auto p1 = line.find(','), p2 = line.find(',', p1 + 1), p3 = line.find(',', p2 + 1);
    max_c3 = std::max(max_c3, std::abs(std::stod(line.substr(p3 + 1))));
    ++rows;
  }
  CHECK(rows == 400);
  CHECK(max_c3 < 1e-9);  // third component of a rank-2 cloud

  // Norm preservation across the full component set.
  const Eigen::VectorXd centered = codes.row(7).transpose() - p.mean;
  const Eigen::VectorXd proj = p.components.transpose() * centered;
  CHECK(proj.norm() == doctest::Approx(centered.norm()).epsilon(1e-9));

  // Components (0,3,4) are valid for l = 5.
  export_projection(codes, p, {0, 3, 4}, Eigen::MatrixXd(), path);
  CHECK_THROWS_AS(export_projection(codes, p, {0, 1, 5}, Eigen::MatrixXd(), path),
                  std::invalid_argument);
  std::remove(path.c_str());
}

TEST_CASE("csv writers") {
  Rng rng(17);
  const Eigen::MatrixXd codes = random_matrix(50, 3, rng);
  const PcaResult p = pca(codes);
  const std::string spath = (std::filesystem::temp_directory_path() / "lbld_stds.csv").string();
  write_pca_stds(p, spath);
  std::ifstream is(spath);
  std::string line;
  std::getline(is, line);
  CHECK(line == "component,std");
  std::remove(spath.c_str());
}
