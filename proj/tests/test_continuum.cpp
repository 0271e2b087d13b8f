#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lbld/continuum.hpp"
#include "test_support.hpp"

using namespace lbld;
using namespace lbld::continuum;

namespace {

double dfact(int n) {  // (n-1)!! with (-1)!! = 1
  double r = 1.0;
  for (int k = n; k >= 2; k -= 2) r *= k;
  return r;
}

Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

std::vector<Embedding> builtins() {
  return {flat_square_identity(), circle_embedding(1.0), circle_embedding(2.0),
          sphere_identity(), cylinder_embedding()};
}

}  // namespace

TEST_CASE("quadrature rules hit closed-form sphere moments") {
  // m=1: two endpoints, even powers average to 1.
  const QuadratureRule r1 = make_rule(1);
  CHECK(r1.weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
  for (int k = 1; k <= 4; ++k) {
    double acc = 0.0;
    for (int i = 0; i < r1.nodes.rows(); ++i)
      acc += r1.weights[i] * std::pow(r1.nodes(i, 0), 2 * k);
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-14));
  }

  // m=2: mean of cos^{2k} is binom(2k,k)/4^k.
  const QuadratureRule r2 = make_rule(2);
  CHECK(r2.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  const double expect2[] = {0.5, 0.375, 0.3125, 0.2734375};
  for (int k = 1; k <= 4; ++k) {
    double acc = 0.0;
    for (int i = 0; i < r2.nodes.rows(); ++i)
      acc += r2.weights[i] * std::pow(r2.nodes(i, 0), 2 * k);
    CHECK(acc == doctest::Approx(expect2[k - 1]).epsilon(1e-13));
  }

  // m=3: mean of v1^a v2^b v3^c for even exponents is
  // (a-1)!!(b-1)!!(c-1)!!/(a+b+c+1)!!; zero for any odd exponent.
  const QuadratureRule r3 = make_rule(3);
  CHECK(r3.nodes.rows() == 240);
  CHECK(r3.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
  for (int a = 0; a <= 8; ++a)
    for (int b = 0; a + b <= 8; ++b)
      for (int c = 0; a + b + c <= 8; ++c) {
        double acc = 0.0;
        for (int i = 0; i < r3.nodes.rows(); ++i)
          acc += r3.weights[i] * std::pow(r3.nodes(i, 0), a) * std::pow(r3.nodes(i, 1), b) *
                 std::pow(r3.nodes(i, 2), c);
        const bool odd = (a % 2) || (b % 2) || (c % 2);
        const double expect =
            odd ? 0.0 : dfact(a - 1) * dfact(b - 1) * dfact(c - 1) / dfact(a + b + c + 1);
        CHECK(std::abs(acc - expect) < 1e-12);
      }
}

TEST_CASE("Gamma closed forms") {
  // Identity padded to 4x2 has unit singular values.
  const QuadratureRule rule = make_rule(2);
  Eigen::MatrixXd pad = Eigen::MatrixXd::Zero(4, 2);
  pad(0, 0) = 1.0;
  pad(1, 1) = 1.0;
  CHECK(std::abs(Gamma(pad, rule)) < 1e-12);

  // diag(2,1): (s1^2+s2^2)/2 + 1/(s1 s2) - 2 = 1. Verify the closed form by
  // an independent high-resolution trapezoid before trusting it.
  double ref = 0.0;
  const int big = 2'000'000;
  for (int k = 0; k < big; ++k) {
    const double th = 2.0 * kPi * k / big;
    const double n2 = 4.0 * std::cos(th) * std::cos(th) + std::sin(th) * std::sin(th);
    ref += n2 + 1.0 / n2 - 2.0;
  }
  ref /= big;
  CHECK(ref == doctest::Approx(1.0).epsilon(1e-9));

  Eigen::MatrixXd d21 = Eigen::MatrixXd::Zero(2, 2);
  d21(0, 0) = 2.0;
  d21(1, 1) = 1.0;
  CHECK(Gamma(d21, rule) == doctest::Approx(1.0).epsilon(1e-9));

  // Rank-deficient input trips the guard.
  Eigen::MatrixXd sing = Eigen::MatrixXd::Zero(2, 2);
  sing(0, 0) = 1.0;
  CHECK_THROWS_AS(Gamma(sing, rule), SingularGammaError);
}

TEST_CASE("Gamma depends only on the singular values") {
  Rng rng(3);
  const QuadratureRule rule = make_rule(2);
  std::uniform_real_distribution<double> usv(0.5, 2.0);
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 2);
    b(0, 0) = usv(rng);
    b(1, 1) = usv(rng);
    const double base = Gamma(b, rule);
    CHECK(base >= 0.0);
    const Eigen::MatrixXd q = random_orthogonal(3, rng);
    const Eigen::MatrixXd u = random_orthogonal(2, rng);
    CHECK(std::abs(Gamma((q * b * u).eval(), rule) - base) < 1e-9);
  }

  // Zero iff all singular values are one.
  Eigen::MatrixXd nearly = Eigen::MatrixXd::Zero(2, 2);
  nearly(0, 0) = 1.01;
  nearly(1, 1) = 1.0;
  CHECK(Gamma(nearly, rule) > 1e-4);
}

TEST_CASE("analytic derivatives agree with finite differences along exp") {
  Rng rng(5);
  const double h = 1e-3;
  for (const Embedding& emb : builtins()) {
    int checked = 0;
    while (checked < 200) {
      const geo::Point x = geo::sample_uniform(emb.domain, rng);
      const Eigen::MatrixXd basis = geo::tangent_basis(emb.domain, x);
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::VectorXd w(basis.cols());
      for (int i = 0; i < w.size(); ++i) w[i] = normal(rng);
      w.normalize();
      const Eigen::VectorXd v = basis * w;
      geo::Point fwd, bwd;
      try {
        fwd = geo::exp_map(emb.domain, {x, h * v});
        bwd = geo::exp_map(emb.domain, {x, (-h * v).eval()});
      } catch (const std::domain_error&) {
        continue;  // stepped over an interval end
      }
      const Eigen::VectorXd f0 = emb.map(x);
      const Eigen::VectorXd fp = emb.map(fwd);
      const Eigen::VectorXd fm = emb.map(bwd);
      const Eigen::VectorXd g_fd = (fp - fm) / (2.0 * h);
      const Eigen::VectorXd h_fd = (fp - 2.0 * f0 + fm) / (h * h);
      const Eigen::VectorXd g = emb.dgrad(x, v);
      const Eigen::VectorXd hh = emb.dhess(x, v);
      CHECK((g - g_fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
      CHECK((hh - h_fd).norm() <= 1e-5 * std::max(1.0, hh.norm()));
      ++checked;
    }
  }
}

TEST_CASE("limit energy closed forms") {
  const QuadratureRule r1 = make_rule(1);
  const QuadratureRule r2 = make_rule(2);

  // Circle of radius rho: gamma(rho) + lambda rho^2.
  for (double rho : {0.5, 1.0, 2.0}) {
    for (double lambda : {0.0, 1.0, 3.0}) {
      const double expect = rho * rho + 1.0 / (rho * rho) - 2.0 + lambda * rho * rho;
      CHECK(limit_energy(circle_embedding(rho), r1, lambda) ==
            doctest::Approx(expect).epsilon(1e-12));
    }
  }

  // Unit sphere: great circles have unit curvature, so the value is lambda.
  for (double lambda : {0.0, 1.0, 2.0})
    CHECK(limit_energy(sphere_identity(), r2, lambda) ==
          doctest::Approx(lambda).epsilon(1e-12));

  // Flat square: exactly zero.
  CHECK(limit_energy(flat_square_identity(), r2, 5.0) == doctest::Approx(0.0));

  // Cylinder: |dhess|^2 = v1^4, and the circle average of cos^4 is 3/8.
  for (double lambda : {0.0, 1.0, 4.0})
    CHECK(limit_energy(cylinder_embedding(), r2, lambda) ==
          doctest::Approx(lambda * 3.0 / 8.0).epsilon(1e-12));
}

TEST_CASE("mc energy: flat square is zero to machine precision") {
  for (double eps : {0.1, 0.3}) {
    for (double lambda : {0.0, 1.0, 5.0}) {
      const McResult r = mc_energy(flat_square_identity(), eps, lambda, 50'000, 7);
      CHECK(std::abs(r.value) < 1e-24);
    }
  }
}

TEST_CASE("mc energy approaches the limit on the circle") {
  // For the unit circle the radius-eps bias is -eps^2/72 + O(eps^4) (both
  // difference quotients are symmetric around the midpoint).
  const double eps = 0.1;
  const McResult r = mc_energy(circle_embedding(1.0), eps, 1.0, 400'000, 11);
  const double limit = 1.0;
  const double bias = -eps * eps / 72.0;
  CHECK(std::abs(r.value - (limit + bias)) < 5e-7 + 3.0 * r.std_err);

  // Scaled circle, lambda = 0: approaches gamma(2) = 2.25.
  const McResult r2 = mc_energy(circle_embedding(2.0), 0.05, 0.0, 200'000, 13);
  CHECK(r2.value == doctest::Approx(2.25).epsilon(1e-3));
  CHECK(r2.value >= -3.0 * r2.std_err);
}

TEST_CASE("mc energy is deterministic and worker sharding is reproducible") {
  const Embedding emb = circle_embedding(1.0);
  const McResult a = mc_energy(emb, 0.2, 1.0, 20'000, 99, 1);
  const McResult b = mc_energy(emb, 0.2, 1.0, 20'000, 99, 1);
  CHECK(a.value == b.value);
  const McResult c = mc_energy(emb, 0.2, 1.0, 20'000, 99, 2);
  const McResult d = mc_energy(emb, 0.2, 1.0, 20'000, 99, 2);
  CHECK(c.value == d.value);
}

TEST_CASE("rigid motion invariance of both energies") {
  Rng rng(17);
  const Eigen::MatrixXd q = random_orthogonal(3, rng);
  Eigen::VectorXd shift(3);
  shift << 0.3, -1.2, 4.0;
  const Embedding base = sphere_identity();
  const Embedding moved = with_rigid_motion(base, q, shift);

  const QuadratureRule r2 = make_rule(2);
  CHECK(limit_energy(moved, r2, 2.0) == doctest::Approx(limit_energy(base, r2, 2.0)).epsilon(1e-12));

  const McResult ma = mc_energy(base, 0.3, 2.0, 50'000, 21);
  const McResult mb = mc_energy(moved, 0.3, 2.0, 50'000, 21);
  CHECK(mb.value == doctest::Approx(ma.value).epsilon(1e-10));
}

TEST_CASE("consistency fit: flat square is exact, circle is first order or better") {
  const std::vector<double> radii{0.4, 0.2, 0.1, 0.05};

  const ConsistencyReport flat = consistency_rate(flat_square_identity(), radii, 20'000, 1.0, 5);
  CHECK(flat.status == FitStatus::ExactMatch);

  const ConsistencyReport circle = consistency_rate(circle_embedding(1.0), radii, 200'000, 1.0, 5);
  REQUIRE(circle.status == FitStatus::Ok);
  CHECK(circle.slope >= 0.9);
  CHECK(circle.rows.size() == 4);
  for (const auto& row : circle.rows) CHECK(row.limit_value == doctest::Approx(1.0).epsilon(1e-12));

  // Starving the sampler of samples must flag, not fit.
  const ConsistencyReport weak = consistency_rate(circle_embedding(1.0), radii, 50, 1.0, 5);
  CHECK(weak.status == FitStatus::Inconclusive);
}

TEST_CASE("report csv layout") {
  const std::vector<double> radii{0.4, 0.2};
  const ConsistencyReport rep = consistency_rate(circle_embedding(1.0), radii, 20'000, 1.0, 5);
  const std::string path = (std::filesystem::temp_directory_path() / "lbld_report.csv").string();
  write_report(rep, path);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "embedding,epsilon,mc_value,std_err,limit_value,abs_diff");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3);  // two radii plus the slope summary
  std::remove(path.c_str());
}
