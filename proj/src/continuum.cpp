#include "lbld/continuum.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include "lbld/loss.hpp"

namespace lbld::continuum {

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

geo::Point point1(double a) { return geo::Point{Eigen::VectorXd::Constant(1, a)}; }

}  // namespace

Embedding flat_square_identity() {
  Embedding e;
  e.name = "flat-square";
  e.domain = geo::Manifold::product({geo::Manifold::interval(0.0, 1.0),
                                     geo::Manifold::interval(0.0, 1.0)});
  e.map = [](const geo::Point& p) { return p.coords; };
  e.dgrad = [](const geo::Point&, const Eigen::VectorXd& v) { return v; };
  e.dhess = [](const geo::Point&, const Eigen::VectorXd& v) {
    return Eigen::VectorXd::Zero(v.size()).eval();
  };
  e.homogeneous = true;
  e.base_point = geo::Point{vec2(0.5, 0.5)};
  return e;
}

Embedding circle_embedding(double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("circle_embedding: rho must be positive");
  Embedding e;
  e.name = "circle";
  e.domain = geo::Manifold::circle(2.0 * kPi);
  e.map = [rho](const geo::Point& p) {
    return vec2(rho * std::cos(p.coords[0]), rho * std::sin(p.coords[0]));
  };
  e.dgrad = [rho](const geo::Point& p, const Eigen::VectorXd& v) {
    return vec2(-rho * std::sin(p.coords[0]) * v[0], rho * std::cos(p.coords[0]) * v[0]);
  };
  e.dhess = [rho](const geo::Point& p, const Eigen::VectorXd& v) {
    const double v2 = v[0] * v[0];
    return vec2(-rho * std::cos(p.coords[0]) * v2, -rho * std::sin(p.coords[0]) * v2);
  };
  e.homogeneous = true;
  e.base_point = point1(0.4);
  return e;
}

Embedding sphere_identity() {
  Embedding e;
  e.name = "sphere";
  e.domain = geo::Manifold::sphere2();
  e.map = [](const geo::Point& p) { return p.coords; };
  // Along exp_x(t v) = cos(t) x + sin(t) v: first derivative v, second -x.
  e.dgrad = [](const geo::Point&, const Eigen::VectorXd& v) { return v; };
  e.dhess = [](const geo::Point& p, const Eigen::VectorXd& v) {
    return (-v.squaredNorm() * p.coords).eval();
  };
  e.homogeneous = true;
  Eigen::VectorXd north(3);
  north << 0, 0, 1;
  e.base_point = geo::Point{north};
  return e;
}

Embedding cylinder_embedding() {
  Embedding e;
  e.name = "cylinder";
  e.domain = geo::Manifold::product({geo::Manifold::circle(2.0 * kPi),
                                     geo::Manifold::interval(0.0, 1.0)});
  e.map = [](const geo::Point& p) {
    Eigen::VectorXd out(3);
    out << std::cos(p.coords[0]), std::sin(p.coords[0]), p.coords[1];
    return out;
  };
  e.dgrad = [](const geo::Point& p, const Eigen::VectorXd& v) {
    Eigen::VectorXd out(3);
    out << -std::sin(p.coords[0]) * v[0], std::cos(p.coords[0]) * v[0], v[1];
    return out;
  };
  e.dhess = [](const geo::Point& p, const Eigen::VectorXd& v) {
    const double v2 = v[0] * v[0];
    Eigen::VectorXd out(3);
    out << -std::cos(p.coords[0]) * v2, -std::sin(p.coords[0]) * v2, 0.0;
    return out;
  };
  e.homogeneous = true;
  e.base_point = geo::Point{vec2(0.7, 0.5)};
  return e;
}

Embedding with_rigid_motion(const Embedding& emb, const Eigen::MatrixXd& rotation,
                            const Eigen::VectorXd& shift) {
  Embedding e = emb;
  e.name = emb.name + "+rigid";
  const auto map = emb.map;
  const auto dgrad = emb.dgrad;
  const auto dhess = emb.dhess;
  e.map = [map, rotation, shift](const geo::Point& p) {
    return (rotation * map(p) + shift).eval();
  };
  e.dgrad = [dgrad, rotation](const geo::Point& p, const Eigen::VectorXd& v) {
    return (rotation * dgrad(p, v)).eval();
  };
  e.dhess = [dhess, rotation](const geo::Point& p, const Eigen::VectorXd& v) {
    return (rotation * dhess(p, v)).eval();
  };
  return e;
}

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace

QuadratureRule make_rule(int dim, int size) {
  QuadratureRule rule;
  rule.dim = dim;
  switch (dim) {
    case 1: {
      rule.nodes.resize(2, 1);
      rule.nodes << -1.0, 1.0;
      rule.weights = Eigen::VectorXd::Constant(2, 0.5);
      return rule;
    }
    case 2: {
      // gamma(|Bv|) is pi-periodic in the angle, so the effective node count
      // per period is n/2; 128 keeps the trapezoid error near 1e-14 for
      // singular-value ratios up to ~4.
      const int n = size > 0 ? size : 128;
      rule.nodes.resize(n, 2);
      rule.weights = Eigen::VectorXd::Constant(n, 1.0 / n);
      for (int k = 0; k < n; ++k) {
        const double th = 2.0 * kPi * k / n;
        rule.nodes(k, 0) = std::cos(th);
        rule.nodes(k, 1) = std::sin(th);
      }
      return rule;
    }
    case 3: {
      const int n_polar = size > 0 ? std::max(2, size / 24) : 10;
      const int n_az = 24;
      Eigen::VectorXd mu, wmu;
      gauss_legendre(n_polar, mu, wmu);
      rule.nodes.resize(n_polar * n_az, 3);
      rule.weights.resize(n_polar * n_az);
      int idx = 0;
      for (int i = 0; i < n_polar; ++i) {
        const double st = std::sqrt(std::max(0.0, 1.0 - mu[i] * mu[i]));
        for (int k = 0; k < n_az; ++k) {
          const double th = 2.0 * kPi * k / n_az;
          rule.nodes(idx, 0) = st * std::cos(th);
          rule.nodes(idx, 1) = st * std::sin(th);
          rule.nodes(idx, 2) = mu[i];
          rule.weights[idx] = wmu[i] / (2.0 * n_az);  // GL weights sum to 2
          ++idx;
        }
      }
      return rule;
    }
    default:
      throw std::invalid_argument("make_rule: sphere quadrature only for m in {1,2,3}");
  }
}

double Gamma(const Eigen::MatrixXd& b, const QuadratureRule& rule) {
  if (b.cols() != rule.dim) throw std::invalid_argument("Gamma: matrix columns != rule dimension");
  double acc = 0.0;
  for (int k = 0; k < rule.nodes.rows(); ++k) {
    const Eigen::VectorXd bv = b * rule.nodes.row(k).transpose();
    const double n2 = bv.squaredNorm();
    if (n2 < 1e-12 * 1e-12) throw SingularGammaError("Gamma: rank-deficient matrix at a node");
    acc += rule.weights[k] * (n2 + 1.0 / n2 - 2.0);
  }
  return acc;
}

namespace {

struct Welford {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }

  // Order-dependent merge; callers combine shards in a fixed order.
  void merge(const Welford& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(count + o.count);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.count) / total;
    m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / total;
    count += o.count;
  }
};

Welford mc_shard(const Embedding& emb, double eps, double lambda, std::uint64_t samples,
                 std::uint64_t seed) {
  Rng rng(seed);
  Welford acc;
  for (std::uint64_t i = 0; i < samples; ++i) {
    geo::Point x = geo::sample_uniform(emb.domain, rng);
    geo::Point y;
    double d = 0.0;
    do {
      y = geo::sample_in_ball(emb.domain, x, eps, rng);
      d = geo::distance(emb.domain, x, y);
    } while (d < 1e-6 * eps);
    const geo::Point mid = geo::average(emb.domain, x, y, 0.5);
    acc.add(loss::pair_energy(emb.map(x), emb.map(y), emb.map(mid), d, lambda));
  }
  return acc;
}

}  // namespace

McResult mc_energy(const Embedding& emb, double eps, double lambda, std::uint64_t samples,
                   std::uint64_t seed, int workers) {
  if (!(eps > 0.0) || !(eps < emb.domain.uniqueness_bound()))
    throw std::invalid_argument("mc_energy: eps must lie below the uniqueness bound");
  if (samples == 0) throw std::invalid_argument("mc_energy: need samples");
  workers = std::max(1, workers);

  std::vector<Welford> parts(static_cast<std::size_t>(workers));
  const std::uint64_t base = samples / workers;
  const std::uint64_t extra = samples % workers;
  if (workers == 1) {
    parts[0] = mc_shard(emb, eps, lambda, samples, mix_seed(seed, 0));
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      const std::uint64_t n = base + (static_cast<std::uint64_t>(w) < extra ? 1 : 0);
      threads.emplace_back([&, w, n] {
        parts[static_cast<std::size_t>(w)] =
            mc_shard(emb, eps, lambda, n, mix_seed(seed, static_cast<std::uint64_t>(w)));
      });
    }
    for (auto& t : threads) t.join();
  }
  Welford total;
  for (const auto& p : parts) total.merge(p);  // fixed shard order
  McResult r;
  r.value = total.mean;
  r.samples = total.count;
  r.std_err = total.count > 1
                  ? std::sqrt(total.m2 / static_cast<double>(total.count - 1) /
                              static_cast<double>(total.count))
                  : 0.0;
  return r;
}

double limit_energy(const Embedding& emb, const QuadratureRule& rule, double lambda,
                    std::uint64_t manifold_samples, std::uint64_t seed) {
  if (rule.dim != emb.domain.intrinsic_dim())
    throw std::invalid_argument("limit_energy: rule dimension != intrinsic dimension");

  auto at_point = [&](const geo::Point& x) {
    const Eigen::MatrixXd basis = geo::tangent_basis(emb.domain, x);
    double acc = 0.0;
    for (int k = 0; k < rule.nodes.rows(); ++k) {
      const Eigen::VectorXd v = basis * rule.nodes.row(k).transpose();
      const Eigen::VectorXd g = emb.dgrad(x, v);
      const double gn2 = g.squaredNorm();
      if (gn2 < 1e-12 * 1e-12)
        throw SingularGammaError("limit_energy: singular gradient at a quadrature node");
      double term = gn2 + 1.0 / gn2 - 2.0;
      if (lambda != 0.0) term += lambda * emb.dhess(x, v).squaredNorm();
      acc += rule.weights[k] * term;
    }
    return acc;
  };

  if (emb.homogeneous) return at_point(emb.base_point);

  Rng rng(seed);
  double acc = 0.0;
  for (std::uint64_t i = 0; i < manifold_samples; ++i)
    acc += at_point(geo::sample_uniform(emb.domain, rng));
  return acc / static_cast<double>(manifold_samples);
}

ConsistencyReport consistency_rate(const Embedding& emb, const std::vector<double>& eps_list,
                                   std::uint64_t samples, double lambda, std::uint64_t seed,
                                   int workers) {
  if (eps_list.size() < 2) throw std::invalid_argument("consistency_rate: need >= 2 radii");
  ConsistencyReport rep;
  rep.embedding = emb.name;
  const QuadratureRule rule = make_rule(emb.domain.intrinsic_dim());
  const double limit = limit_energy(emb, rule, lambda);

  for (double eps : eps_list) {
    // Common random numbers: every radius restarts the same substreams.
    const McResult mc = mc_energy(emb, eps, lambda, samples, seed, workers);
    rep.rows.push_back({eps, mc.value, mc.std_err, limit, std::abs(mc.value - limit)});
  }

  const double scale = std::max(1.0, std::abs(limit));
  bool all_exact = true;
  for (const auto& r : rep.rows) all_exact = all_exact && r.abs_diff <= 1e-13 * scale;
  if (all_exact) {
    rep.status = FitStatus::ExactMatch;
    return rep;
  }

  // The largest radius must dominate its own Monte-Carlo error.
  const auto& largest = *std::max_element(
      rep.rows.begin(), rep.rows.end(),
      [](const ConsistencyRow& a, const ConsistencyRow& b) { return a.epsilon < b.epsilon; });
  if (largest.std_err > 0.1 * largest.abs_diff) {
    rep.status = FitStatus::Inconclusive;
    return rep;
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : rep.rows) {
    if (r.abs_diff <= 0.0) continue;
    const double x = std::log(r.epsilon);
    const double y = std::log(r.abs_diff);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) {
    rep.status = FitStatus::Inconclusive;
    return rep;
  }
  const double denom = n * sxx - sx * sx;
  rep.slope = (n * sxy - sx * sy) / denom;
  rep.intercept = (sy - rep.slope * sx) / n;
  rep.status = FitStatus::Ok;
  return rep;
}

void write_report(const ConsistencyReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "embedding,epsilon,mc_value,std_err,limit_value,abs_diff\n";
  os.precision(17);
  for (const auto& r : report.rows)
    os << report.embedding << ',' << r.epsilon << ',' << r.mc_value << ',' << r.std_err << ','
       << r.limit_value << ',' << r.abs_diff << '\n';
  os << "# slope " << report.slope << " intercept " << report.intercept << " status "
     << (report.status == FitStatus::Ok
             ? "ok"
             : report.status == FitStatus::ExactMatch ? "exact" : "inconclusive")
     << '\n';
}

}  // namespace lbld::continuum
