#include "lbld/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace lbld::eval {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

void jacobi_eigen_symmetric(const Eigen::MatrixXd& a, Eigen::VectorXd& eigenvalues,
                            Eigen::MatrixXd& eigenvectors, double tol) {
  if (a.rows() != a.cols()) throw std::invalid_argument("jacobi: matrix must be square");
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd d = a;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = std::max(1e-300, a.norm());

  for (int sweep = 0; sweep < 100 && off_diagonal_norm(d) > tol * scale; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = d(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (d(q, q) - d(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // Right-multiply by the rotation in the (p,q) plane, then left by its
        // transpose; apply the same right rotation to the eigenvector basis.
        for (int k = 0; k < n; ++k) {
          const double dkp = d(k, p), dkq = d(k, q);
          d(k, p) = c * dkp - s * dkq;
          d(k, q) = s * dkp + c * dkq;
        }
        for (int k = 0; k < n; ++k) {
          const double dpk = d(p, k), dqk = d(q, k);
          d(p, k) = c * dpk - s * dqk;
          d(q, k) = s * dpk + c * dqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  eigenvalues.resize(n);
  for (int i = 0; i < n; ++i) eigenvalues[i] = d(i, i);
  eigenvectors = v;

  // Sort descending by eigenvalue.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return eigenvalues[i] > eigenvalues[j]; });
  Eigen::VectorXd ev(n);
  Eigen::MatrixXd vec(n, n);
  for (int i = 0; i < n; ++i) {
    ev[i] = eigenvalues[order[i]];
    vec.col(i) = eigenvectors.col(order[i]);
  }
  eigenvalues = ev;
  eigenvectors = vec;
}

PcaResult pca(const Eigen::MatrixXd& codes) {
  const int n = static_cast<int>(codes.rows());
  if (n < 2) throw std::invalid_argument("pca: need at least two codes");
  PcaResult out;
  out.mean = codes.colwise().mean();
  const Eigen::MatrixXd centered = codes.rowwise() - out.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::VectorXd evals;
  jacobi_eigen_symmetric(cov, evals, out.components);
  out.stds = evals.cwiseMax(0.0).cwiseSqrt();
  return out;
}

int dim_usage(const Eigen::VectorXd& stds, double tau) {
  if (stds.size() == 0) return 0;
  int count = 0;
  for (int i = 0; i < stds.size(); ++i)
    if (stds[i] >= tau * stds[0]) ++count;
  return count;
}

Eigen::VectorXd uniform_grid(int points) {
  if (points < 2) throw std::invalid_argument("uniform_grid: need >= 2 points");
  Eigen::VectorXd t(points);
  for (int i = 0; i < points; ++i) t[i] = static_cast<double>(i) / (points - 1);
  t[0] = 0.0;
  t[points - 1] = 1.0;
  return t;
}

InterpCurve interp_errors(const nn::Mlp& encoder, const nn::Mlp& decoder,
                          const img::RendererConfig& renderer, const geo::Manifold& manifold,
                          const std::vector<std::pair<geo::Point, geo::Point>>& pairs,
                          const Eigen::VectorXd& t_grid) {
  if (pairs.empty()) throw std::invalid_argument("interp_errors: no test pairs");
  const int nt = static_cast<int>(t_grid.size());
  InterpCurve curve;
  curve.t = t_grid;
  curve.err.setZero(nt);
  curve.signed_mean_sq.setZero(nt);
  curve.err_i_mean.setZero(nt);
  curve.err_b_mean.setZero(nt);

  for (const auto& [x, y] : pairs) {
    const Eigen::VectorXd img_x = img::render(renderer, x).pixels.cast<double>();
    const Eigen::VectorXd img_y = img::render(renderer, y).pixels.cast<double>();
    const Eigen::VectorXd zx = nn::forward_value(encoder, img_x.transpose()).row(0);
    const Eigen::VectorXd zy = nn::forward_value(encoder, img_y.transpose()).row(0);
    for (int k = 0; k < nt; ++k) {
      const double t = t_grid[k];
      const geo::Point mid = geo::average(manifold, x, y, t);
      const Eigen::VectorXd img_mid = img::render(renderer, mid).pixels.cast<double>();
      const Eigen::VectorXd z_lin = (1.0 - t) * zx + t * zy;
      const Eigen::VectorXd rec_lin = nn::forward_value(decoder, z_lin.transpose()).row(0);
      const Eigen::VectorXd z_mid = nn::forward_value(encoder, img_mid.transpose()).row(0);
      const Eigen::VectorXd rec_mid = nn::forward_value(decoder, z_mid.transpose()).row(0);
      const double err_i = (img_mid - rec_lin).norm();
      const double err_b = (img_mid - rec_mid).norm();
      curve.err_i_mean[k] += err_i;
      curve.err_b_mean[k] += err_b;
      curve.signed_mean_sq[k] += err_i * err_i - err_b * err_b;
    }
  }

  const double inv = 1.0 / static_cast<double>(pairs.size());
  curve.err_i_mean *= inv;
  curve.err_b_mean *= inv;
  curve.signed_mean_sq *= inv;
  for (int k = 0; k < nt; ++k) curve.err[k] = std::sqrt(std::max(0.0, curve.signed_mean_sq[k]));
  return curve;
}

void export_projection(const Eigen::MatrixXd& codes, const PcaResult& pca,
                       const std::array<int, 3>& dims, const Eigen::MatrixXd& labels,
                       const std::string& path) {
  for (int d : dims)
    if (d < 0 || d >= pca.components.cols())
      throw std::invalid_argument("export_projection: component index out of range");
  if (labels.rows() != 0 && labels.rows() != codes.rows())
    throw std::invalid_argument("export_projection: label rows != code rows");

  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "id,c_a,c_b,c_c";
  for (int j = 0; j < labels.cols(); ++j) os << ",label" << j;
  os << '\n';
  os.precision(17);
  for (int i = 0; i < codes.rows(); ++i) {
    const Eigen::VectorXd centered = codes.row(i).transpose() - pca.mean;
    os << i;
    for (int d : dims) os << ',' << pca.components.col(d).dot(centered);
    if (labels.rows() != 0)
      for (int j = 0; j < labels.cols(); ++j) os << ',' << labels(i, j);
    os << '\n';
  }
}

void write_pca_stds(const PcaResult& pca, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "component,std\n";
  os.precision(17);
  for (int i = 0; i < pca.stds.size(); ++i) os << i << ',' << pca.stds[i] << '\n';
}

void write_interp_curve(const InterpCurve& curve, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "t,err,signed_mean_sq,err_i_mean,err_b_mean\n";
  os.precision(17);
  for (int k = 0; k < curve.t.size(); ++k)
    os << curve.t[k] << ',' << curve.err[k] << ',' << curve.signed_mean_sq[k] << ','
       << curve.err_i_mean[k] << ',' << curve.err_b_mean[k] << '\n';
}

}  // namespace lbld::eval
