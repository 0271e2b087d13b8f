#include "lbld/autodiff.hpp"

#include <stdexcept>
#include <utility>

namespace lbld::ad {

int Tape::push(Eigen::MatrixXd value, bool requires_grad,
               std::function<void(Tape&, const Eigen::MatrixXd&)> pull) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::leaf(Eigen::MatrixXd value) { return Var{push(std::move(value), true, nullptr)}; }

Var Tape::constant(Eigen::MatrixXd value) { return Var{push(std::move(value), false, nullptr)}; }

const Eigen::MatrixXd& Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (!n.requires_grad) throw std::logic_error("grad of an untracked node");
  return n.grad;
}

void Tape::accumulate(int id, const Eigen::MatrixXd& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  Node& r = nodes_.at(root.id);
  if (r.value.rows() != 1 || r.value.cols() != 1)
    throw std::invalid_argument("backward: root must be a scalar node");
  if (!r.requires_grad) throw std::invalid_argument("backward: root is untracked");
  for (auto& n : nodes_) n.grad.setZero(n.value.rows(), n.value.cols());
  r.grad(0, 0) = 1.0;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.requires_grad && n.pull) n.pull(*this, n.grad);
  }
}

namespace {

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  const Eigen::MatrixXd& av = t.value(a);
  const Eigen::MatrixXd& bv = t.value(b);
  if (av.cols() != bv.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  const bool tracked = t.tracked(a) || t.tracked(b);
  return Var{t.push(av * bv, tracked, [a, b](Tape& tp, const Eigen::MatrixXd& g) {
    tp.accumulate(a.id, g * tp.value(b).transpose());
    tp.accumulate(b.id, tp.value(a).transpose() * g);
  })};
}

Var add(Tape& t, Var a, Var b) {
  check_same_shape(t.value(a), t.value(b), "add");
  const bool tracked = t.tracked(a) || t.tracked(b);
  return Var{t.push(t.value(a) + t.value(b), tracked, [a, b](Tape& tp, const Eigen::MatrixXd& g) {
    tp.accumulate(a.id, g);
    tp.accumulate(b.id, g);
  })};
}

Var sub(Tape& t, Var a, Var b) {
  check_same_shape(t.value(a), t.value(b), "sub");
  const bool tracked = t.tracked(a) || t.tracked(b);
  return Var{t.push(t.value(a) - t.value(b), tracked, [a, b](Tape& tp, const Eigen::MatrixXd& g) {
    tp.accumulate(a.id, g);
    tp.accumulate(b.id, -g);
  })};
}

Var add_row_broadcast(Tape& t, Var a, Var row) {
  const Eigen::MatrixXd& av = t.value(a);
  const Eigen::MatrixXd& rv = t.value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols())
    throw std::invalid_argument("add_row_broadcast: row must be 1 x cols(a)");
  Eigen::MatrixXd out = av;
  out.rowwise() += rv.row(0);
  const bool tracked = t.tracked(a) || t.tracked(row);
  return Var{t.push(std::move(out), tracked, [a, row](Tape& tp, const Eigen::MatrixXd& g) {
    tp.accumulate(a.id, g);
    tp.accumulate(row.id, g.colwise().sum());
  })};
}

Var leaky_relu(Tape& t, Var a, double slope) {
  const Eigen::MatrixXd& av = t.value(a);
  Eigen::MatrixXd out = av.unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  return Var{t.push(std::move(out), t.tracked(a), [a, slope](Tape& tp, const Eigen::MatrixXd& g) {
    const Eigen::MatrixXd& x = tp.value(a);
    tp.accumulate(a.id,
                  (x.array() > 0.0).select(g, (slope * g.array()).matrix()));
  })};
}

Var scale(Tape& t, Var a, double c) {
  return Var{t.push(c * t.value(a), t.tracked(a), [a, c](Tape& tp, const Eigen::MatrixXd& g) {
    tp.accumulate(a.id, c * g);
  })};
}

Var add_scalar(Tape& t, Var a, double c) {
  return Var{t.push(t.value(a).array() + c, t.tracked(a), [a](Tape& tp, const Eigen::MatrixXd& g) {
    tp.accumulate(a.id, g);
  })};
}

Var scale_rows(Tape& t, Var a, const Eigen::VectorXd& factors) {
  const Eigen::MatrixXd& av = t.value(a);
  if (factors.size() != av.rows()) throw std::invalid_argument("scale_rows: factor count != rows");
  return Var{t.push(factors.asDiagonal() * av, t.tracked(a),
                    [a, factors](Tape& tp, const Eigen::MatrixXd& g) {
                      tp.accumulate(a.id, factors.asDiagonal() * g);
                    })};
}

Var row_sumsq(Tape& t, Var a) {
  const Eigen::MatrixXd& av = t.value(a);
  Eigen::MatrixXd out = av.rowwise().squaredNorm();
  return Var{t.push(std::move(out), t.tracked(a), [a](Tape& tp, const Eigen::MatrixXd& g) {
    // d/dA_ij of sum_j A_ij^2 is 2 A_ij; g is n x 1.
    tp.accumulate(a.id, 2.0 * (tp.value(a).array().colwise() * g.col(0).array()).matrix());
  })};
}

Var reciprocal(Tape& t, Var a) {
  const Eigen::MatrixXd& av = t.value(a);
  Eigen::MatrixXd out = av.cwiseInverse();
  return Var{t.push(std::move(out), t.tracked(a), [a](Tape& tp, const Eigen::MatrixXd& g) {
    const Eigen::ArrayXXd x = tp.value(a).array();
    tp.accumulate(a.id, (-g.array() / (x * x)).matrix());
  })};
}

Var mean_all(Tape& t, Var a) {
  const Eigen::MatrixXd& av = t.value(a);
  Eigen::MatrixXd out(1, 1);
  out(0, 0) = av.mean();
  const double inv = 1.0 / static_cast<double>(av.size());
  return Var{t.push(std::move(out), t.tracked(a), [a, inv](Tape& tp, const Eigen::MatrixXd& g) {
    tp.accumulate(a.id, Eigen::MatrixXd::Constant(tp.value(a).rows(), tp.value(a).cols(),
                                                  g(0, 0) * inv));
  })};
}

}  // namespace lbld::ad
