#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "lbld/common.hpp"

namespace lbld::ad {

class Tape;

// Handle to a tape node. Cheap to copy; valid for the lifetime of its tape.
struct Var {
  int id = -1;
};

// Reverse-mode tape over dense matrices. Values are recorded eagerly during
// the forward pass; backward() fills gradients by a single reverse traversal
// in node order, which fixes the accumulation order.
class Tape {
 public:
  // Tracked node (parameters, inputs that need gradients).
  Var leaf(Eigen::MatrixXd value);
  // Untracked node; gradients are never formed for it.
  Var constant(Eigen::MatrixXd value);

  const Eigen::MatrixXd& value(Var v) const { return nodes_[v.id].value; }
  // Zero until backward() has run. Throws for untracked nodes.
  const Eigen::MatrixXd& grad(Var v) const;

  // Seeds d(root)/d(root) = 1 and propagates. The root must be 1x1.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend Var matmul(Tape&, Var, Var);
  friend Var add(Tape&, Var, Var);
  friend Var sub(Tape&, Var, Var);
  friend Var add_row_broadcast(Tape&, Var, Var);
  friend Var leaky_relu(Tape&, Var, double);
  friend Var scale(Tape&, Var, double);
  friend Var add_scalar(Tape&, Var, double);
  friend Var scale_rows(Tape&, Var, const Eigen::VectorXd&);
  friend Var row_sumsq(Tape&, Var);
  friend Var reciprocal(Tape&, Var);
  friend Var mean_all(Tape&, Var);

  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    bool requires_grad = false;
    // Accumulates this node's incoming gradient into its parents.
    std::function<void(Tape&, const Eigen::MatrixXd&)> pull;
  };

  int push(Eigen::MatrixXd value, bool requires_grad,
           std::function<void(Tape&, const Eigen::MatrixXd&)> pull);
  void accumulate(int id, const Eigen::MatrixXd& g);
  bool tracked(Var v) const { return nodes_[v.id].requires_grad; }

  std::vector<Node> nodes_;
};

// Matrix product a * b.
Var matmul(Tape& t, Var a, Var b);
// Elementwise sum/difference of equal-shape nodes.
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
// Adds a 1 x cols row vector to every row of a.
Var add_row_broadcast(Tape& t, Var a, Var row);
// max(x, slope*x) with the given negative-side slope.
Var leaky_relu(Tape& t, Var a, double slope);
Var scale(Tape& t, Var a, double c);
Var add_scalar(Tape& t, Var a, double c);
// Multiplies row i by factors[i] (factors are not differentiated).
Var scale_rows(Tape& t, Var a, const Eigen::VectorXd& factors);
// Row-wise squared Euclidean norm, shape n x 1.
Var row_sumsq(Tape& t, Var a);
// Elementwise 1/x.
Var reciprocal(Tape& t, Var a);
// Mean of all entries, shape 1 x 1.
Var mean_all(Tape& t, Var a);

}  // namespace lbld::ad
