#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lbld/autodiff.hpp"
#include "lbld/common.hpp"

namespace lbld::nn {

// Dense multilayer perceptron: leaky ReLU after every layer except the last,
// which stays linear.
struct MlpSpec {
  std::vector<int> widths;  // input, hidden..., output
  double leak = 0.01;

  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  int layer_count() const { return static_cast<int>(widths.size()) - 1; }
  void validate() const;
};

struct Mlp {
  MlpSpec spec;
  std::vector<Eigen::MatrixXd> weights;  // in x out per layer
  std::vector<Eigen::MatrixXd> biases;   // 1 x out per layer
};

// Zero-mean Gaussian weights with std sqrt(2 / (fan_in * (1 + leak^2))),
// zero biases.
Mlp kaiming_init(const MlpSpec& spec, Rng& rng);

// Parameter nodes of one model on a tape; order is W0, b0, W1, b1, ...
struct MlpVars {
  std::vector<ad::Var> params;
};

// Registers parameters as tracked leaves (trainable) or constants (frozen).
MlpVars bind_trainable(ad::Tape& t, const Mlp& m);
MlpVars bind_frozen(ad::Tape& t, const Mlp& m);

// Tape forward pass; input rows are samples.
ad::Var forward(ad::Tape& t, const MlpVars& vars, const MlpSpec& spec, ad::Var input);

// Tape-free forward pass for evaluation on frozen parameters.
Eigen::MatrixXd forward_value(const Mlp& m, const Eigen::MatrixXd& input);

// Gradients of all parameters after backward(), in binding order.
std::vector<Eigen::MatrixXd> collect_grads(const ad::Tape& t, const MlpVars& vars);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

struct AdamState {
  long long step = 0;
  std::vector<Eigen::MatrixXd> m, v;  // one slot per parameter matrix
};

AdamState make_adam_state(const std::vector<const Eigen::MatrixXd*>& params);

// One bias-corrected update; throws on non-finite gradients.
void adam_step(AdamState& state, std::vector<Eigen::MatrixXd*> params,
               const std::vector<Eigen::MatrixXd>& grads, const AdamConfig& cfg);

// Pointers to all parameter matrices of a model in binding order.
std::vector<Eigen::MatrixXd*> param_ptrs(Mlp& m);

// Encoder/decoder pair with a shared optimizer; what training checkpoints
// contain.
struct Checkpoint {
  Mlp encoder;
  Mlp decoder;
  AdamConfig adam;
  AdamState adam_state;
};

// Binary format: magic "LBLM", version, widths of both nets, f64 parameters,
// Adam hyperparameters, step count and moment vectors; all little-endian.
void write_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace lbld::nn
