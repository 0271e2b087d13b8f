#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lbld/autodiff.hpp"
#include "lbld/common.hpp"
#include "lbld/imaging.hpp"
#include "lbld/nn.hpp"

namespace lbld::loss {

enum class TrainMode { Joint, EncoderFirst };

struct LossConfig {
  double epsilon = 0.25;  // locality radius of the pair sampler
  double lambda = 1.0;    // flatness weight
  double kappa = 1.0;     // reconstruction weight
  TrainMode mode = TrainMode::Joint;
};

// Isometry penalty gamma(s) = |s|^2 + |s|^-2 - 2; zero exactly at |s| = 1.
template <class Derived>
double gamma(const Eigen::MatrixBase<Derived>& v) {
  const double s2 = v.squaredNorm();
  if (s2 == 0.0) throw std::domain_error("gamma: zero vector (division by zero)");
  return s2 + 1.0 / s2 - 2.0;
}

// First-order difference quotient (phi(y) - phi(x)) / d.
template <class D1, class D2>
Eigen::VectorXd delta1(const Eigen::MatrixBase<D1>& zx, const Eigen::MatrixBase<D2>& zy,
                       double d) {
  if (!(d > 0.0)) throw std::invalid_argument("delta1: distance must be positive");
  return (zy - zx) / d;
}

// Second-order difference quotient 8 * (midpoint(phi(x),phi(y)) - phi(av)) / d^2.
template <class D1, class D2, class D3>
Eigen::VectorXd delta2(const Eigen::MatrixBase<D1>& zx, const Eigen::MatrixBase<D2>& zy,
                       const Eigen::MatrixBase<D3>& zav, double d) {
  if (!(d > 0.0)) throw std::invalid_argument("delta2: distance must be positive");
  return 8.0 * (0.5 * (zx + zy) - zav) / (d * d);
}

// Per-pair energy gamma(d1) + lambda * |d2|^2 on raw latent codes.
template <class D1, class D2, class D3>
double pair_energy(const Eigen::MatrixBase<D1>& zx, const Eigen::MatrixBase<D2>& zy,
                   const Eigen::MatrixBase<D3>& zav, double d, double lambda) {
  const Eigen::VectorXd d1 = delta1(zx, zy, d);
  const Eigen::VectorXd d2 = delta2(zx, zy, zav, d);
  return gamma(d1) + lambda * d2.squaredNorm();
}

// Batch mean of pair_energy over code rows; the tape-free reference route.
double encoder_energy_value(const Eigen::MatrixXd& zx, const Eigen::MatrixXd& zy,
                            const Eigen::MatrixXd& zav, const Eigen::VectorXd& dist,
                            double lambda);

// Training batch as dense row-major matrices (one row per record).
struct TripletBatch {
  Eigen::MatrixXd x, y, av;
  Eigen::VectorXd dist;

  int size() const { return static_cast<int>(dist.size()); }
};

TripletBatch to_batch(const std::vector<img::Triplet>& records);

// Batch images registered as constants on a tape.
struct BatchVars {
  ad::Var x, y, av;
  Eigen::VectorXd dist;
};

BatchVars bind_batch(ad::Tape& t, const TripletBatch& batch);

// Loss components as plain numbers for logging; weighted so they sum to the
// joint objective.
struct LossParts {
  double isometry = 0.0;        // mean gamma(d1)
  double flatness = 0.0;        // lambda * mean |d2|^2
  double reconstruction = 0.0;  // kappa * recon mean
};

// Mean of gamma(d1) + lambda |d2|^2 over the batch, differentiable through
// the encoder. Throws EncoderCollapseError when any |d1| drops below 1e-8.
ad::Var encoder_loss(ad::Tape& t, const nn::MlpVars& enc, const nn::MlpSpec& enc_spec,
                     const BatchVars& batch, const LossConfig& cfg, LossParts* parts = nullptr);

// Mean over pairs of |dec(enc(x)) - x|^2 + |dec(enc(y)) - y|^2 (squared
// image L2 norms; the midpoint image is not reconstructed).
ad::Var recon_loss(ad::Tape& t, const nn::MlpVars& enc, const nn::MlpSpec& enc_spec,
                   const nn::MlpVars& dec, const nn::MlpSpec& dec_spec, const BatchVars& batch,
                   LossParts* parts = nullptr);

// Joint objective encoder_loss + kappa * recon_loss with shared encoder
// forwards. Phase separation for TrainMode::EncoderFirst is the trainer's
// job: it binds one of the nets frozen and optimizes the matching term.
ad::Var total_loss(ad::Tape& t, const nn::MlpVars& enc, const nn::MlpSpec& enc_spec,
                   const nn::MlpVars& dec, const nn::MlpSpec& dec_spec, const BatchVars& batch,
                   const LossConfig& cfg, LossParts* parts = nullptr);

}  // namespace lbld::loss
