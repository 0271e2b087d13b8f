#include "lbld/loss.hpp"

#include <cmath>

namespace lbld::loss {

namespace {

constexpr double kCollapseNorm = 1e-8;

// Shared sub-graph: codes for x, y, av plus the isometry/flatness terms.
struct EncoderTerms {
  ad::Var zx, zy;
  ad::Var value;  // scalar mean of gamma + lambda |d2|^2
  double isometry = 0.0;
  double flatness = 0.0;
};

EncoderTerms build_encoder_terms(ad::Tape& t, const nn::MlpVars& enc,
                                 const nn::MlpSpec& enc_spec, const BatchVars& batch,
                                 double lambda) {
  if (batch.dist.size() == 0) throw std::invalid_argument("encoder_loss: empty batch");
  for (int i = 0; i < batch.dist.size(); ++i)
    if (!(batch.dist[i] > 0.0))
      throw std::invalid_argument("encoder_loss: nonpositive pair distance");

  EncoderTerms out;
  out.zx = nn::forward(t, enc, enc_spec, batch.x);
  out.zy = nn::forward(t, enc, enc_spec, batch.y);
  const ad::Var zav = nn::forward(t, enc, enc_spec, batch.av);

  const Eigen::VectorXd inv_d = batch.dist.cwiseInverse();
  const ad::Var d1 = scale_rows(t, sub(t, out.zy, out.zx), inv_d);
  const ad::Var s = row_sumsq(t, d1);
  if (t.value(s).minCoeff() < kCollapseNorm * kCollapseNorm)
    throw EncoderCollapseError("encoder collapse: |d1| below 1e-8 on a batch element");
  const ad::Var gam = add_scalar(t, add(t, s, reciprocal(t, s)), -2.0);

  const Eigen::VectorXd inv_d2 = (8.0 * inv_d.array() * inv_d.array()).matrix();
  const ad::Var midgap = sub(t, scale(t, add(t, out.zx, out.zy), 0.5), zav);
  const ad::Var d2 = scale_rows(t, midgap, inv_d2);
  const ad::Var f = row_sumsq(t, d2);

  out.value = mean_all(t, add(t, gam, scale(t, f, lambda)));
  out.isometry = t.value(gam).mean();
  out.flatness = lambda * t.value(f).mean();
  return out;
}

// |dec(z) - target|^2 summed per row, then averaged over the batch, for both
// endpoints.
ad::Var build_recon_term(ad::Tape& t, ad::Var zx, ad::Var zy, const nn::MlpVars& dec,
                         const nn::MlpSpec& dec_spec, const BatchVars& batch) {
  const ad::Var rx = nn::forward(t, dec, dec_spec, zx);
  const ad::Var ry = nn::forward(t, dec, dec_spec, zy);
  const ad::Var ex = row_sumsq(t, sub(t, rx, batch.x));
  const ad::Var ey = row_sumsq(t, sub(t, ry, batch.y));
  return mean_all(t, add(t, ex, ey));
}

}  // namespace

double encoder_energy_value(const Eigen::MatrixXd& zx, const Eigen::MatrixXd& zy,
                            const Eigen::MatrixXd& zav, const Eigen::VectorXd& dist,
                            double lambda) {
  if (zx.rows() != dist.size()) throw std::invalid_argument("encoder_energy_value: row mismatch");
  double total = 0.0;
  for (int i = 0; i < dist.size(); ++i)
    total += pair_energy(zx.row(i).transpose(), zy.row(i).transpose(), zav.row(i).transpose(),
                         dist[i], lambda);
  return total / static_cast<double>(dist.size());
}

TripletBatch to_batch(const std::vector<img::Triplet>& records) {
  if (records.empty()) throw std::invalid_argument("to_batch: no records");
  const int n = records[0].x.size();
  TripletBatch b;
  b.x.resize(static_cast<int>(records.size()), n);
  b.y.resize(static_cast<int>(records.size()), n);
  b.av.resize(static_cast<int>(records.size()), n);
  b.dist.resize(static_cast<int>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.x.size() != n || r.y.size() != n || r.av.size() != n)
      throw std::invalid_argument("to_batch: inconsistent image shapes");
    b.x.row(static_cast<int>(i)) = r.x.pixels.cast<double>().transpose();
    b.y.row(static_cast<int>(i)) = r.y.pixels.cast<double>().transpose();
    b.av.row(static_cast<int>(i)) = r.av.pixels.cast<double>().transpose();
    b.dist[static_cast<int>(i)] = r.dist;
  }
  return b;
}

BatchVars bind_batch(ad::Tape& t, const TripletBatch& batch) {
  BatchVars v;
  v.x = t.constant(batch.x);
  v.y = t.constant(batch.y);
  v.av = t.constant(batch.av);
  v.dist = batch.dist;
  return v;
}

ad::Var encoder_loss(ad::Tape& t, const nn::MlpVars& enc, const nn::MlpSpec& enc_spec,
                     const BatchVars& batch, const LossConfig& cfg, LossParts* parts) {
  const EncoderTerms terms = build_encoder_terms(t, enc, enc_spec, batch, cfg.lambda);
  if (parts) {
    parts->isometry = terms.isometry;
    parts->flatness = terms.flatness;
  }
  return terms.value;
}

ad::Var recon_loss(ad::Tape& t, const nn::MlpVars& enc, const nn::MlpSpec& enc_spec,
                   const nn::MlpVars& dec, const nn::MlpSpec& dec_spec, const BatchVars& batch,
                   LossParts* parts) {
  const ad::Var zx = nn::forward(t, enc, enc_spec, batch.x);
  const ad::Var zy = nn::forward(t, enc, enc_spec, batch.y);
  const ad::Var r = build_recon_term(t, zx, zy, dec, dec_spec, batch);
  if (parts) parts->reconstruction = t.value(r)(0, 0);
  return r;
}

ad::Var total_loss(ad::Tape& t, const nn::MlpVars& enc, const nn::MlpSpec& enc_spec,
                   const nn::MlpVars& dec, const nn::MlpSpec& dec_spec, const BatchVars& batch,
                   const LossConfig& cfg, LossParts* parts) {
  const EncoderTerms terms = build_encoder_terms(t, enc, enc_spec, batch, cfg.lambda);
  const ad::Var r = build_recon_term(t, terms.zx, terms.zy, dec, dec_spec, batch);
  if (parts) {
    parts->isometry = terms.isometry;
    parts->flatness = terms.flatness;
    parts->reconstruction = cfg.kappa * t.value(r)(0, 0);
  }
  return add(t, terms.value, scale(t, r, cfg.kappa));
}

}  // namespace lbld::loss
