#include "lbld/nn.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace lbld::nn {

void MlpSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("mlp: need at least input and output widths");
  for (int w : widths)
    if (w <= 0) throw std::invalid_argument("mlp: widths must be positive");
}

Mlp kaiming_init(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  Mlp m;
  m.spec = spec;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < spec.layer_count(); ++l) {
    const int fan_in = spec.widths[l];
    const int fan_out = spec.widths[l + 1];
    const double std_dev = std::sqrt(2.0 / (fan_in * (1.0 + spec.leak * spec.leak)));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i)
      for (int j = 0; j < fan_out; ++j) w(i, j) = std_dev * normal(rng);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::MatrixXd::Zero(1, fan_out));
  }
  return m;
}

namespace {

MlpVars bind(ad::Tape& t, const Mlp& m, bool trainable) {
  MlpVars vars;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    vars.params.push_back(trainable ? t.leaf(m.weights[l]) : t.constant(m.weights[l]));
    vars.params.push_back(trainable ? t.leaf(m.biases[l]) : t.constant(m.biases[l]));
  }
  return vars;
}

}  // namespace

MlpVars bind_trainable(ad::Tape& t, const Mlp& m) { return bind(t, m, true); }

MlpVars bind_frozen(ad::Tape& t, const Mlp& m) { return bind(t, m, false); }

ad::Var forward(ad::Tape& t, const MlpVars& vars, const MlpSpec& spec, ad::Var input) {
  if (t.value(input).cols() != spec.input_width())
    throw std::invalid_argument("forward: batch width != input width");
  ad::Var h = input;
  const int layers = spec.layer_count();
  for (int l = 0; l < layers; ++l) {
    h = matmul(t, h, vars.params[2 * l]);
    h = add_row_broadcast(t, h, vars.params[2 * l + 1]);
    if (l + 1 < layers) h = leaky_relu(t, h, spec.leak);
  }
  return h;
}

Eigen::MatrixXd forward_value(const Mlp& m, const Eigen::MatrixXd& input) {
  if (input.cols() != m.spec.input_width())
    throw std::invalid_argument("forward_value: batch width != input width");
  Eigen::MatrixXd h = input;
  const int layers = m.spec.layer_count();
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = h * m.weights[l];
    z.rowwise() += m.biases[l].row(0);
    if (l + 1 < layers) {
      const double leak = m.spec.leak;
      h = z.unaryExpr([leak](double x) { return x > 0.0 ? x : leak * x; });
    } else {
      h = std::move(z);
    }
  }
  return h;
}

std::vector<Eigen::MatrixXd> collect_grads(const ad::Tape& t, const MlpVars& vars) {
  std::vector<Eigen::MatrixXd> grads;
  grads.reserve(vars.params.size());
  for (ad::Var v : vars.params) grads.push_back(t.grad(v));
  return grads;
}

AdamState make_adam_state(const std::vector<const Eigen::MatrixXd*>& params) {
  AdamState s;
  for (const auto* p : params) {
    s.m.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    s.v.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
  }
  return s;
}

void adam_step(AdamState& state, std::vector<Eigen::MatrixXd*> params,
               const std::vector<Eigen::MatrixXd>& grads, const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  for (const auto& g : grads)
    if (!g.allFinite()) throw std::runtime_error("adam_step: non-finite gradient");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::MatrixXd& m = state.m[i];
    Eigen::MatrixXd& v = state.v[i];
    const Eigen::MatrixXd& g = grads[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const Eigen::ArrayXXd mhat = m.array() / bc1;
    const Eigen::ArrayXXd vhat = v.array() / bc2;
    params[i]->array() -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps_hat);
  }
}

std::vector<Eigen::MatrixXd*> param_ptrs(Mlp& m) {
  std::vector<Eigen::MatrixXd*> ptrs;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    ptrs.push_back(&m.weights[l]);
    ptrs.push_back(&m.biases[l]);
  }
  return ptrs;
}

// ---- checkpoint io ----

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  write_u32(os, static_cast<std::uint32_t>(v & 0xffffffffULL));
  write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

std::uint64_t read_u64(std::istream& is) {
  const std::uint64_t lo = read_u32(is);
  const std::uint64_t hi = read_u32(is);
  return lo | (hi << 32);
}

void write_f64(std::ostream& os, double d) { os.write(reinterpret_cast<const char*>(&d), 8); }

double read_f64(std::istream& is) {
  double d;
  is.read(reinterpret_cast<char*>(&d), 8);
  return d;
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) write_f64(os, m(i, j));
}

void read_matrix(std::istream& is, Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = read_f64(is);
}

void write_spec(std::ostream& os, const MlpSpec& spec) {
  write_u32(os, static_cast<std::uint32_t>(spec.widths.size()));
  for (int w : spec.widths) write_u32(os, static_cast<std::uint32_t>(w));
  write_f64(os, spec.leak);
}

MlpSpec read_spec(std::istream& is) {
  MlpSpec spec;
  const std::uint32_t n = read_u32(is);
  spec.widths.resize(n);
  for (auto& w : spec.widths) w = static_cast<int>(read_u32(is));
  spec.leak = read_f64(is);
  spec.validate();
  return spec;
}

Mlp shaped_mlp(const MlpSpec& spec) {
  Mlp m;
  m.spec = spec;
  for (int l = 0; l < spec.layer_count(); ++l) {
    m.weights.emplace_back(spec.widths[l], spec.widths[l + 1]);
    m.biases.emplace_back(1, spec.widths[l + 1]);
  }
  return m;
}

void write_mlp_params(std::ostream& os, const Mlp& m) {
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    write_matrix(os, m.weights[l]);
    write_matrix(os, m.biases[l]);
  }
}

void read_mlp_params(std::istream& is, Mlp& m) {
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    read_matrix(is, m.weights[l]);
    read_matrix(is, m.biases[l]);
  }
}

}  // namespace

void write_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write("LBLM", 4);
  write_u32(os, 1);
  write_spec(os, ck.encoder.spec);
  write_spec(os, ck.decoder.spec);
  write_mlp_params(os, ck.encoder);
  write_mlp_params(os, ck.decoder);
  write_f64(os, ck.adam.lr);
  write_f64(os, ck.adam.beta1);
  write_f64(os, ck.adam.beta2);
  write_f64(os, ck.adam.eps_hat);
  write_u64(os, static_cast<std::uint64_t>(ck.adam_state.step));
  for (const auto& m : ck.adam_state.m) write_matrix(os, m);
  for (const auto& v : ck.adam_state.v) write_matrix(os, v);
  if (!os) throw std::runtime_error("write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "LBLM", 4) != 0) throw std::runtime_error("not a checkpoint: " + path);
  if (read_u32(is) != 1) throw std::runtime_error("unsupported checkpoint version");
  Checkpoint ck;
  ck.encoder = shaped_mlp(read_spec(is));
  ck.decoder = shaped_mlp(read_spec(is));
  read_mlp_params(is, ck.encoder);
  read_mlp_params(is, ck.decoder);
  ck.adam.lr = read_f64(is);
  ck.adam.beta1 = read_f64(is);
  ck.adam.beta2 = read_f64(is);
  ck.adam.eps_hat = read_f64(is);
  ck.adam_state.step = static_cast<long long>(read_u64(is));
  for (const Mlp* m : {&ck.encoder, &ck.decoder})
    for (std::size_t l = 0; l < m->weights.size(); ++l) {
      ck.adam_state.m.emplace_back(m->weights[l].rows(), m->weights[l].cols());
      ck.adam_state.m.emplace_back(1, m->biases[l].cols());
    }
  for (auto& m : ck.adam_state.m) read_matrix(is, m);
  ck.adam_state.v = ck.adam_state.m;  // shapes; values overwritten next
  for (auto& v : ck.adam_state.v) read_matrix(is, v);
  if (!is) throw std::runtime_error("truncated checkpoint: " + path);
  return ck;
}

}  // namespace lbld::nn
