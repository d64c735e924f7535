#include "actnorm/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <utility>

#include "actnorm/activation.hpp"
#include "actnorm/errors.hpp"

namespace actnorm {

namespace {

void check_layer_finite(const Matrix& m, const char* stage, std::size_t layer) {
  if (!m.all_finite()) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "divergence: non-finite %s at layer %zu", stage, layer);
    throw numeric_error(buf);
  }
}

void add_row_bias(Matrix& m, const std::vector<double>& bias) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += bias[j];
  }
}

void apply_activation(const Activation& act, const Matrix& pre, Matrix& post) {
  post = Matrix(pre.rows(), pre.cols());
  const double* in = pre.data();
  double* out = post.data();
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = act.value(in[i]);
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) s[j] += r[j];
  }
  return s;
}

// Logits without caching the intermediate layers; used for accuracy sweeps.
Matrix predict_logits(const MlpModel& m, const Matrix& x) {
  const Activation& act = get(m.activation);
  Matrix cur = kernels::matmul_nt(x, m.input_proj);
  add_row_bias(cur, m.input_bias);
  check_layer_finite(cur, "pre-activation", 0);
  Matrix post;
  apply_activation(act, cur, post);
  for (std::size_t l = 0; l < m.depth; ++l) {
    cur = kernels::matmul_nt(post, m.hidden[l]);
    add_row_bias(cur, m.hidden_bias[l]);
    check_layer_finite(cur, "pre-activation", l + 1);
    apply_activation(act, cur, post);
  }
  Matrix logits = kernels::matmul_nt(post, m.head);
  add_row_bias(logits, m.head_bias);
  check_layer_finite(logits, "logits", m.depth + 1);
  return logits;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double entry_std,
                       std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix w(rows, cols);
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = entry_std * gauss(rng);
  return w;
}

// Orthonormal rows when the matrix is wide, orthonormal columns when tall.
Matrix orthogonal_rect(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  if (rows == cols) return haar_orthogonal(rows, rng);
  if (rows < cols) return haar_orthonormal_rows(rows, cols, rng);
  return transpose(haar_orthonormal_rows(cols, rows, rng));
}

struct Velocity {
  Matrix input_proj;
  std::vector<Matrix> hidden;
  Matrix head;
  std::vector<double> input_bias;
  std::vector<std::vector<double>> hidden_bias;
  std::vector<double> head_bias;
};

void axpy(Matrix& w, const Matrix& g, double scale) {
  double* wd = w.data();
  const double* gd = g.data();
  for (std::size_t i = 0; i < w.size(); ++i) wd[i] += scale * gd[i];
}

void axpy(std::vector<double>& w, const std::vector<double>& g, double scale) {
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += scale * g[i];
}

void momentum_step(Matrix& w, Matrix& v, const Matrix& g, double lr, double mu) {
  if (v.size() != w.size()) v = Matrix(w.rows(), w.cols());
  double* vd = v.data();
  const double* gd = g.data();
  double* wd = w.data();
  for (std::size_t i = 0; i < w.size(); ++i) {
    vd[i] = mu * vd[i] - lr * gd[i];
    wd[i] += vd[i];
  }
}

void momentum_step(std::vector<double>& w, std::vector<double>& v, const std::vector<double>& g,
                   double lr, double mu) {
  if (v.size() != w.size()) v.assign(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = mu * v[i] - lr * g[i];
    w[i] += v[i];
  }
}

}  // namespace

init_scheme parse_init_scheme(const std::string& name) {
  if (name == "orthogonal") return init_scheme::orthogonal;
  if (name == "gaussian") return init_scheme::gaussian;
  throw validation_error("init scheme must be 'orthogonal' or 'gaussian', got '" + name + "'");
}

std::string init_scheme_name(init_scheme s) {
  return s == init_scheme::orthogonal ? "orthogonal" : "gaussian";
}

MlpModel init_model(std::size_t input_dim, std::size_t width, std::size_t depth,
                    std::size_t classes, const std::string& activation, init_scheme init,
                    double sigma_w, std::uint64_t seed) {
  if (depth < 1) throw validation_error("init_model: depth must be at least 1");
  if (width < 2) throw validation_error("init_model: width must be at least 2");
  if (input_dim == 0) throw validation_error("init_model: input_dim must be positive");
  if (classes < 2) throw validation_error("init_model: need at least 2 classes");
  if (!(sigma_w > 0.0)) throw validation_error("init_model: sigma_w must be positive");
  get(activation);  // rejects unknown names before any compute

  MlpModel m;
  m.input_dim = input_dim;
  m.width = width;
  m.depth = depth;
  m.classes = classes;
  m.activation = activation;
  m.init = init;
  m.sigma_w = sigma_w;

  std::mt19937_64 rng(seed);
  if (init == init_scheme::orthogonal) {
    m.input_proj = orthogonal_rect(width, input_dim, rng);
    m.hidden.reserve(depth);
    for (std::size_t l = 0; l < depth; ++l) m.hidden.push_back(haar_orthogonal(width, rng));
    m.head = orthogonal_rect(classes, width, rng);
  } else {
    m.input_proj =
        gaussian_matrix(width, input_dim, sigma_w / std::sqrt(static_cast<double>(input_dim)), rng);
    const double hidden_std = sigma_w / std::sqrt(static_cast<double>(width));
    m.hidden.reserve(depth);
    for (std::size_t l = 0; l < depth; ++l)
      m.hidden.push_back(gaussian_matrix(width, width, hidden_std, rng));
    m.head = gaussian_matrix(classes, width, hidden_std, rng);
  }
  m.input_bias.assign(width, 0.0);
  m.hidden_bias.assign(depth, std::vector<double>(width, 0.0));
  m.head_bias.assign(classes, 0.0);
  return m;
}

ForwardCache forward(const MlpModel& m, const Matrix& batch) {
  if (batch.cols() != m.input_dim)
    throw validation_error("forward: batch feature dimension does not match input_dim");
  if (!batch.all_finite()) throw numeric_error("forward: non-finite input batch");
  const Activation& act = get(m.activation);

  ForwardCache c;
  c.pre.resize(m.depth + 1);
  c.post.resize(m.depth + 1);
  c.pre[0] = kernels::matmul_nt(batch, m.input_proj);
  add_row_bias(c.pre[0], m.input_bias);
  check_layer_finite(c.pre[0], "pre-activation", 0);
  apply_activation(act, c.pre[0], c.post[0]);
  for (std::size_t l = 1; l <= m.depth; ++l) {
    c.pre[l] = kernels::matmul_nt(c.post[l - 1], m.hidden[l - 1]);
    add_row_bias(c.pre[l], m.hidden_bias[l - 1]);
    check_layer_finite(c.pre[l], "pre-activation", l);
    apply_activation(act, c.pre[l], c.post[l]);
  }
  c.logits = kernels::matmul_nt(c.post[m.depth], m.head);
  add_row_bias(c.logits, m.head_bias);
  check_layer_finite(c.logits, "logits", m.depth + 1);
  return c;
}

Gradients backward(const MlpModel& m, const ForwardCache& cache, const Matrix& batch,
                   const std::vector<int>& labels) {
  const std::size_t n = batch.rows();
  if (labels.size() != n) throw validation_error("backward: label count does not match batch");
  if (cache.logits.rows() != n) throw validation_error("backward: cache does not match batch");
  const Activation& act = get(m.activation);

  // Softmax cross-entropy: d = (p - onehot) / n and the mean log loss.
  Matrix d(n, m.classes);
  long double loss_acc = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= m.classes)
      throw validation_error("backward: label out of range");
    const double* row = cache.logits.row(i);
    double mx = row[0];
    for (std::size_t j = 1; j < m.classes; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < m.classes; ++j) z += std::exp(row[j] - mx);
    loss_acc += -(static_cast<long double>(row[y] - mx) - std::log(z));
    for (std::size_t j = 0; j < m.classes; ++j)
      d(i, j) = (std::exp(row[j] - mx) / z - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) /
                static_cast<double>(n);
  }

  Gradients g;
  g.loss = static_cast<double>(loss_acc / n);
  g.head = kernels::matmul_tn(d, cache.post[m.depth]);
  g.head_bias = column_sums(d);
  check_layer_finite(g.head, "gradient", m.depth + 1);

  Matrix delta = kernels::matmul_nn(d, m.head);
  auto mask_derivative = [&](Matrix& dl, const Matrix& pre) {
    double* dd = dl.data();
    const double* pp = pre.data();
    for (std::size_t i = 0; i < dl.size(); ++i) dd[i] *= act.derivative(pp[i]);
  };
  mask_derivative(delta, cache.pre[m.depth]);

  g.hidden.resize(m.depth);
  g.hidden_bias.resize(m.depth);
  for (std::size_t l = m.depth; l >= 1; --l) {
    g.hidden[l - 1] = kernels::matmul_tn(delta, cache.post[l - 1]);
    g.hidden_bias[l - 1] = column_sums(delta);
    check_layer_finite(g.hidden[l - 1], "gradient", l);
    delta = kernels::matmul_nn(delta, m.hidden[l - 1]);
    mask_derivative(delta, cache.pre[l - 1]);
  }
  g.input_proj = kernels::matmul_tn(delta, batch);
  g.input_bias = column_sums(delta);
  check_layer_finite(g.input_proj, "gradient", 0);
  return g;
}

double accuracy(const MlpModel& m, const Matrix& x, const std::vector<int>& y) {
  if (x.rows() != y.size()) throw validation_error("accuracy: label count does not match rows");
  if (x.rows() == 0) throw validation_error("accuracy: empty evaluation set");
  const Matrix logits = predict_logits(m, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* row = logits.row(i);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < m.classes; ++j)
      if (row[j] > row[arg]) arg = j;
    if (static_cast<int>(arg) == y[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(x.rows());
}

TrainLog train(TrainState& state, const Dataset& data, std::size_t epochs) {
  MlpModel& m = state.model;
  if (data.train_x.cols() != m.input_dim)
    throw validation_error("train: dataset input_dim does not match model");
  if (data.classes != m.classes)
    throw validation_error("train: dataset class count does not match model");
  if (state.sgd.batch_size == 0) throw validation_error("train: batch size must be positive");
  if (!(state.sgd.learning_rate > 0.0))
    throw validation_error("train: learning rate must be positive");

  const std::size_t n = data.train_x.rows();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  Velocity vel;
  vel.hidden.resize(m.depth);
  vel.hidden_bias.resize(m.depth);
  const double mu = state.sgd.momentum;
  const double lr = state.sgd.learning_rate;

  TrainLog log;
  for (std::size_t ep = 0; ep < epochs; ++ep) {
    try {
      std::shuffle(order.begin(), order.end(), state.rng);
      long double loss_sum = 0.0L;
      std::size_t loss_count = 0;
      for (std::size_t start = 0; start < n; start += state.sgd.batch_size) {
        const std::size_t bn = std::min(state.sgd.batch_size, n - start);
        Matrix bx(bn, m.input_dim);
        std::vector<int> by(bn);
        for (std::size_t i = 0; i < bn; ++i) {
          const std::size_t src = order[start + i];
          std::memcpy(bx.row(i), data.train_x.row(src), m.input_dim * sizeof(double));
          by[i] = data.train_y[src];
        }
        const ForwardCache cache = forward(m, bx);
        const Gradients g = backward(m, cache, bx, by);
        loss_sum += static_cast<long double>(g.loss) * bn;
        loss_count += bn;
        if (mu == 0.0) {
          axpy(m.input_proj, g.input_proj, -lr);
          axpy(m.input_bias, g.input_bias, -lr);
          for (std::size_t l = 0; l < m.depth; ++l) {
            axpy(m.hidden[l], g.hidden[l], -lr);
            axpy(m.hidden_bias[l], g.hidden_bias[l], -lr);
          }
          axpy(m.head, g.head, -lr);
          axpy(m.head_bias, g.head_bias, -lr);
        } else {
          momentum_step(m.input_proj, vel.input_proj, g.input_proj, lr, mu);
          momentum_step(m.input_bias, vel.input_bias, g.input_bias, lr, mu);
          for (std::size_t l = 0; l < m.depth; ++l) {
            momentum_step(m.hidden[l], vel.hidden[l], g.hidden[l], lr, mu);
            momentum_step(m.hidden_bias[l], vel.hidden_bias[l], g.hidden_bias[l], lr, mu);
          }
          momentum_step(m.head, vel.head, g.head, lr, mu);
          momentum_step(m.head_bias, vel.head_bias, g.head_bias, lr, mu);
        }
      }
      EpochRecord rec;
      rec.epoch = m.epochs_trained + 1;
      rec.loss = static_cast<double>(loss_sum / loss_count);
      rec.train_acc = accuracy(m, data.train_x, data.train_y);
      rec.test_acc = accuracy(m, data.test_x, data.test_y);
      log.epochs.push_back(rec);
      ++m.epochs_trained;
    } catch (const error& e) {
      if (e.code() != errc::numeric) throw;
      log.diverged = true;
      log.failed_epoch = m.epochs_trained + 1;
      break;
    }
  }
  return log;
}

JacobianProduct assemble_jacobian(const MlpModel& m, const std::vector<double>& input) {
  if (m.width > 2048)
    throw validation_error("assemble_jacobian: width exceeds the dense-assembly capacity (2048)");
  if (input.size() != m.input_dim)
    throw validation_error("assemble_jacobian: input length does not match input_dim");
  const Activation& act = get(m.activation);

  Matrix point(1, m.input_dim);
  std::memcpy(point.row(0), input.data(), input.size() * sizeof(double));
  const ForwardCache cache = forward(m, point);

  JacobianProduct jp;
  jp.d_diagonals.resize(m.depth);
  jp.assembled = Matrix::identity(m.width);
  for (std::size_t l = 1; l <= m.depth; ++l) {
    std::vector<double>& d = jp.d_diagonals[l - 1];
    d.resize(m.width);
    const double* pre = cache.pre[l].row(0);
    for (std::size_t j = 0; j < m.width; ++j) d[j] = act.derivative(pre[j]);
    Matrix next = kernels::matmul_nn(m.hidden[l - 1], jp.assembled);
    for (std::size_t i = 0; i < m.width; ++i) {
      double* r = next.row(i);
      for (std::size_t j = 0; j < m.width; ++j) r[j] *= d[i];
    }
    jp.assembled = std::move(next);
  }
  return jp;
}

std::vector<EmpiricalSpectrum> layer_spectra(const MlpModel& m) {
  std::vector<EmpiricalSpectrum> out;
  out.reserve(m.depth);
  for (std::size_t l = 0; l < m.depth; ++l) {
    const Matrix gram = kernels::matmul_nt(m.hidden[l], m.hidden[l]);
    out.push_back(empirical_spectrum(gram, "hidden_weight_gram", static_cast<int>(l + 1),
                                     static_cast<int>(m.epochs_trained)));
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'A', 'C', 'T', 'N', 'M', 'L', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void write_u32(std::ofstream& out, std::uint32_t v) { write_bytes(out, &v, sizeof v); }

void write_matrix(std::ofstream& out, const Matrix& m) {
  write_bytes(out, m.data(), m.size() * sizeof(double));
}

struct reader {
  std::ifstream in;
  std::size_t offset = 0;

  void read_exact(void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "checkpoint: truncated at byte offset %zu", offset);
      throw format_error(buf);
    }
    offset += n;
  }

  std::uint32_t read_u32() {
    std::uint32_t v = 0;
    read_exact(&v, sizeof v);
    return v;
  }

  void read_matrix(Matrix& m, std::size_t rows, std::size_t cols) {
    m = Matrix(rows, cols);
    read_exact(m.data(), m.size() * sizeof(double));
  }
};

}  // namespace

void save_checkpoint(const MlpModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw filesystem_error("checkpoint: cannot open for writing: " + path);
  write_bytes(out, kMagic, sizeof kMagic);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(m.input_dim));
  write_u32(out, static_cast<std::uint32_t>(m.width));
  write_u32(out, static_cast<std::uint32_t>(m.depth));
  write_u32(out, static_cast<std::uint32_t>(m.classes));
  write_u32(out, m.init == init_scheme::orthogonal ? 0u : 1u);
  write_u32(out, static_cast<std::uint32_t>(m.epochs_trained));
  write_bytes(out, &m.sigma_w, sizeof m.sigma_w);
  write_u32(out, static_cast<std::uint32_t>(m.activation.size()));
  write_bytes(out, m.activation.data(), m.activation.size());
  write_matrix(out, m.input_proj);
  for (const Matrix& w : m.hidden) write_matrix(out, w);
  write_matrix(out, m.head);
  write_bytes(out, m.input_bias.data(), m.input_bias.size() * sizeof(double));
  for (const auto& b : m.hidden_bias) write_bytes(out, b.data(), b.size() * sizeof(double));
  write_bytes(out, m.head_bias.data(), m.head_bias.size() * sizeof(double));
  if (!out) throw filesystem_error("checkpoint: write failed: " + path);
}

MlpModel load_checkpoint(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw filesystem_error("checkpoint: no such file: " + path);
  reader r;
  r.in.open(path, std::ios::binary);
  if (!r.in) throw filesystem_error("checkpoint: cannot open: " + path);

  char magic[8];
  r.read_exact(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw format_error("checkpoint: bad magic at byte offset 0");
  const std::uint32_t version = r.read_u32();
  if (version != kVersion) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "checkpoint: unsupported version %u at byte offset 8", version);
    throw format_error(buf);
  }

  MlpModel m;
  m.input_dim = r.read_u32();
  m.width = r.read_u32();
  m.depth = r.read_u32();
  m.classes = r.read_u32();
  const std::uint32_t init_tag = r.read_u32();
  m.epochs_trained = r.read_u32();
  r.read_exact(&m.sigma_w, sizeof m.sigma_w);
  const std::uint32_t act_len = r.read_u32();
  if (m.input_dim == 0 || m.width < 2 || m.depth == 0 || m.classes < 2 || init_tag > 1 ||
      act_len == 0 || act_len > 64) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "checkpoint: invalid header field before byte offset %zu",
                  r.offset);
    throw format_error(buf);
  }
  m.init = init_tag == 0 ? init_scheme::orthogonal : init_scheme::gaussian;
  m.activation.resize(act_len);
  r.read_exact(m.activation.data(), act_len);
  get(m.activation);  // unknown name -> validation error

  r.read_matrix(m.input_proj, m.width, m.input_dim);
  m.hidden.resize(m.depth);
  for (std::size_t l = 0; l < m.depth; ++l) r.read_matrix(m.hidden[l], m.width, m.width);
  r.read_matrix(m.head, m.classes, m.width);
  m.input_bias.resize(m.width);
  r.read_exact(m.input_bias.data(), m.width * sizeof(double));
  m.hidden_bias.assign(m.depth, std::vector<double>(m.width, 0.0));
  for (auto& b : m.hidden_bias) r.read_exact(b.data(), b.size() * sizeof(double));
  m.head_bias.resize(m.classes);
  r.read_exact(m.head_bias.data(), m.classes * sizeof(double));
  return m;
}

}  // namespace actnorm
