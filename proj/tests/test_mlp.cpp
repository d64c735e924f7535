#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "actnorm/dataset.hpp"
#include "actnorm/eigen.hpp"
#include "actnorm/errors.hpp"
#include "actnorm/mlp.hpp"
#include "doctest.h"

using namespace actnorm;
namespace fs = std::filesystem;

namespace {

Dataset easy_blobs(std::size_t classes, std::size_t dim, std::size_t train_n, std::size_t test_n,
                   std::uint64_t seed, double center_scale = 1.0) {
  DatasetDescriptor d;
  d.kind = dataset_kind::synthetic_blobs;
  d.classes = classes;
  d.input_dim = dim;
  d.train_samples = train_n;
  d.test_samples = test_n;
  d.seed = seed;
  d.center_scale = center_scale;
  return load_dataset(d);
}

double loss_at(const MlpModel& m, const Matrix& x, const std::vector<int>& y) {
  return backward(m, forward(m, x), x, y).loss;
}

struct ParamRef {
  double* value;
  double* grad;
};

std::vector<ParamRef> all_params(MlpModel& m, Gradients& g) {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < m.input_proj.size(); ++i)
    out.push_back({m.input_proj.data() + i, g.input_proj.data() + i});
  for (std::size_t l = 0; l < m.depth; ++l)
    for (std::size_t i = 0; i < m.hidden[l].size(); ++i)
      out.push_back({m.hidden[l].data() + i, g.hidden[l].data() + i});
  for (std::size_t i = 0; i < m.head.size(); ++i)
    out.push_back({m.head.data() + i, g.head.data() + i});
  for (std::size_t i = 0; i < m.input_bias.size(); ++i)
    out.push_back({m.input_bias.data() + i, g.input_bias.data() + i});
  for (std::size_t l = 0; l < m.depth; ++l)
    for (std::size_t i = 0; i < m.hidden_bias[l].size(); ++i)
      out.push_back({m.hidden_bias[l].data() + i, g.hidden_bias[l].data() + i});
  for (std::size_t i = 0; i < m.head_bias.size(); ++i)
    out.push_back({m.head_bias.data() + i, g.head_bias.data() + i});
  return out;
}

bool throws_format_error_containing(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
  } catch (const format_error& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  } catch (...) {
    return false;
  }
  return false;
}

}  // namespace

TEST_CASE("init_model validates its arguments") {
  CHECK_THROWS_AS(init_model(8, 8, 0, 4, "relu", init_scheme::orthogonal, 1.0, 1),
                  validation_error);
  CHECK_THROWS_AS(init_model(8, 1, 2, 4, "relu", init_scheme::orthogonal, 1.0, 1),
                  validation_error);
  CHECK_THROWS_AS(init_model(8, 8, 2, 1, "relu", init_scheme::orthogonal, 1.0, 1),
                  validation_error);
  CHECK_THROWS_AS(init_model(8, 8, 2, 4, "relu", init_scheme::orthogonal, 0.0, 1),
                  validation_error);
  CHECK_THROWS_AS(init_model(8, 8, 2, 4, "nope", init_scheme::orthogonal, 1.0, 1),
                  validation_error);
  CHECK_THROWS_AS(parse_init_scheme("diagonal"), validation_error);
  CHECK(init_scheme_name(parse_init_scheme("orthogonal")) == "orthogonal");
}

TEST_CASE("orthogonal init gives exactly flat layer spectra") {
  const MlpModel m = init_model(32, 32, 6, 5, "tilted_relu", init_scheme::orthogonal, 1.0, 77);
  const auto spectra = layer_spectra(m);
  REQUIRE(spectra.size() == 6);
  for (std::size_t l = 0; l < spectra.size(); ++l) {
    CHECK(spectra[l].layer == static_cast<int>(l + 1));
    CHECK(spectra[l].epoch == 0);
    for (double ev : spectra[l].eigenvalues) CHECK(std::fabs(ev - 1.0) < 1e-8);
  }
}

TEST_CASE("gaussian init hits the requested entry variance") {
  const double sigma_w = 1.5;
  const MlpModel m = init_model(256, 256, 1, 4, "tanh", init_scheme::gaussian, sigma_w, 3);
  long double sum = 0.0L, sq = 0.0L;
  const Matrix& w = m.hidden[0];
  for (std::size_t i = 0; i < w.size(); ++i) {
    sum += w.data()[i];
    sq += static_cast<long double>(w.data()[i]) * w.data()[i];
  }
  const double mean = static_cast<double>(sum) / w.size();
  const double var = static_cast<double>(sq) / w.size() - mean * mean;
  const double target = sigma_w * sigma_w / 256.0;
  CHECK(std::fabs(var - target) / target < 0.05);
}

TEST_CASE("init is reproducible by seed") {
  const MlpModel a = init_model(16, 16, 3, 4, "relu", init_scheme::orthogonal, 1.0, 5);
  const MlpModel b = init_model(16, 16, 3, 4, "relu", init_scheme::orthogonal, 1.0, 5);
  const MlpModel c = init_model(16, 16, 3, 4, "relu", init_scheme::orthogonal, 1.0, 6);
  CHECK(std::memcmp(a.hidden[2].data(), b.hidden[2].data(),
                    a.hidden[2].size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.hidden[2].data(), c.hidden[2].data(),
                    a.hidden[2].size() * sizeof(double)) != 0);
}

TEST_CASE("forward pass matches a hand computation") {
  MlpModel m = init_model(2, 2, 1, 2, "relu", init_scheme::orthogonal, 1.0, 1);
  m.input_proj = Matrix::identity(2);
  m.input_bias = {0.1, -0.2};
  m.hidden[0] = Matrix(2, 2);
  m.hidden[0](0, 1) = 1.0;
  m.hidden[0](1, 0) = 1.0;
  m.hidden_bias[0] = {0.0, 0.0};
  m.head = Matrix::identity(2);
  m.head_bias = {0.0, 0.0};

  Matrix x(1, 2);
  x(0, 0) = 0.5;
  x(0, 1) = -1.0;
  const ForwardCache cache = forward(m, x);
  REQUIRE(cache.pre.size() == 2);
  CHECK(cache.pre[0](0, 0) == doctest::Approx(0.6));
  CHECK(cache.pre[0](0, 1) == doctest::Approx(-1.2));
  CHECK(cache.post[0](0, 0) == doctest::Approx(0.6));
  CHECK(cache.post[0](0, 1) == 0.0);
  CHECK(cache.post[1](0, 0) == 0.0);
  CHECK(cache.post[1](0, 1) == doctest::Approx(0.6));
  CHECK(cache.logits(0, 0) == 0.0);
  CHECK(cache.logits(0, 1) == doctest::Approx(0.6));
}

TEST_CASE("backprop matches central finite differences") {
  std::mt19937_64 rng(123);
  for (const char* act : {"relu", "tilted_relu", "tanh", "gelu"}) {
    MlpModel m = init_model(6, 8, 3, 3, act, init_scheme::orthogonal, 1.0, 9);
    Matrix x(16, 6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
    std::vector<int> y(16);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 3);

    // With all-zero biases a sample whose first relu layer goes fully dead
    // leaves every deeper pre-activation at exactly 0, parking the model on
    // the kink where only a subgradient exists. Jitter the biases so the base
    // point is differentiable and the check is well posed.
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (double& b : m.input_bias) b = jitter(rng);
    for (auto& layer : m.hidden_bias)
      for (double& b : layer) b = jitter(rng);
    for (double& b : m.head_bias) b = jitter(rng);

    Gradients g = backward(m, forward(m, x), x, y);
    auto params = all_params(m, g);
    std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);

    // Central differences are meaningless when the stencil straddles an
    // activation kink, so a parameter whose h and h/2 stencils disagree is
    // resampled. A genuine backprop bug cannot hide behind this: both stencils
    // measure the true loss, so they stay consistent with each other and the
    // mismatch against the analytic gradient would survive.
    const auto fd_at = [&](double* value, double saved, double h) {
      *value = saved + h;
      const double up = loss_at(m, x, y);
      *value = saved - h;
      const double down = loss_at(m, x, y);
      *value = saved;
      return (up - down) / (2.0 * h);
    };
    int valid = 0;
    for (int attempt = 0; attempt < 2000 && valid < 25; ++attempt) {
      ParamRef p = params[pick(rng)];
      const double saved = *p.value;
      const double h = 1e-5 * std::max(1.0, std::fabs(saved));
      const double fd_full = fd_at(p.value, saved, h);
      const double fd_half = fd_at(p.value, saved, h / 2.0);
      if (std::fabs(fd_full - fd_half) > 1e-7 * std::max(1.0, std::fabs(fd_full))) continue;
      ++valid;
      const double rel = std::fabs(fd_half - *p.grad) / std::max(1e-6, std::fabs(*p.grad));
      CHECK(rel < 1e-5);
    }
    CHECK(valid == 25);
  }
}

TEST_CASE("training is deterministic and learns an easy task") {
  const Dataset data = easy_blobs(4, 16, 256, 256, 11);
  SgdOptions sgd;
  sgd.learning_rate = 0.05;
  sgd.batch_size = 64;

  TrainState s1(init_model(16, 16, 2, 4, "tanh", init_scheme::orthogonal, 1.0, 21), sgd, 99);
  TrainState s2(init_model(16, 16, 2, 4, "tanh", init_scheme::orthogonal, 1.0, 21), sgd, 99);
  const TrainLog l1 = train(s1, data, 5);
  const TrainLog l2 = train(s2, data, 5);
  REQUIRE(l1.epochs.size() == 5);
  for (std::size_t e = 0; e < 5; ++e) {
    CHECK(l1.epochs[e].loss == l2.epochs[e].loss);  // bitwise reproducible
    CHECK(l1.epochs[e].test_acc == l2.epochs[e].test_acc);
    CHECK(l1.epochs[e].epoch == e + 1);
  }
  CHECK(l1.epochs.back().loss < l1.epochs.front().loss);
  CHECK(l1.epochs.back().test_acc > 0.5);
  CHECK(s1.model.epochs_trained == 5);
  CHECK_FALSE(l1.diverged);
}

TEST_CASE("momentum accelerates the same loop deterministically") {
  const Dataset data = easy_blobs(4, 16, 256, 128, 12);
  SgdOptions sgd;
  sgd.learning_rate = 0.02;
  sgd.momentum = 0.9;
  sgd.batch_size = 64;
  TrainState s(init_model(16, 16, 2, 4, "tanh", init_scheme::orthogonal, 1.0, 22), sgd, 100);
  const TrainLog log = train(s, data, 5);
  CHECK(log.epochs.back().loss < log.epochs.front().loss);
  CHECK_FALSE(log.diverged);
}

TEST_CASE("divergence is recorded instead of thrown") {
  const Dataset data = easy_blobs(4, 16, 128, 64, 13);
  SgdOptions sgd;
  sgd.learning_rate = 1e9;
  sgd.batch_size = 64;
  TrainState s(init_model(16, 16, 2, 4, "relu", init_scheme::gaussian, 1.0, 23), sgd, 101);
  const TrainLog log = train(s, data, 5);
  CHECK(log.diverged);
  CHECK(log.failed_epoch >= 1);
  CHECK(log.epochs.size() < 5);
}

TEST_CASE("depth-1 networks train for every activation and seed") {
  // Wide class separation: at center_scale 1 some 16-dim center draws overlap
  // enough that even the Bayes rule misses the bar this test sets.
  const Dataset data = easy_blobs(4, 16, 256, 128, 14, 2.0);
  for (const char* act : {"relu", "tilted_relu", "abs", "tanh"}) {
    for (std::uint64_t seed : {31ULL, 32ULL, 33ULL}) {
      SgdOptions sgd;
      sgd.learning_rate = 0.03;
      sgd.batch_size = 64;
      TrainState s(init_model(16, 16, 1, 4, act, init_scheme::orthogonal, 1.0, seed), sgd,
                   seed + 100);
      const TrainLog log = train(s, data, 10);
      double best = 0.0;
      for (const auto& r : log.epochs) best = std::max(best, r.test_acc);
      CHECK(best >= 0.5);  // 2x chance for 4 classes
    }
  }
}

TEST_CASE("shallow relu clears ninety percent quickly") {
  const Dataset data = easy_blobs(10, 64, 1280, 512, 15);
  SgdOptions sgd;
  sgd.learning_rate = 0.03;
  sgd.batch_size = 128;
  TrainState s(init_model(64, 64, 4, 10, "relu", init_scheme::orthogonal, 1.0, 41), sgd, 141);
  const TrainLog log = train(s, data, 20);
  double best = 0.0;
  for (const auto& r : log.epochs) best = std::max(best, r.test_acc);
  CHECK(best > 0.9);
}

TEST_CASE("jacobian product matches finite differences on a smooth stack") {
  const MlpModel m = init_model(12, 12, 3, 4, "tanh", init_scheme::orthogonal, 1.0, 55);
  std::mt19937_64 rng(56);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> input(12);
  for (double& v : input) v = gauss(rng);

  const JacobianProduct jp = assemble_jacobian(m, input);
  REQUIRE(jp.d_diagonals.size() == 3);
  REQUIRE(jp.assembled.rows() == 12);

  // Stack map u0 -> u3 evaluated by hand for the finite-difference probe.
  const Activation& f = get("tanh");
  const auto stack = [&](const std::vector<double>& u0) {
    std::vector<double> u = u0;
    for (std::size_t l = 0; l < m.depth; ++l) {
      std::vector<double> next(m.width, 0.0);
      for (std::size_t i = 0; i < m.width; ++i) {
        double acc = m.hidden_bias[l][i];
        for (std::size_t j = 0; j < m.width; ++j) acc += m.hidden[l](i, j) * u[j];
        next[i] = f.value(acc);
      }
      u = next;
    }
    return u;
  };

  // Base point: the post-activation of the input projection at `input`.
  Matrix x(1, 12);
  for (std::size_t i = 0; i < 12; ++i) x(0, i) = input[i];
  const ForwardCache cache = forward(m, x);
  std::vector<double> u0(12);
  for (std::size_t i = 0; i < 12; ++i) u0[i] = cache.post[0](0, i);

  std::vector<double> dir(12);
  for (double& v : dir) v = gauss(rng);
  const double eps = 1e-6;
  std::vector<double> up = u0, down = u0;
  for (std::size_t i = 0; i < 12; ++i) {
    up[i] += eps * dir[i];
    down[i] -= eps * dir[i];
  }
  const std::vector<double> f_up = stack(up);
  const std::vector<double> f_down = stack(down);
  for (std::size_t i = 0; i < 12; ++i) {
    double jv = 0.0;
    for (std::size_t j = 0; j < 12; ++j) jv += jp.assembled(i, j) * dir[j];
    const double fd = (f_up[i] - f_down[i]) / (2.0 * eps);
    CHECK(std::fabs(jv - fd) < 1e-4);
  }
}

TEST_CASE("sign activations with orthogonal weights give dynamical isometry") {
  const MlpModel m = init_model(64, 64, 10, 10, "tilted_relu", init_scheme::orthogonal, 1.0, 91);
  std::mt19937_64 rng(92);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> input(64);
  for (double& v : input) v = gauss(rng);
  const JacobianProduct jp = assemble_jacobian(m, input);
  const Matrix gram = kernels::matmul_nt(jp.assembled, jp.assembled);
  const auto ev = symmetric_eigenvalues(gram);
  for (double v : ev) CHECK(std::fabs(std::sqrt(v) - 1.0) < 1e-6);
}

TEST_CASE("checkpoints round trip bitwise") {
  const fs::path path = fs::temp_directory_path() / "actnorm_test_ckpt.bin";
  MlpModel m = init_model(12, 16, 3, 5, "gelu", init_scheme::gaussian, 1.2, 7);
  m.epochs_trained = 9;
  save_checkpoint(m, path.string());
  const MlpModel back = load_checkpoint(path.string());
  CHECK(back.input_dim == 12);
  CHECK(back.width == 16);
  CHECK(back.depth == 3);
  CHECK(back.classes == 5);
  CHECK(back.activation == "gelu");
  CHECK(back.init == init_scheme::gaussian);
  CHECK(back.sigma_w == 1.2);
  CHECK(back.epochs_trained == 9);
  CHECK(std::memcmp(back.input_proj.data(), m.input_proj.data(),
                    m.input_proj.size() * sizeof(double)) == 0);
  for (std::size_t l = 0; l < 3; ++l)
    CHECK(std::memcmp(back.hidden[l].data(), m.hidden[l].data(),
                      m.hidden[l].size() * sizeof(double)) == 0);
  CHECK(back.head_bias == m.head_bias);
  fs::remove(path);
}

TEST_CASE("checkpoint loader reports malformed files precisely") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/model.bin"), filesystem_error);

  const fs::path bad_magic = fs::temp_directory_path() / "actnorm_bad_magic.bin";
  {
    std::ofstream out(bad_magic, std::ios::binary);
    out << "NOTMAGIC" << std::string(64, '\0');
  }
  CHECK(throws_format_error_containing([&] { load_checkpoint(bad_magic.string()); },
                                       "byte offset 0"));
  fs::remove(bad_magic);

  const fs::path truncated = fs::temp_directory_path() / "actnorm_truncated.bin";
  {
    MlpModel m = init_model(8, 8, 2, 3, "relu", init_scheme::orthogonal, 1.0, 1);
    save_checkpoint(m, truncated.string());
    fs::resize_file(truncated, 100);
  }
  CHECK(throws_format_error_containing([&] { load_checkpoint(truncated.string()); },
                                       "byte offset"));
  fs::remove(truncated);
}
