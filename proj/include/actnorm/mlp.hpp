#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "actnorm/dataset.hpp"
#include "actnorm/matrix.hpp"
#include "actnorm/spectral.hpp"

namespace actnorm {

enum class init_scheme { orthogonal, gaussian };

init_scheme parse_init_scheme(const std::string& name);
std::string init_scheme_name(init_scheme s);

// Feedforward network: input projection, `depth` square hidden layers, linear
// classification head. The activation follows the input projection and every
// hidden layer; the head stays linear.
struct MlpModel {
  std::size_t input_dim = 0;
  std::size_t width = 0;
  std::size_t depth = 0;
  std::size_t classes = 0;
  std::string activation;
  init_scheme init = init_scheme::orthogonal;
  double sigma_w = 1.0;
  std::size_t epochs_trained = 0;

  Matrix input_proj;            // width x input_dim
  std::vector<Matrix> hidden;   // depth matrices, width x width
  Matrix head;                  // classes x width
  std::vector<double> input_bias;
  std::vector<std::vector<double>> hidden_bias;
  std::vector<double> head_bias;
};

MlpModel init_model(std::size_t input_dim, std::size_t width, std::size_t depth,
                    std::size_t classes, const std::string& activation, init_scheme init,
                    double sigma_w, std::uint64_t seed);

// pre[l] / post[l] for l = 0 (input projection) .. depth (last hidden).
struct ForwardCache {
  Matrix logits;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

ForwardCache forward(const MlpModel& m, const Matrix& batch);

struct Gradients {
  Matrix input_proj;
  std::vector<Matrix> hidden;
  Matrix head;
  std::vector<double> input_bias;
  std::vector<std::vector<double>> hidden_bias;
  std::vector<double> head_bias;
  double loss = 0.0;
};

// Softmax cross-entropy backprop; returns all parameter gradients plus the
// mean batch loss.
Gradients backward(const MlpModel& m, const ForwardCache& cache, const Matrix& batch,
                   const std::vector<int>& labels);

struct SgdOptions {
  double learning_rate = 0.01;
  double momentum = 0.0;
  std::size_t batch_size = 128;
};

struct TrainState {
  MlpModel model;
  SgdOptions sgd;
  std::uint64_t seed = 0;
  std::mt19937_64 rng;

  TrainState(MlpModel m, SgdOptions opt, std::uint64_t s)
      : model(std::move(m)), sgd(opt), seed(s), rng(s) {}
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  std::size_t failed_epoch = 0;
};

// Plain SGD over shuffled minibatches. A divergence error aborts the run and
// marks the log; the records collected so far are kept.
TrainLog train(TrainState& state, const Dataset& data, std::size_t epochs);

double accuracy(const MlpModel& m, const Matrix& x, const std::vector<int>& y);

// Input-output Jacobian through the square stack only:
// J = D_L W_L ... D_1 W_1 with D_l = diag(f'(h_l)).
struct JacobianProduct {
  std::vector<std::vector<double>> d_diagonals;  // one per square layer
  Matrix assembled;                              // width x width
};

JacobianProduct assemble_jacobian(const MlpModel& m, const std::vector<double>& input);

// W_l W_l^T spectrum for each square layer, tagged with layer index (1-based)
// and the model's trained-epoch counter.
std::vector<EmpiricalSpectrum> layer_spectra(const MlpModel& m);

void save_checkpoint(const MlpModel& m, const std::string& path);
MlpModel load_checkpoint(const std::string& path);

}  // namespace actnorm
