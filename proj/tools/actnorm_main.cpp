#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "actnorm/errors.hpp"
#include "actnorm/experiment.hpp"

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw actnorm::filesystem_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Everything the flags may override; unset members leave the config (file or
// defaults) untouched.
struct Overrides {
  std::optional<std::string> activation, init, checkpoint, dataset_kind, data_path;
  std::optional<std::size_t> depth, width, classes, epochs, batch_size;
  std::optional<std::size_t> hermite_order, mp_matrix_size;
  std::optional<std::size_t> train_samples, test_samples, input_dim;
  std::optional<double> sigma_w, learning_rate, momentum, center_scale, noise;
  std::optional<std::uint64_t> seed, dataset_seed;
  std::vector<std::string> activations;
  std::vector<std::size_t> depths;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> lr_overrides;

  void apply(actnorm::ExperimentConfig& cfg) const {
    if (activation) cfg.activation = *activation;
    if (init) cfg.init = *init;
    if (checkpoint) cfg.checkpoint = *checkpoint;
    if (dataset_kind) cfg.dataset.kind = actnorm::parse_dataset_kind(*dataset_kind);
    if (data_path) cfg.dataset.path = *data_path;
    if (depth) cfg.depth = *depth;
    if (width) cfg.width = *width;
    if (classes) {
      cfg.classes = *classes;
      cfg.dataset.classes = *classes;
    }
    if (epochs) cfg.epochs = *epochs;
    if (batch_size) cfg.batch_size = *batch_size;
    if (hermite_order) cfg.hermite_order = *hermite_order;
    if (mp_matrix_size) cfg.mp_matrix_size = *mp_matrix_size;
    if (train_samples) cfg.dataset.train_samples = *train_samples;
    if (test_samples) cfg.dataset.test_samples = *test_samples;
    if (input_dim) cfg.dataset.input_dim = *input_dim;
    if (sigma_w) cfg.sigma_w = *sigma_w;
    if (learning_rate) cfg.learning_rate = *learning_rate;
    if (momentum) cfg.momentum = *momentum;
    if (center_scale) cfg.dataset.center_scale = *center_scale;
    if (noise) cfg.dataset.noise = *noise;
    if (seed) cfg.seeds = {*seed};
    if (dataset_seed) cfg.dataset.seed = *dataset_seed;
    if (!activations.empty()) cfg.activations = activations;
    if (!depths.empty()) cfg.depths = depths;
    if (!seeds.empty()) cfg.seeds = seeds;
    for (const std::string& o : lr_overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == o.size())
        throw actnorm::validation_error("--lr-override expects name=value, got '" + o + "'");
      try {
        cfg.learning_rate_overrides[o.substr(0, eq)] = std::stod(o.substr(eq + 1));
      } catch (const std::exception&) {
        throw actnorm::validation_error("--lr-override has a bad value in '" + o + "'");
      }
    }
  }
};

void add_model_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--activation", o.activation, "activation name");
  sub->add_option("--depth", o.depth, "hidden layer count");
  sub->add_option("--width", o.width, "hidden layer width");
  sub->add_option("--init", o.init, "weight init: orthogonal or gaussian");
  sub->add_option("--sigma-w", o.sigma_w, "gaussian init scale");
  sub->add_option("--seed", o.seed, "single run seed");
}

void add_train_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--classes", o.classes, "class count");
  sub->add_option("--epochs", o.epochs, "training epochs");
  sub->add_option("--batch-size", o.batch_size, "minibatch size");
  sub->add_option("--lr", o.learning_rate, "base learning rate");
  sub->add_option("--lr-override", o.lr_overrides, "per-activation rate, name=value")
      ->delimiter(',');
  sub->add_option("--momentum", o.momentum, "SGD momentum in [0,1)");
  sub->add_option("--dataset", o.dataset_kind, "synthetic-blobs or cifar10-binary");
  sub->add_option("--data-path", o.data_path, "directory of CIFAR-10 binary batches");
  sub->add_option("--train-samples", o.train_samples, "training split size");
  sub->add_option("--test-samples", o.test_samples, "test split size");
  sub->add_option("--input-dim", o.input_dim, "feature dimension");
  sub->add_option("--center-scale", o.center_scale, "blob center spread");
  sub->add_option("--noise", o.noise, "blob noise level");
  sub->add_option("--dataset-seed", o.dataset_seed, "dataset generator seed");
}

std::string join_argv(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    const std::string arg = argv[i];
    out += arg.find(' ') == std::string::npos ? arg : "'" + arg + "'";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"static activation normalization, spectral diagnostics, and MLP experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // --config / --output-root may follow the subcommand

  std::string config_path, output_root;
  app.add_option("--config", config_path, "JSON config file; flags override its fields");
  app.add_option("--output-root", output_root,
                 "run directory root (default: $ACTNORM_OUTPUT_ROOT, else ./runs)");

  Overrides o;
  std::string normalize_activation;

  CLI::App* table = app.add_subcommand("table", "coefficient table for all activations");
  CLI::App* normalize =
      app.add_subcommand("normalize", "normalization coefficients and curves for one activation");
  normalize->add_option("activation", normalize_activation, "activation to normalize");
  normalize->add_option("--order", o.hermite_order, "expansion truncation order");

  CLI::App* mp_check = app.add_subcommand("mp-check", "Marcenko-Pastur density diagnostics");
  mp_check->add_option("--matrix-size", o.mp_matrix_size, "Wishart sample size");
  mp_check->add_option("--seed", o.seed, "Wishart sample seed");

  CLI::App* train = app.add_subcommand("train", "train one MLP and record logs and spectra");
  add_model_flags(train, o);
  add_train_flags(train, o);

  CLI::App* sweep = app.add_subcommand("depth-sweep", "trainability verdicts across depths");
  sweep->add_option("--activations", o.activations, "activations to sweep")->delimiter(',');
  sweep->add_option("--depths", o.depths, "depths to sweep")->delimiter(',');
  sweep->add_option("--seeds", o.seeds, "run seeds")->delimiter(',');
  sweep->add_option("--width", o.width, "hidden layer width");
  sweep->add_option("--init", o.init, "weight init: orthogonal or gaussian");
  sweep->add_option("--sigma-w", o.sigma_w, "gaussian init scale");
  add_train_flags(sweep, o);

  CLI::App* spectra = app.add_subcommand("spectra", "layer weight-gram spectra of a model");
  spectra->add_option("--checkpoint", o.checkpoint, "model checkpoint to load (else fresh init)");
  add_model_flags(spectra, o);
  spectra->add_option("--input-dim", o.input_dim, "feature dimension for fresh init");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    actnorm::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = actnorm::parse_config_json(read_text_file(config_path));
    if (table->parsed()) cfg.kind = "table";
    if (normalize->parsed()) {
      cfg.kind = "normalize";
      if (!normalize_activation.empty()) cfg.activation = normalize_activation;
    }
    if (mp_check->parsed()) cfg.kind = "mp-check";
    if (train->parsed()) cfg.kind = "train";
    if (sweep->parsed()) cfg.kind = "depth-sweep";
    if (spectra->parsed()) cfg.kind = "spectra";
    o.apply(cfg);

    const std::filesystem::path dir = actnorm::run_experiment(
        cfg, actnorm::resolve_output_root(output_root), join_argv(argc, argv));
    std::cout << dir.string() << "\n";
    return 0;
  } catch (const actnorm::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
