#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "actnorm/dataset.hpp"

namespace actnorm {

// One experiment invocation, fully materialized (defaults filled in) so the
// serialized form is canonical and hashable. The output root is deliberately
// not part of the config: it comes from the CLI flag or the environment, and
// results must not depend on where they are written.
struct ExperimentConfig {
  std::string kind;  // table | normalize | mp-check | train | depth-sweep | spectra

  std::string activation = "relu";
  std::vector<std::string> activations = {"relu", "tilted_relu", "abs", "tanh"};
  std::size_t depth = 5;
  std::vector<std::size_t> depths = {5, 10, 15, 20, 25};
  std::size_t width = 128;
  std::size_t classes = 10;
  std::string init = "orthogonal";
  double sigma_w = 1.0;

  double learning_rate = 0.01;
  // Per-activation rates picked from the grid {0.003, 0.01, 0.03} by aggregate
  // trainability across the sweep depths: relu needs the large step against its
  // per-layer variance decay, tilted_relu needs it to escape the flat early
  // loss of an even activation.
  std::map<std::string, double> learning_rate_overrides = {{"relu", 0.03},
                                                           {"tilted_relu", 0.03}};
  double momentum = 0.0;
  std::size_t batch_size = 128;
  std::size_t epochs = 30;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  DatasetDescriptor dataset;

  std::size_t hermite_order = 40;
  std::size_t mp_matrix_size = 512;
  std::string checkpoint;  // spectra: read this model instead of a fresh init
};

ExperimentConfig parse_config_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
void validate_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical serialized config; names the run directory.
std::string config_hash(const ExperimentConfig& cfg);

// Precedence: explicit flag > ACTNORM_OUTPUT_ROOT > ./runs
std::string resolve_output_root(const std::string& flag_value);

double effective_learning_rate(const ExperimentConfig& cfg, const std::string& activation);

// Creates <root>/<kind>-<hash>/, writes config.json + metadata.json, runs the
// experiment, returns the run directory.
std::filesystem::path run_experiment(const ExperimentConfig& cfg, const std::string& output_root,
                                     const std::string& command_line);

// Individual runners (exposed for tests; run_experiment dispatches on kind).
void run_table(const ExperimentConfig& cfg, const std::filesystem::path& dir);
void run_normalize(const ExperimentConfig& cfg, const std::filesystem::path& dir);
void run_mp_check(const ExperimentConfig& cfg, const std::filesystem::path& dir);
void run_train(const ExperimentConfig& cfg, const std::filesystem::path& dir);
void run_depth_sweep(const ExperimentConfig& cfg, const std::filesystem::path& dir);
void run_spectra(const ExperimentConfig& cfg, const std::filesystem::path& dir);

// Deterministic, platform-independent seed for one sweep arm.
std::uint64_t arm_seed(const std::string& activation, std::size_t depth, std::uint64_t seed);

}  // namespace actnorm
