#include "actnorm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "actnorm/activation.hpp"
#include "actnorm/errors.hpp"
#include "actnorm/hermite.hpp"
#include "actnorm/mlp.hpp"
#include "actnorm/normalizer.hpp"
#include "actnorm/quadrature.hpp"
#include "actnorm/series.hpp"
#include "actnorm/spectral.hpp"

namespace actnorm {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kTableTolerance = 1e-4;
const std::vector<double> kLearningRateGrid = {0.003, 0.01, 0.03};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw filesystem_error("cannot open for writing: " + p.string());
  return out;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out = open_out(p);
  out << content;
  if (!out) throw filesystem_error("write failed: " + p.string());
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Linear-interpolation quantile on sorted ascending data.
double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) return std::nan("");
  if (v.size() == 1) return v[0];
  const double pos = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + (v[lo + 1] - v[lo]) * frac;
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  long double sum = 0.0L, sq = 0.0L;
  for (double x : v) {
    sum += x;
    sq += static_cast<long double>(x) * x;
  }
  const long double mean = sum / static_cast<long double>(v.size());
  const long double var = sq / static_cast<long double>(v.size()) - mean * mean;
  return static_cast<double>(std::sqrt(std::max(var, 0.0L)));
}

template <typename T>
T expect(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw validation_error("config: field '" + key + "' has the wrong type");
  }
}

DatasetDescriptor parse_dataset(const json& j) {
  if (!j.is_object()) throw validation_error("config: field 'dataset' must be an object");
  DatasetDescriptor d;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind")
      d.kind = parse_dataset_kind(expect<std::string>(value, "dataset.kind"));
    else if (key == "classes")
      d.classes = expect<std::size_t>(value, "dataset.classes");
    else if (key == "train_samples")
      d.train_samples = expect<std::size_t>(value, "dataset.train_samples");
    else if (key == "test_samples")
      d.test_samples = expect<std::size_t>(value, "dataset.test_samples");
    else if (key == "input_dim")
      d.input_dim = expect<std::size_t>(value, "dataset.input_dim");
    else if (key == "path")
      d.path = expect<std::string>(value, "dataset.path");
    else if (key == "normalize")
      d.normalize = expect<bool>(value, "dataset.normalize");
    else if (key == "seed")
      d.seed = expect<std::uint64_t>(value, "dataset.seed");
    else if (key == "center_scale")
      d.center_scale = expect<double>(value, "dataset.center_scale");
    else if (key == "noise")
      d.noise = expect<double>(value, "dataset.noise");
    else
      throw validation_error("config: unknown field 'dataset." + key + "'");
  }
  return d;
}

json dataset_to_json(const DatasetDescriptor& d) {
  json j;
  j["kind"] = dataset_kind_name(d.kind);
  j["classes"] = d.classes;
  j["train_samples"] = d.train_samples;
  j["test_samples"] = d.test_samples;
  j["input_dim"] = d.input_dim;
  j["path"] = d.path;
  j["normalize"] = d.normalize;
  j["seed"] = d.seed;
  j["center_scale"] = d.center_scale;
  j["noise"] = d.noise;
  return j;
}

void write_spectrum_csv(const fs::path& p, const EmpiricalSpectrum& s) {
  std::ofstream out = open_out(p);
  out << "rank,eigenvalue\n";
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
    out << (i + 1) << "," << fmt17(s.eigenvalues[i]) << "\n";
}

json spectrum_summary(const EmpiricalSpectrum& s) {
  std::vector<double> asc(s.eigenvalues);
  std::sort(asc.begin(), asc.end());
  long double sum = 0.0L;
  for (double x : asc) sum += x;
  json j;
  j["layer"] = s.layer;
  j["epoch"] = s.epoch;
  j["count"] = asc.size();
  j["mean"] = static_cast<double>(sum / static_cast<long double>(asc.size()));
  j["std"] = population_std(asc);
  j["iqr"] = quantile_sorted(asc, 0.75) - quantile_sorted(asc, 0.25);
  j["min"] = asc.front();
  j["max"] = asc.back();
  return j;
}

void write_spectra_outputs(const fs::path& dir, const std::vector<EmpiricalSpectrum>& spectra,
                           const std::string& source_note) {
  const fs::path sub = dir / "spectra";
  std::error_code ec;
  fs::create_directories(sub, ec);
  if (ec) throw filesystem_error("cannot create directory: " + sub.string());
  json summary;
  summary["source"] = source_note;
  summary["layers"] = json::array();
  for (const auto& s : spectra) {
    char name[64];
    std::snprintf(name, sizeof(name), "layer_%02d_epoch_%d.csv", s.layer, s.epoch);
    write_spectrum_csv(sub / name, s);
    summary["layers"].push_back(spectrum_summary(s));
  }
  write_file(dir / "spectra_summary.json", summary.dump(2) + "\n");
}

std::string train_log_jsonl(const TrainLog& log) {
  std::string out;
  for (const auto& r : log.epochs) {
    json line;
    line["epoch"] = r.epoch;
    line["loss"] = r.loss;
    line["train_acc"] = r.train_acc;
    line["test_acc"] = r.test_acc;
    out += line.dump() + "\n";
  }
  if (log.diverged) {
    json line;
    line["failed_at_epoch"] = log.failed_epoch;
    line["diverged"] = true;
    out += line.dump() + "\n";
  }
  return out;
}

struct ArmResult {
  std::uint64_t seed = 0;
  TrainLog log;
  double best_test_acc = 0.0;
  double final_test_acc = 0.0;
  long long epochs_to_threshold = -1;
  bool trainable = false;
  std::vector<double> layer_stds;
  MlpModel model;
  double learning_rate = 0.0;
};

ArmResult run_arm(const ExperimentConfig& cfg, const std::string& activation, std::size_t depth,
                  std::uint64_t seed, double threshold) {
  DatasetDescriptor dd = cfg.dataset;
  dd.seed = cfg.dataset.seed + seed;
  const Dataset data = load_dataset(dd);

  const std::uint64_t mseed = arm_seed(activation, depth, seed);
  MlpModel model = init_model(dd.input_dim, cfg.width, depth, cfg.classes, activation,
                              parse_init_scheme(cfg.init), cfg.sigma_w, mseed);
  SgdOptions sgd;
  sgd.learning_rate = effective_learning_rate(cfg, activation);
  sgd.momentum = cfg.momentum;
  sgd.batch_size = cfg.batch_size;
  TrainState state(std::move(model), sgd, mseed + 1);

  ArmResult r;
  r.seed = seed;
  r.log = train(state, data, cfg.epochs);
  for (const auto& rec : r.log.epochs) {
    r.best_test_acc = std::max(r.best_test_acc, rec.test_acc);
    r.final_test_acc = rec.test_acc;
    if (r.epochs_to_threshold < 0 && rec.test_acc >= threshold)
      r.epochs_to_threshold = static_cast<long long>(rec.epoch);
  }
  r.trainable = r.best_test_acc >= threshold;
  for (const auto& s : layer_spectra(state.model))
    r.layer_stds.push_back(population_std(s.eigenvalues));
  r.model = std::move(state.model);
  r.learning_rate = sgd.learning_rate;
  return r;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string iso_utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw format_error(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw validation_error("config: top level must be an object");

  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind")
      cfg.kind = expect<std::string>(value, key);
    else if (key == "activation")
      cfg.activation = expect<std::string>(value, key);
    else if (key == "activations")
      cfg.activations = expect<std::vector<std::string>>(value, key);
    else if (key == "depth")
      cfg.depth = expect<std::size_t>(value, key);
    else if (key == "depths")
      cfg.depths = expect<std::vector<std::size_t>>(value, key);
    else if (key == "width")
      cfg.width = expect<std::size_t>(value, key);
    else if (key == "classes")
      cfg.classes = expect<std::size_t>(value, key);
    else if (key == "init")
      cfg.init = expect<std::string>(value, key);
    else if (key == "sigma_w")
      cfg.sigma_w = expect<double>(value, key);
    else if (key == "learning_rate")
      cfg.learning_rate = expect<double>(value, key);
    else if (key == "learning_rate_overrides") {
      if (!value.is_object())
        throw validation_error("config: field 'learning_rate_overrides' must be an object");
      cfg.learning_rate_overrides.clear();
      for (const auto& [act, lr] : value.items())
        cfg.learning_rate_overrides[act] = expect<double>(lr, "learning_rate_overrides." + act);
    } else if (key == "momentum")
      cfg.momentum = expect<double>(value, key);
    else if (key == "batch_size")
      cfg.batch_size = expect<std::size_t>(value, key);
    else if (key == "epochs")
      cfg.epochs = expect<std::size_t>(value, key);
    else if (key == "seeds")
      cfg.seeds = expect<std::vector<std::uint64_t>>(value, key);
    else if (key == "dataset")
      cfg.dataset = parse_dataset(value);
    else if (key == "hermite_order")
      cfg.hermite_order = expect<std::size_t>(value, key);
    else if (key == "mp_matrix_size")
      cfg.mp_matrix_size = expect<std::size_t>(value, key);
    else if (key == "checkpoint")
      cfg.checkpoint = expect<std::string>(value, key);
    else
      throw validation_error("config: unknown field '" + key + "'");
  }
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["kind"] = cfg.kind;
  j["activation"] = cfg.activation;
  j["activations"] = cfg.activations;
  j["depth"] = cfg.depth;
  j["depths"] = cfg.depths;
  j["width"] = cfg.width;
  j["classes"] = cfg.classes;
  j["init"] = cfg.init;
  j["sigma_w"] = cfg.sigma_w;
  j["learning_rate"] = cfg.learning_rate;
  j["learning_rate_overrides"] = cfg.learning_rate_overrides;
  j["momentum"] = cfg.momentum;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["seeds"] = cfg.seeds;
  j["dataset"] = dataset_to_json(cfg.dataset);
  j["hermite_order"] = cfg.hermite_order;
  j["mp_matrix_size"] = cfg.mp_matrix_size;
  j["checkpoint"] = cfg.checkpoint;
  return j.dump(2) + "\n";
}

void validate_config(const ExperimentConfig& cfg) {
  static const std::set<std::string> kinds = {"table",  "normalize",   "mp-check",
                                             "train",  "depth-sweep", "spectra"};
  if (!kinds.count(cfg.kind))
    throw validation_error("config: field 'kind' must be one of table, normalize, mp-check, "
                           "train, depth-sweep, spectra");
  if (cfg.width < 2) throw validation_error("config: field 'width' must be at least 2");
  if (cfg.depth < 1) throw validation_error("config: field 'depth' must be at least 1");
  if (cfg.classes < 2) throw validation_error("config: field 'classes' must be at least 2");
  if (!(cfg.sigma_w > 0.0)) throw validation_error("config: field 'sigma_w' must be positive");
  if (!(cfg.learning_rate > 0.0))
    throw validation_error("config: field 'learning_rate' must be positive");
  for (const auto& [act, lr] : cfg.learning_rate_overrides) {
    get(act);
    if (!(lr > 0.0))
      throw validation_error("config: field 'learning_rate_overrides." + act +
                             "' must be positive");
  }
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw validation_error("config: field 'momentum' must lie in [0, 1)");
  if (cfg.batch_size == 0) throw validation_error("config: field 'batch_size' must be positive");
  if (cfg.epochs == 0) throw validation_error("config: field 'epochs' must be positive");
  if (cfg.seeds.empty()) throw validation_error("config: field 'seeds' must be nonempty");
  parse_init_scheme(cfg.init);
  if (cfg.hermite_order < 2 || cfg.hermite_order > 64)
    throw validation_error("config: field 'hermite_order' must lie in [2, 64]");
  if (cfg.mp_matrix_size < 16 || cfg.mp_matrix_size > 4096)
    throw validation_error("config: field 'mp_matrix_size' must lie in [16, 4096]");

  if (cfg.kind == "normalize" || cfg.kind == "train" || cfg.kind == "spectra") get(cfg.activation);
  if (cfg.kind == "depth-sweep") {
    if (cfg.activations.empty())
      throw validation_error("config: field 'activations' must be nonempty for depth-sweep");
    for (const auto& a : cfg.activations) get(a);
    if (cfg.depths.empty())
      throw validation_error("config: field 'depths' must be nonempty for depth-sweep");
    for (std::size_t d : cfg.depths)
      if (d < 1) throw validation_error("config: field 'depths' entries must be at least 1");
    if (cfg.seeds.size() < 3)
      throw validation_error("config: field 'seeds' needs at least 3 entries for depth-sweep");
  }
  if (cfg.kind == "train" || cfg.kind == "depth-sweep") {
    if (cfg.dataset.classes != cfg.classes)
      throw validation_error("config: field 'dataset.classes' must match 'classes'");
  }
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(cfg))));
  return buf;
}

std::string resolve_output_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ACTNORM_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

double effective_learning_rate(const ExperimentConfig& cfg, const std::string& activation) {
  const auto it = cfg.learning_rate_overrides.find(activation);
  return it == cfg.learning_rate_overrides.end() ? cfg.learning_rate : it->second;
}

std::uint64_t arm_seed(const std::string& activation, std::size_t depth, std::uint64_t seed) {
  return fnv1a64(activation + "|" + std::to_string(depth) + "|" + std::to_string(seed));
}

void run_table(const ExperimentConfig&, const fs::path& dir) {
  std::string csv = "name,alpha,beta,gamma,m2_squared,m4\n";
  for (const std::string& name : activation_names()) {
    const NormalizationCoefficients& c = compute_coefficients(get(name));
    csv += name + "," + fmt17(c.alpha) + "," + fmt17(c.beta) + "," + fmt17(c.gamma) + "," +
           fmt17(c.m2 * c.m2) + "," + fmt17(c.m4) + "\n";
  }
  write_file(dir / "table.csv", csv);

  // Reference layout labels the mean column alpha and the slope column beta;
  // the comparison swaps them back so each computed quantity meets its
  // published counterpart.
  std::string diff = "name,quantity,computed,published,abs_diff,within_tolerance\n";
  std::size_t mismatches = 0;
  for (const ReferenceRow& row : reference_coefficients()) {
    const NormalizationCoefficients& c = compute_coefficients(get(row.name));
    const std::pair<const char*, std::pair<double, double>> cells[] = {
        {"alpha", {c.alpha, row.slope}},
        {"beta", {c.beta, row.mean}},
        {"gamma", {c.gamma, row.gamma}},
        {"m2_squared", {c.m2 * c.m2, row.m2_squared}},
        {"m4", {c.m4, row.m4}},
    };
    for (const auto& [quantity, vals] : cells) {
      const double abs_diff = std::fabs(vals.first - vals.second);
      const bool ok = abs_diff <= kTableTolerance;
      if (!ok) ++mismatches;
      diff += row.name + std::string(",") + quantity + "," + fmt17(vals.first) + "," +
              fmt17(vals.second) + "," + fmt17(abs_diff) + "," + (ok ? "1" : "0") + "\n";
    }
  }
  write_file(dir / "table_diff.csv", diff);

  json report;
  report["tolerance"] = kTableTolerance;
  report["reference_cells"] = reference_coefficients().size() * 5;
  report["mismatched_cells"] = mismatches;
  write_file(dir / "table_report.json", report.dump(2) + "\n");
}

void run_normalize(const ExperimentConfig& cfg, const fs::path& dir) {
  const Activation& a = get(cfg.activation);
  const NormalizationCoefficients& c = compute_coefficients(a);
  const Activation normalized = normalize(a, c);
  const auto [xi_after, eta_after] = recompute_diagnostics(normalized);

  const QuadratureRule& rule = a.kinked() ? grid_rule() : gauss_rule();
  const HermiteExpansion e = expand(normalized, static_cast<int>(cfg.hermite_order), rule);

  json out;
  out["activation"] = cfg.activation;
  out["alpha"] = c.alpha;
  out["beta"] = c.beta;
  out["gamma"] = c.gamma;
  out["xi"] = c.xi;
  out["eta"] = c.eta;
  out["m2"] = c.m2;
  out["m4"] = c.m4;
  out["method_discrepancy"] = c.method_discrepancy;
  out["discrepancy_flagged"] = c.discrepancy_flagged;
  out["normalized_xi"] = xi_after;
  out["normalized_eta"] = eta_after;
  out["expansion_order"] = cfg.hermite_order;
  out["expansion_f0"] = e.coefficients[0];
  out["expansion_f1"] = e.coefficients[1];
  out["expansion_tail_energy"] = e.tail_energy();
  write_file(dir / "coefficients.json", out.dump(2) + "\n");

  std::ostringstream expansion_csv;
  write_csv(e, expansion_csv);
  write_file(dir / "expansion.csv", expansion_csv.str());

  std::string curve = "x,raw,normalized,normalized_derivative\n";
  const int points = 1000;
  for (int i = 0; i < points; ++i) {
    const double x = -5.0 + 10.0 * static_cast<double>(i) / (points - 1);
    curve += fmt17(x) + "," + fmt17(a.value(x)) + "," + fmt17(normalized.value(x)) + "," +
             fmt17(normalized.derivative(x)) + "\n";
  }
  write_file(dir / "curve.csv", curve);
}

void run_mp_check(const ExperimentConfig& cfg, const fs::path& dir) {
  const SpectralDensity d = mp_density(1.0);
  const double mass = density_integral(d, [](double) { return 1.0; });
  const double mean = density_integral(d, [](double x) { return x; });

  // Quadratic identity for the moment generating function at points whose
  // reciprocal stays off the support [0, 4].
  std::vector<std::complex<double>> points;
  for (double u = -2.0; u < -0.05; u += 0.15) points.emplace_back(u, 0.0);
  points.emplace_back(0.05, 0.0);
  points.emplace_back(0.1, 0.0);
  points.emplace_back(0.15, 0.0);
  points.emplace_back(0.2, 0.0);
  points.emplace_back(0.5, 0.5);
  points.emplace_back(0.5, -0.5);
  points.emplace_back(-0.5, 0.75);
  points.emplace_back(1.0, 1.0);
  points.emplace_back(2.0, 0.5);
  points.emplace_back(-1.0, -1.0);
  double max_residual = 0.0;
  for (const auto& u : points) {
    const std::complex<double> m = moment_generating(d, u);
    max_residual = std::max(max_residual, std::abs(u * m * m - m + 1.0));
  }

  const std::size_t n = cfg.mp_matrix_size;
  std::mt19937_64 rng(arm_seed("wishart", n, cfg.seeds.empty() ? 1 : cfg.seeds[0]));
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  Matrix x(n, n);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
  const Matrix gram = kernels::matmul_nt(x, x);
  const EmpiricalSpectrum spectrum = empirical_spectrum(gram, "wishart");
  const double ks = ks_distance(spectrum, d);

  json report;
  report["density"] = d.name;
  report["mass"] = mass;
  report["mean"] = mean;
  report["density_at_one"] = d.density(1.0);
  report["quadratic_points"] = points.size();
  report["max_quadratic_residual"] = max_residual;
  report["wishart_size"] = n;
  report["ks_distance"] = ks;
  write_file(dir / "mp_report.json", report.dump(2) + "\n");

  std::string density_csv = "x,density\n";
  const std::size_t samples = 512;
  for (std::size_t i = 0; i < samples; ++i) {
    const double xx = d.support_lo +
                      (d.support_hi - d.support_lo) * (static_cast<double>(i) + 0.5) / samples;
    density_csv += fmt17(xx) + "," + fmt17(d.density(xx)) + "\n";
  }
  write_file(dir / "density.csv", density_csv);
  write_spectrum_csv(dir / "spectrum.csv", spectrum);
}

void run_train(const ExperimentConfig& cfg, const fs::path& dir) {
  const std::uint64_t seed = cfg.seeds[0];
  const double threshold = 2.0 / static_cast<double>(cfg.classes);
  ArmResult r = run_arm(cfg, cfg.activation, cfg.depth, seed, threshold);

  write_file(dir / "train_log.jsonl", train_log_jsonl(r.log));
  save_checkpoint(r.model, (dir / "checkpoint.bin").string());
  write_spectra_outputs(dir, layer_spectra(r.model), "post-training");

  json result;
  result["activation"] = cfg.activation;
  result["depth"] = cfg.depth;
  result["width"] = cfg.width;
  result["seed"] = seed;
  result["learning_rate"] = r.learning_rate;
  result["epochs_run"] = r.log.epochs.size();
  result["best_test_acc"] = r.best_test_acc;
  result["final_test_acc"] = r.final_test_acc;
  result["threshold_accuracy"] = threshold;
  result["epochs_to_threshold"] = r.epochs_to_threshold;
  result["trainable"] = r.trainable;
  result["diverged"] = r.log.diverged;
  if (r.log.diverged) result["failed_epoch"] = r.log.failed_epoch;
  write_file(dir / "result.json", result.dump(2) + "\n");
}

void run_depth_sweep(const ExperimentConfig& cfg, const fs::path& dir) {
  const double threshold = 2.0 / static_cast<double>(cfg.classes);
  const std::size_t majority =
      (3 * cfg.seeds.size() + 4) / 5;  // ceil(0.6 n): 3 of 5 at the default count

  const fs::path logs = dir / "logs";
  std::error_code ec;
  fs::create_directories(logs, ec);
  if (ec) throw filesystem_error("cannot create directory: " + logs.string());

  json activations = json::array();
  for (const std::string& act : cfg.activations) {
    json arms = json::array();
    std::size_t max_trainable_depth = 0;
    for (const std::size_t depth : cfg.depths) {
      json seed_runs = json::array();
      std::vector<double> bests, std2s, stdls, hit_epochs;
      std::vector<std::vector<double>> all_stds;
      std::size_t trainable_count = 0;
      for (const std::uint64_t seed : cfg.seeds) {
        const ArmResult r = run_arm(cfg, act, depth, seed, threshold);
        char log_name[96];
        std::snprintf(log_name, sizeof(log_name), "%s_depth%02zu_seed%llu.jsonl", act.c_str(),
                      depth, static_cast<unsigned long long>(seed));
        write_file(logs / log_name, train_log_jsonl(r.log));

        json run;
        run["seed"] = seed;
        run["best_test_acc"] = r.best_test_acc;
        run["final_test_acc"] = r.final_test_acc;
        run["epochs_to_threshold"] = r.epochs_to_threshold;
        run["trainable"] = r.trainable;
        run["diverged"] = r.log.diverged;
        const double std2 = r.layer_stds.size() >= 2 ? r.layer_stds[1] : std::nan("");
        const double stdl = r.layer_stds.empty() ? std::nan("") : r.layer_stds.back();
        run["spectrum_std_layer2"] = std2;
        run["spectrum_std_last"] = stdl;
        seed_runs.push_back(run);

        bests.push_back(r.best_test_acc);
        if (!std::isnan(std2)) std2s.push_back(std2);
        if (!std::isnan(stdl)) stdls.push_back(stdl);
        if (r.trainable) {
          ++trainable_count;
          hit_epochs.push_back(static_cast<double>(r.epochs_to_threshold));
        }
        all_stds.push_back(r.layer_stds);
        std::fprintf(stderr, "depth-sweep: %s depth %zu seed %llu: best %.3f%s\n", act.c_str(),
                     depth, static_cast<unsigned long long>(seed), r.best_test_acc,
                     r.log.diverged ? " (diverged)" : "");
      }
      const bool majority_trainable = trainable_count >= majority;
      if (majority_trainable) max_trainable_depth = std::max(max_trainable_depth, depth);

      std::vector<double> per_layer_medians;
      for (std::size_t l = 0; l < depth; ++l) {
        std::vector<double> col;
        for (const auto& stds : all_stds)
          if (l < stds.size()) col.push_back(stds[l]);
        per_layer_medians.push_back(median(col));
      }

      json arm;
      arm["depth"] = depth;
      arm["seed_runs"] = seed_runs;
      arm["trainable_count"] = trainable_count;
      arm["fraction_trainable"] =
          static_cast<double>(trainable_count) / static_cast<double>(cfg.seeds.size());
      arm["majority_trainable"] = majority_trainable;
      arm["median_best_test_acc"] = median(bests);
      arm["median_epochs_to_threshold"] = hit_epochs.empty() ? -1.0 : median(hit_epochs);
      arm["median_spectrum_std_layer2"] = median(std2s);
      arm["median_spectrum_std_last"] = median(stdls);
      arm["median_layer_spectrum_stds"] = per_layer_medians;
      arms.push_back(arm);
    }
    json entry;
    entry["activation"] = act;
    entry["learning_rate"] = effective_learning_rate(cfg, act);
    entry["max_trainable_depth"] = max_trainable_depth;
    entry["arms"] = arms;
    activations.push_back(entry);
  }

  json report;
  report["threshold_accuracy"] = threshold;
  report["majority_count"] = majority;
  report["seeds"] = cfg.seeds;
  report["epochs"] = cfg.epochs;
  report["depths"] = cfg.depths;
  report["width"] = cfg.width;
  report["learning_rate_grid"] = kLearningRateGrid;
  report["activations"] = activations;
  write_file(dir / "sweep_report.json", report.dump(2) + "\n");
}

void run_spectra(const ExperimentConfig& cfg, const fs::path& dir) {
  MlpModel model;
  std::string source;
  if (!cfg.checkpoint.empty()) {
    model = load_checkpoint(cfg.checkpoint);
    source = "checkpoint:" + cfg.checkpoint;
  } else {
    const std::uint64_t mseed = arm_seed(cfg.activation, cfg.depth, cfg.seeds[0]);
    model = init_model(cfg.dataset.input_dim, cfg.width, cfg.depth, cfg.classes, cfg.activation,
                       parse_init_scheme(cfg.init), cfg.sigma_w, mseed);
    source = "fresh-init";
  }
  write_spectra_outputs(dir, layer_spectra(model), source);
}

fs::path run_experiment(const ExperimentConfig& cfg, const std::string& output_root,
                        const std::string& command_line) {
  validate_config(cfg);
  const fs::path dir = fs::path(output_root) / (cfg.kind + "-" + config_hash(cfg));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw filesystem_error("cannot create run directory: " + dir.string());
  write_file(dir / "config.json", config_to_json(cfg));

  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.kind == "table")
    run_table(cfg, dir);
  else if (cfg.kind == "normalize")
    run_normalize(cfg, dir);
  else if (cfg.kind == "mp-check")
    run_mp_check(cfg, dir);
  else if (cfg.kind == "train")
    run_train(cfg, dir);
  else if (cfg.kind == "depth-sweep")
    run_depth_sweep(cfg, dir);
  else
    run_spectra(cfg, dir);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // The only file allowed to differ between identical reruns: wall-clock facts
  // live here so every result file stays byte-reproducible.
  json meta;
  meta["command_line"] = command_line;
  meta["created_utc"] = iso_utc_now();
  meta["elapsed_seconds"] = elapsed;
  write_file(dir / "metadata.json", meta.dump(2) + "\n");
  return dir;
}

}  // namespace actnorm
