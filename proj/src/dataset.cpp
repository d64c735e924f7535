#include "actnorm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "actnorm/errors.hpp"

namespace actnorm {

namespace {

constexpr std::size_t kCifarRecordBytes = 3073;
constexpr std::size_t kCifarPixels = 3072;

void standardize(Matrix& train, Matrix& test) {
  const std::size_t n = train.rows(), dim = train.cols();
  if (n < 2) throw validation_error("dataset: need at least 2 train samples to standardize");
  std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) mean[j] += train(i, j);
  for (std::size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      const double c = train(i, j) - mean[j];
      scale[j] += c * c;
    }
  for (std::size_t j = 0; j < dim; ++j) {
    // Population std, floored so constant features map to zero instead of inf.
    scale[j] = std::sqrt(scale[j] / static_cast<double>(n));
    if (scale[j] < 1e-12) scale[j] = 1.0;
  }
  auto apply = [&](Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < dim; ++j) m(i, j) = (m(i, j) - mean[j]) / scale[j];
  };
  apply(train);
  apply(test);
}

Dataset make_blobs(const DatasetDescriptor& d) {
  if (d.classes < 2) throw validation_error("dataset: need at least 2 classes");
  if (d.input_dim == 0) throw validation_error("dataset: input_dim must be positive");
  if (d.train_samples == 0 || d.test_samples == 0)
    throw validation_error("dataset: split sizes must be positive");
  if (!(d.noise > 0.0) || !(d.center_scale > 0.0))
    throw validation_error("dataset: noise and center_scale must be positive");

  std::mt19937_64 rng(d.seed + 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix centers(d.classes, d.input_dim);
  for (std::size_t i = 0; i < centers.size(); ++i)
    centers.data()[i] = d.center_scale * gauss(rng);

  auto fill_split = [&](Matrix& x, std::vector<int>& y, std::size_t count) {
    x = Matrix(count, d.input_dim);
    y.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t label = i % d.classes;
      y[i] = static_cast<int>(label);
      for (std::size_t j = 0; j < d.input_dim; ++j)
        x(i, j) = centers(label, j) + d.noise * gauss(rng);
    }
  };

  Dataset out;
  out.classes = d.classes;
  fill_split(out.train_x, out.train_y, d.train_samples);
  fill_split(out.test_x, out.test_y, d.test_samples);
  return out;
}

// Appends records from one CIFAR batch file until `want` rows are filled.
// Returns the number of rows consumed.
std::size_t read_cifar_file(const std::string& path, Matrix& x, std::vector<int>& y,
                            std::size_t row0, std::size_t want) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw filesystem_error("dataset: cannot open " + path);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes % kCifarRecordBytes != 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "dataset: %s is not a whole number of 3073-byte records "
                  "(truncated record starts at byte offset %zu)",
                  path.c_str(), bytes - bytes % kCifarRecordBytes);
    throw format_error(buf);
  }
  const std::size_t records = std::min(bytes / kCifarRecordBytes, want);
  std::vector<unsigned char> rec(kCifarRecordBytes);
  for (std::size_t r = 0; r < records; ++r) {
    in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    if (!in) throw format_error("dataset: short read in " + path);
    if (rec[0] > 9) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "dataset: invalid label %u at byte offset %zu in %s",
                    static_cast<unsigned>(rec[0]), r * kCifarRecordBytes, path.c_str());
      throw format_error(buf);
    }
    y[row0 + r] = rec[0];
    for (std::size_t j = 0; j < kCifarPixels; ++j)
      x(row0 + r, j) = static_cast<double>(rec[1 + j]) / 255.0;
  }
  return records;
}

Dataset load_cifar(const DatasetDescriptor& d) {
  if (d.input_dim != kCifarPixels)
    throw validation_error("dataset: cifar10-binary requires input_dim = 3072");
  if (d.classes != 10) throw validation_error("dataset: cifar10-binary has 10 classes");
  namespace fs = std::filesystem;
  if (d.path.empty() || !fs::is_directory(d.path))
    throw filesystem_error("dataset: cifar10-binary path is not a directory: " + d.path);

  Dataset out;
  out.classes = 10;
  out.train_x = Matrix(d.train_samples, kCifarPixels);
  out.train_y.resize(d.train_samples);
  std::size_t filled = 0;
  for (int batch = 1; batch <= 5 && filled < d.train_samples; ++batch) {
    const std::string path = d.path + "/data_batch_" + std::to_string(batch) + ".bin";
    filled += read_cifar_file(path, out.train_x, out.train_y, filled, d.train_samples - filled);
  }
  if (filled < d.train_samples)
    throw validation_error("dataset: cifar10 train batches hold fewer records than requested");
  out.test_x = Matrix(d.test_samples, kCifarPixels);
  out.test_y.resize(d.test_samples);
  const std::size_t got =
      read_cifar_file(d.path + "/test_batch.bin", out.test_x, out.test_y, 0, d.test_samples);
  if (got < d.test_samples)
    throw validation_error("dataset: cifar10 test batch holds fewer records than requested");
  return out;
}

}  // namespace

dataset_kind parse_dataset_kind(const std::string& name) {
  if (name == "synthetic-blobs") return dataset_kind::synthetic_blobs;
  if (name == "cifar10-binary") return dataset_kind::cifar10_binary;
  throw validation_error("dataset: unknown kind '" + name +
                         "' (expected synthetic-blobs or cifar10-binary)");
}

std::string dataset_kind_name(dataset_kind k) {
  return k == dataset_kind::synthetic_blobs ? "synthetic-blobs" : "cifar10-binary";
}

Dataset load_dataset(const DatasetDescriptor& d) {
  Dataset out =
      d.kind == dataset_kind::synthetic_blobs ? make_blobs(d) : load_cifar(d);
  if (d.normalize) standardize(out.train_x, out.test_x);
  if (!out.train_x.all_finite() || !out.test_x.all_finite())
    throw numeric_error("dataset: non-finite feature values after load");
  return out;
}

}  // namespace actnorm
