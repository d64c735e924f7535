#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actnorm/matrix.hpp"

namespace actnorm {

enum class dataset_kind { synthetic_blobs, cifar10_binary };

dataset_kind parse_dataset_kind(const std::string& name);
std::string dataset_kind_name(dataset_kind k);

struct DatasetDescriptor {
  dataset_kind kind = dataset_kind::synthetic_blobs;
  std::size_t classes = 10;
  std::size_t train_samples = 1280;
  std::size_t test_samples = 2560;
  std::size_t input_dim = 128;
  std::string path;         // directory with CIFAR-10 binary batches
  bool normalize = true;    // standardize features with train-split statistics
  std::uint64_t seed = 0;   // blob generator seed
  double center_scale = 1.0;
  double noise = 1.0;
};

struct Dataset {
  Matrix train_x;
  std::vector<int> train_y;
  Matrix test_x;
  std::vector<int> test_y;
  std::size_t classes = 0;
};

// Synthetic blobs: class centers ~ N(0, center_scale^2 I), unit-variance noise,
// labels cycling through the classes. CIFAR-10 reads the public binary layout
// (3073-byte records, one label byte + 3072 pixel bytes scaled to [0, 1]).
Dataset load_dataset(const DatasetDescriptor& d);

}  // namespace actnorm
