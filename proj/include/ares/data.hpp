#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ares/tensor.hpp"

namespace ares {

// Labelled inputs with every value in [0, 1]. Images are stored flattened;
// rows/cols keep the original geometry (0 when not an image set).
struct Dataset {
  std::string name;
  std::vector<Tensor> inputs;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return inputs.size(); }
  std::size_t input_dim() const { return inputs.empty() ? 0 : inputs.front().size(); }
  // Throws ArgumentError on empty data, length mismatch, bad labels or
  // values outside [0, 1].
  void validate() const;
};

struct BlobParams {
  std::size_t num_classes = 2;
  std::size_t dim = 2;
  std::size_t samples_per_class = 100;
  // Fraction of the [0.2, 0.8] cube the class centers may occupy, in (0, 1].
  double center_spread = 1.0;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
};

// Gaussian blobs around seeded centers, clamped to [0, 1]. Samples are
// emitted class by class.
Dataset generate_blobs(const BlobParams& params);

// Big-endian IDX pair: unsigned-byte images (magic 0x00000803) and labels
// (magic 0x00000801). Pixels are scaled by 1/255.
Dataset load_idx_pair(const std::string& images_path, const std::string& labels_path);

// Buffer variants used by the file loader.
Dataset parse_idx_pair(const std::vector<std::uint8_t>& images, const std::vector<std::uint8_t>& labels,
                       std::string name = "idx");

// Inverse of the loader for [0,1] data whose values are multiples of 1/255.
// Values are rounded to the nearest byte.
void write_idx_pair(const Dataset& data, const std::string& images_path, const std::string& labels_path);

// Seeded shuffle, then the first round(fraction * n) samples go to train.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

// First `count` samples of each class, in original order.
Dataset take_per_class(const Dataset& data, std::size_t count);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

}  // namespace ares
