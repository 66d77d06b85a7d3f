#include "ares/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>

#include "ares/error.hpp"
#include "ares/rng.hpp"

namespace ares {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset, const char* what) {
  if (offset + 4 > buf.size()) {
    throw FormatError(std::string("truncated IDX ") + what + " header", buf.size());
  }
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v >> 24));
  buf.push_back(static_cast<std::uint8_t>(v >> 16));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
  buf.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& idx, std::string name) {
  Dataset out;
  out.name = std::move(name);
  out.num_classes = data.num_classes;
  out.rows = data.rows;
  out.cols = data.cols;
  out.inputs.reserve(idx.size());
  out.labels.reserve(idx.size());
  for (auto i : idx) {
    out.inputs.push_back(data.inputs[i]);
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (inputs.empty()) throw ArgumentError("dataset '" + name + "' is empty");
  if (inputs.size() != labels.size()) {
    throw ArgumentError("dataset '" + name + "' has " + std::to_string(inputs.size()) + " inputs but " +
                        std::to_string(labels.size()) + " labels");
  }
  if (num_classes == 0) throw ArgumentError("dataset '" + name + "' has zero classes");
  const std::size_t dim = inputs.front().size();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw ArgumentError("dataset '" + name + "' sample " + std::to_string(i) + " has label " +
                          std::to_string(labels[i]) + " >= " + std::to_string(num_classes));
    }
    if (inputs[i].size() != dim) {
      throw ArgumentError("dataset '" + name + "' sample " + std::to_string(i) + " has inconsistent width");
    }
    for (double v : inputs[i].data()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ArgumentError("dataset '" + name + "' sample " + std::to_string(i) + " has value outside [0,1]");
      }
    }
  }
}

Dataset generate_blobs(const BlobParams& p) {
  if (p.num_classes == 0 || p.dim == 0 || p.samples_per_class == 0) {
    throw ArgumentError("generate_blobs: class count, dimension and samples per class must be positive");
  }
  if (!(p.center_spread > 0.0 && p.center_spread <= 1.0)) {
    throw ArgumentError("generate_blobs: center_spread must lie in (0, 1]");
  }
  if (!(p.noise_std >= 0.0) || !std::isfinite(p.noise_std)) {
    throw ArgumentError("generate_blobs: noise_std must be finite and non-negative");
  }
  Rng rng(p.seed);
  const double half_width = 0.3 * p.center_spread;
  std::vector<Tensor> centers;
  centers.reserve(p.num_classes);
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    Tensor center({p.dim});
    for (std::size_t j = 0; j < p.dim; ++j) center[j] = 0.5 + half_width * (2.0 * rng.uniform() - 1.0);
    centers.push_back(std::move(center));
  }
  Dataset data;
  data.name = "blobs";
  data.num_classes = p.num_classes;
  data.inputs.reserve(p.num_classes * p.samples_per_class);
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    for (std::size_t s = 0; s < p.samples_per_class; ++s) {
      Tensor x = centers[c];
      if (p.noise_std > 0.0) {
        for (std::size_t j = 0; j < p.dim; ++j) x[j] = std::clamp(x[j] + p.noise_std * rng.normal(), 0.0, 1.0);
      }
      data.inputs.push_back(std::move(x));
      data.labels.push_back(c);
    }
  }
  return data;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Dataset parse_idx_pair(const std::vector<std::uint8_t>& images, const std::vector<std::uint8_t>& labels,
                       std::string name) {
  const auto image_magic = read_be32(images, 0, "images");
  if (image_magic != kIdxImagesMagic) {
    throw FormatError("IDX images magic is " + hex32(image_magic) + ", expected " + hex32(kIdxImagesMagic), 0);
  }
  const auto label_magic = read_be32(labels, 0, "labels");
  if (label_magic != kIdxLabelsMagic) {
    throw FormatError("IDX labels magic is " + hex32(label_magic) + ", expected " + hex32(kIdxLabelsMagic), 0);
  }
  const std::size_t count = read_be32(images, 4, "images");
  const std::size_t rows = read_be32(images, 8, "images");
  const std::size_t cols = read_be32(images, 12, "images");
  const std::size_t label_count = read_be32(labels, 4, "labels");
  if (count != label_count) {
    throw ConsistencyError("IDX image count " + std::to_string(count) + " differs from label count " +
                           std::to_string(label_count));
  }
  if (count == 0 || rows == 0 || cols == 0) throw FormatError("IDX images header has a zero dimension", 4);
  const std::size_t dim = rows * cols;
  const std::size_t image_header = 16;
  const std::size_t label_header = 8;
  if (images.size() < image_header + count * dim) {
    throw FormatError("truncated IDX image payload: need " + std::to_string(image_header + count * dim) +
                          " bytes",
                      images.size());
  }
  if (labels.size() < label_header + count) {
    throw FormatError("truncated IDX label payload: need " + std::to_string(label_header + count) + " bytes",
                      labels.size());
  }
  Dataset data;
  data.name = std::move(name);
  data.rows = rows;
  data.cols = cols;
  data.inputs.reserve(count);
  data.labels.reserve(count);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    Tensor x({dim});
    const std::uint8_t* px = images.data() + image_header + i * dim;
    for (std::size_t j = 0; j < dim; ++j) x[j] = static_cast<double>(px[j]) / 255.0;
    data.inputs.push_back(std::move(x));
    const std::size_t label = labels[label_header + i];
    max_label = std::max(max_label, label);
    data.labels.push_back(label);
  }
  data.num_classes = max_label + 1;
  return data;
}

Dataset load_idx_pair(const std::string& images_path, const std::string& labels_path) {
  return parse_idx_pair(read_file_bytes(images_path), read_file_bytes(labels_path), images_path);
}

void write_idx_pair(const Dataset& data, const std::string& images_path, const std::string& labels_path) {
  data.validate();
  const std::size_t dim = data.input_dim();
  std::size_t rows = data.rows;
  std::size_t cols = data.cols;
  if (rows * cols != dim) {
    rows = 1;
    cols = dim;
  }
  std::vector<std::uint8_t> img;
  img.reserve(16 + data.size() * dim);
  put_be32(img, kIdxImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(data.size()));
  put_be32(img, static_cast<std::uint32_t>(rows));
  put_be32(img, static_cast<std::uint32_t>(cols));
  for (const auto& x : data.inputs) {
    for (double v : x.data()) img.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  std::vector<std::uint8_t> lab;
  lab.reserve(8 + data.size());
  put_be32(lab, kIdxLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (auto l : data.labels) {
    if (l > 255) throw ArgumentError("write_idx_pair: label " + std::to_string(l) + " does not fit in a byte");
    lab.push_back(static_cast<std::uint8_t>(l));
  }
  write_bytes(images_path, img);
  write_bytes(labels_path, lab);
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("split: train_fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
  if (n_train == 0 || n_train == data.size()) {
    throw ArgumentError("split: fraction " + std::to_string(train_fraction) + " of " +
                        std::to_string(data.size()) + " samples leaves one side empty");
  }
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {subset(data, train_idx, data.name + "/train"), subset(data, test_idx, data.name + "/test")};
}

Dataset take_per_class(const Dataset& data, std::size_t count) {
  std::vector<std::size_t> taken(data.num_classes, 0);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& t = taken[data.labels[i]];
    if (t < count) {
      ++t;
      idx.push_back(i);
    }
  }
  return subset(data, idx, data.name);
}

}  // namespace ares
