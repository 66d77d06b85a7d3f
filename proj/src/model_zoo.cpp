#include "ares/model_zoo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "ares/error.hpp"
#include "ares/rng.hpp"

namespace ares {

namespace {

constexpr char kMagicPrefix[] = "ARESMDL";
constexpr char kVersion = '1';
constexpr std::uint32_t kMaxDim = 1u << 24;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) throw FormatError(std::string("truncated model file reading ") + what, pos_);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    T value;
    std::memcpy(&value, raw, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("truncated model file reading name", pos_);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void apply_sgd(ModelParams& params, const ParamGradients& grads, double lr) {
  for (std::size_t l = 0; l < params.dense.size(); ++l) {
    auto w = params.dense[l].weight.values();
    auto gw = grads.dense[l].weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
    auto b = params.dense[l].bias.values();
    auto gb = grads.dense[l].bias.values();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
  }
}

}  // namespace

std::string to_string(TrainingMode mode) { return mode == TrainingMode::natural ? "natural" : "adversarial"; }

TrainingMode parse_training_mode(std::string_view name) {
  if (name == "natural" || name == "N") return TrainingMode::natural;
  if (name == "adversarial" || name == "A") return TrainingMode::adversarial;
  throw ArgumentError("unknown training mode '" + std::string(name) + "'");
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning_rate must be positive");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (mode == TrainingMode::adversarial) {
    if (!(adv_eps >= 0.0)) throw ArgumentError("adv_eps must be >= 0");
    if (!(adv_alpha > 0.0)) throw ArgumentError("adv_alpha must be positive");
    if (adv_steps < 1) throw ArgumentError("adv_steps must be >= 1");
  }
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ModelParams params;
  for (const auto& layer : spec.layers) {
    if (layer.kind != LayerKind::dense) continue;
    DenseParams p{Tensor({layer.out_dim, layer.in_dim}), Tensor({layer.out_dim})};
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in_dim));
    for (auto& w : p.weight.values()) w = scale * rng.normal();
    params.dense.push_back(std::move(p));
  }
  return params;
}

TrainResult train(const ModelSpec& spec, const Dataset& data, const TrainingConfig& config) {
  config.validate();
  data.validate();
  spec.validate();
  if (data.input_dim() != spec.input_dim()) {
    throw DimensionError("train: dataset width " + std::to_string(data.input_dim()) + " differs from model '" +
                         spec.name + "' input width " + std::to_string(spec.input_dim()));
  }
  for (auto label : data.labels) {
    if (label >= spec.num_classes) {
      throw ArgumentError("train: label " + std::to_string(label) + " >= class count of model '" + spec.name + "'");
    }
  }

  TrainResult result{Model{spec, init_params(spec, config.seed)}, {}};
  Model& model = result.model;
  Rng shuffle_rng = Rng::child(config.seed, 1);
  Rng start_rng = Rng::child(config.seed, 2);
  const bool adversarial = config.mode == TrainingMode::adversarial;
  const AttackConfig inner = config.inner_attack();

  std::vector<std::size_t> order(data.size());
  std::vector<Tensor> batch_x;
  std::vector<std::size_t> batch_y;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(begin + batch_size, order.size());
      batch_x.clear();
      batch_y.clear();
      for (std::size_t k = begin; k < end; ++k) {
        const auto idx = order[k];
        batch_y.push_back(data.labels[idx]);
        if (adversarial) {
          auto pgd = pgd_full(model_oracle(model), data.inputs[idx], data.labels[idx], inner, &start_rng,
                              /*stop_on_success=*/false);
          batch_x.push_back(std::move(pgd.x_adv));
        } else {
          batch_x.push_back(data.inputs[idx]);
        }
      }
      auto g = param_gradients(model, batch_x, batch_y);
      if (!std::isfinite(g.mean_loss)) {
        throw TrainingError("training of model '" + spec.name + "' diverged: non-finite loss", epoch, batches);
      }
      apply_sgd(model.params, g.grads, config.learning_rate);
      loss_sum += g.mean_loss;
      ++batches;
    }
    for (const auto& p : model.params.dense) {
      if (!p.weight.all_finite() || !p.bias.all_finite()) {
        throw TrainingError("training of model '" + spec.name + "' diverged: non-finite parameters", epoch, batches);
      }
    }
    result.epoch_losses.push_back(loss_sum / batches);
  }
  return result;
}

EvalReport evaluate(const Model& model, const Dataset& data, const std::optional<AttackConfig>& attack) {
  data.validate();
  EvalReport report;
  report.num_samples = data.size();
  std::size_t natural_correct = 0;
  std::size_t robust_correct = 0;
  const auto oracle = model_oracle(model);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(model, data.inputs[i]) != data.labels[i]) continue;
    ++natural_correct;
    if (attack) {
      // Random start draws from a per-sample stream so evaluation order is irrelevant.
      Rng rng = Rng::child(0x5eed, i);
      if (!pgd_full(oracle, data.inputs[i], data.labels[i], *attack, &rng).success) ++robust_correct;
    }
  }
  const double n = static_cast<double>(data.size());
  report.natural_accuracy = static_cast<double>(natural_correct) / n;
  if (attack) report.adversarial_accuracy = static_cast<double>(robust_correct) / n;
  return report;
}

std::vector<std::uint8_t> serialize_model(const Model& model) {
  model.validate();
  std::vector<std::uint8_t> out(kMagicPrefix, kMagicPrefix + 7);
  out.push_back(static_cast<std::uint8_t>(kVersion));
  const auto& spec = model.spec;
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.layers.size()));
  for (const auto& l : spec.layers) {
    put_le<std::uint32_t>(out, l.kind == LayerKind::dense ? 0u : 1u);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.in_dim));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.out_dim));
  }
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.num_classes));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.name.size()));
  out.insert(out.end(), spec.name.begin(), spec.name.end());
  for (const auto& p : model.params.dense) {
    for (double v : p.weight.data()) put_le<double>(out, v);
    for (double v : p.bias.data()) put_le<double>(out, v);
  }
  return out;
}

Model deserialize_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) throw FormatError("model file shorter than its magic string", bytes.size());
  if (std::memcmp(bytes.data(), kMagicPrefix, 7) != 0) throw FormatError("bad model file magic", 0);
  if (bytes[7] != static_cast<std::uint8_t>(kVersion)) {
    throw VersionError(std::string("unsupported model file version '") + static_cast<char>(bytes[7]) +
                       "', expected '" + kVersion + "'");
  }
  Reader r(bytes);
  r.get_string(8);
  Model model;
  const std::size_t at_count = r.pos();
  const auto layer_count = r.get<std::uint32_t>("layer count");
  // Each layer needs 12 bytes; reject absurd counts before allocating.
  if (layer_count == 0 || static_cast<std::size_t>(layer_count) * 12 > r.remaining()) {
    throw FormatError("implausible layer count " + std::to_string(layer_count), at_count);
  }
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    const std::size_t at = r.pos();
    const auto kind = r.get<std::uint32_t>("layer kind");
    const auto in = r.get<std::uint32_t>("layer in_dim");
    const auto out = r.get<std::uint32_t>("layer out_dim");
    if (kind > 1) throw FormatError("unknown layer kind " + std::to_string(kind), at);
    if (in == 0 || out == 0 || in > kMaxDim || out > kMaxDim) throw FormatError("bad layer dimensions", at + 4);
    model.spec.layers.push_back({kind == 0 ? LayerKind::dense : LayerKind::relu, in, out});
  }
  model.spec.num_classes = r.get<std::uint32_t>("class count");
  const std::size_t at_name = r.pos();
  const auto name_len = r.get<std::uint32_t>("name length");
  if (name_len > r.remaining()) throw FormatError("name length exceeds file size", at_name);
  model.spec.name = r.get_string(name_len);
  const std::size_t at_params = r.pos();
  try {
    model.spec.validate();
  } catch (const DimensionError& e) {
    throw FormatError(std::string("inconsistent model spec: ") + e.what(), at_params);
  }
  std::size_t need = 0;
  for (const auto& l : model.spec.layers) {
    if (l.kind == LayerKind::dense) need += (l.out_dim * l.in_dim + l.out_dim) * sizeof(double);
  }
  if (need > r.remaining()) {
    throw FormatError("truncated parameter block: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(r.remaining()),
                      bytes.size());
  }
  for (const auto& l : model.spec.layers) {
    if (l.kind != LayerKind::dense) continue;
    DenseParams p{Tensor({l.out_dim, l.in_dim}), Tensor({l.out_dim})};
    for (auto& v : p.weight.values()) v = r.get<double>("weight");
    for (auto& v : p.bias.values()) v = r.get<double>("bias");
    model.params.dense.push_back(std::move(p));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after parameter block", r.pos());
  try {
    model.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("invalid parameters: ") + e.what(), at_params);
  }
  return model;
}

void save_model(const Model& model, const std::string& path) {
  auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

Model load_model(const std::string& path) { return deserialize_model(read_file_bytes(path)); }

}  // namespace ares
