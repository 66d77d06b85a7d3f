#include "ares/network.hpp"

#include <algorithm>
#include <cmath>

#include "ares/error.hpp"

namespace ares {

namespace {

std::string layer_name(std::size_t index, const LayerSpec& layer) {
  return "layer " + std::to_string(index) + (layer.kind == LayerKind::dense ? " (dense)" : " (relu)");
}

// Accumulates scale * gradients into `param_grads` (if non-null) and returns
// the gradient with respect to the network input.
Tensor backward(const Model& model, const ForwardTrace& trace, Tensor upstream,
                ParamGradients* param_grads, double scale) {
  const auto& layers = model.spec.layers;
  std::size_t dense_index = model.params.dense.size();
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& layer = layers[li];
    const Tensor& in = trace.inputs[li];
    if (layer.kind == LayerKind::relu) {
      // Subgradient at 0 is 0.
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        if (!(in[i] > 0.0)) upstream[i] = 0.0;
      }
      continue;
    }
    --dense_index;
    const auto& p = model.params.dense[dense_index];
    const std::size_t out_dim = layer.out_dim;
    const std::size_t in_dim = layer.in_dim;
    if (param_grads) {
      auto& g = param_grads->dense[dense_index];
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double go = scale * upstream[o];
        g.bias[o] += go;
        if (go == 0.0) continue;
        double* row = &g.weight.at(o, 0);
        for (std::size_t i = 0; i < in_dim; ++i) row[i] += go * in[i];
      }
    }
    Tensor down({in_dim});
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double go = upstream[o];
      if (go == 0.0) continue;
      const double* row = p.weight.data().data() + o * layer.in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) down[i] += go * row[i];
    }
    upstream = std::move(down);
  }
  return upstream;
}

Tensor loss_logit_gradient(const LossResult& lr, std::size_t label) {
  Tensor g = lr.probs;
  g[label] -= 1.0;
  return g;
}

}  // namespace

std::size_t ModelSpec::dense_count() const {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.kind == LayerKind::dense; }));
}

void ModelSpec::validate() const {
  if (layers.empty()) throw DimensionError("model '" + name + "' has no layers");
  if (num_classes == 0) throw DimensionError("model '" + name + "' has zero classes");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in_dim == 0 || l.out_dim == 0) {
      throw DimensionError("model '" + name + "' " + layer_name(i, l) + " has a zero dimension");
    }
    if (l.kind == LayerKind::relu && l.in_dim != l.out_dim) {
      throw DimensionError("model '" + name + "' " + layer_name(i, l) + " must preserve width");
    }
    if (i > 0 && layers[i - 1].out_dim != l.in_dim) {
      throw DimensionError("model '" + name + "' " + layer_name(i, l) + " expects input width " +
                           std::to_string(l.in_dim) + " but previous layer produces " +
                           std::to_string(layers[i - 1].out_dim));
    }
  }
  const auto& last = layers.back();
  if (last.kind != LayerKind::dense) throw DimensionError("model '" + name + "' must end in a dense layer");
  if (last.out_dim != num_classes) {
    throw DimensionError("model '" + name + "' final layer width " + std::to_string(last.out_dim) +
                         " differs from class count " + std::to_string(num_classes));
  }
}

ModelSpec ModelSpec::mlp(std::string name, std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         std::size_t num_classes) {
  ModelSpec spec;
  spec.name = std::move(name);
  spec.num_classes = num_classes;
  std::size_t width = input_dim;
  for (auto h : hidden) {
    spec.layers.push_back(LayerSpec::dense(width, h));
    spec.layers.push_back(LayerSpec::relu(h));
    width = h;
  }
  spec.layers.push_back(LayerSpec::dense(width, num_classes));
  spec.validate();
  return spec;
}

void Model::validate() const {
  spec.validate();
  if (params.dense.size() != spec.dense_count()) {
    throw DimensionError("model '" + spec.name + "' has " + std::to_string(params.dense.size()) +
                         " parameter blocks for " + std::to_string(spec.dense_count()) + " dense layers");
  }
  std::size_t di = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.kind != LayerKind::dense) continue;
    const auto& p = params.dense[di++];
    if (p.weight.shape() != std::vector<std::size_t>{l.out_dim, l.in_dim} ||
        p.bias.shape() != std::vector<std::size_t>{l.out_dim}) {
      throw DimensionError("model '" + spec.name + "' " + layer_name(i, l) + " parameter shape mismatch: weight " +
                           shape_string(p.weight.shape()) + ", bias " + shape_string(p.bias.shape()));
    }
    if (!p.weight.all_finite() || !p.bias.all_finite()) {
      throw ArgumentError("model '" + spec.name + "' " + layer_name(i, l) + " has non-finite parameters");
    }
  }
}

ForwardResult forward(const Model& model, const Tensor& x) {
  const auto& layers = model.spec.layers;
  if (layers.empty()) throw DimensionError("forward: model has no layers");
  if (x.size() != layers.front().in_dim) {
    throw DimensionError("forward: " + layer_name(0, layers.front()) + " expects " +
                         std::to_string(layers.front().in_dim) + " inputs, got shape " + shape_string(x.shape()));
  }
  ForwardResult result;
  result.trace.inputs.reserve(layers.size());
  result.trace.outputs.reserve(layers.size());
  Tensor act({x.size()}, std::vector<double>(x.data()));
  std::size_t dense_index = 0;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& layer = layers[li];
    if (act.size() != layer.in_dim) {
      throw DimensionError("forward: " + layer_name(li, layer) + " expects " + std::to_string(layer.in_dim) +
                           " inputs, got " + std::to_string(act.size()));
    }
    Tensor out({layer.out_dim});
    if (layer.kind == LayerKind::dense) {
      if (dense_index >= model.params.dense.size()) {
        throw DimensionError("forward: missing parameters for " + layer_name(li, layer));
      }
      const auto& p = model.params.dense[dense_index++];
      if (p.weight.size() != layer.out_dim * layer.in_dim || p.bias.size() != layer.out_dim) {
        throw DimensionError("forward: parameter shape mismatch at " + layer_name(li, layer));
      }
      for (std::size_t o = 0; o < layer.out_dim; ++o) {
        const double* row = p.weight.data().data() + o * layer.in_dim;
        double sum = p.bias[o];
        for (std::size_t i = 0; i < layer.in_dim; ++i) sum += row[i] * act[i];
        out[o] = sum;
      }
    } else {
      for (std::size_t i = 0; i < layer.in_dim; ++i) out[i] = act[i] > 0.0 ? act[i] : 0.0;
    }
    result.trace.inputs.push_back(std::move(act));
    result.trace.outputs.push_back(out);
    act = std::move(out);
  }
  result.logits = std::move(act);
  return result;
}

Tensor logits(const Model& model, const Tensor& x) { return forward(model, x).logits; }

Tensor softmax(const Tensor& z) {
  if (z.empty()) throw DimensionError("softmax of empty tensor");
  double zmax = z[argmax(z)];
  Tensor p = z;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    sum += p[i];
  }
  for (std::size_t i = 0; i < p.size(); ++i) p[i] /= sum;
  return p;
}

LossResult softmax_cross_entropy(const Tensor& z, std::size_t label) {
  if (label >= z.size()) {
    throw ArgumentError("softmax_cross_entropy: label " + std::to_string(label) + " out of range for " +
                        std::to_string(z.size()) + " classes");
  }
  double zmax = z[argmax(z)];
  double sum = 0.0;
  for (double v : z.data()) sum += std::exp(v - zmax);
  double log_sum = std::log(sum);
  LossResult r;
  r.probs = z;
  for (std::size_t i = 0; i < z.size(); ++i) r.probs[i] = std::exp(z[i] - zmax) / sum;
  // log-sum-exp minus the label logit; >= 0 up to rounding.
  r.loss = std::max(0.0, log_sum - (z[label] - zmax));
  return r;
}

std::size_t predict(const Model& model, const Tensor& x) { return argmax(softmax(logits(model, x))); }

Tensor input_gradient(const Model& model, const Tensor& x, std::size_t label) {
  auto fw = forward(model, x);
  auto lr = softmax_cross_entropy(fw.logits, label);
  Tensor g = backward(model, fw.trace, loss_logit_gradient(lr, label), nullptr, 1.0);
  return Tensor(x.shape(), std::vector<double>(g.data()));
}

ParamGradients zeros_like(const ModelParams& params) {
  ParamGradients g;
  g.dense.reserve(params.dense.size());
  for (const auto& p : params.dense) g.dense.push_back({Tensor(p.weight.shape()), Tensor(p.bias.shape())});
  return g;
}

BatchGradients param_gradients(const Model& model, std::span<const Tensor> batch_x,
                               std::span<const std::size_t> batch_labels) {
  if (batch_x.empty()) throw ArgumentError("param_gradients: empty batch");
  if (batch_x.size() != batch_labels.size()) {
    throw ArgumentError("param_gradients: " + std::to_string(batch_x.size()) + " inputs but " +
                        std::to_string(batch_labels.size()) + " labels");
  }
  BatchGradients out;
  out.grads = zeros_like(model.params);
  const double scale = 1.0 / static_cast<double>(batch_x.size());
  double loss_sum = 0.0;
  for (std::size_t s = 0; s < batch_x.size(); ++s) {
    auto fw = forward(model, batch_x[s]);
    auto lr = softmax_cross_entropy(fw.logits, batch_labels[s]);
    loss_sum += lr.loss;
    backward(model, fw.trace, loss_logit_gradient(lr, batch_labels[s]), &out.grads, scale);
  }
  out.mean_loss = loss_sum * scale;
  return out;
}

}  // namespace ares
