#pragma once

// Small feedforward classifiers (dense + ReLU stacks) with exact
// reverse-mode gradients with respect to both inputs and parameters.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ares/tensor.hpp"

namespace ares {

enum class LayerKind { dense, relu };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  // For relu layers in_dim == out_dim == width of the activation.
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;

  static LayerSpec dense(std::size_t in, std::size_t out) { return {LayerKind::dense, in, out}; }
  static LayerSpec relu(std::size_t width) { return {LayerKind::relu, width, width}; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  std::size_t num_classes = 0;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  std::size_t dense_count() const;
  // Throws DimensionError when layers do not chain or the head is wrong.
  void validate() const;

  // dense(in, h0), relu, dense(h0, h1), relu, ..., dense(h_last, classes)
  static ModelSpec mlp(std::string name, std::size_t input_dim,
                       const std::vector<std::size_t>& hidden, std::size_t num_classes);

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// One entry per dense layer, in declaration order.
struct DenseParams {
  Tensor weight;  // [out_dim, in_dim]
  Tensor bias;    // [out_dim]
  friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

struct ModelParams {
  std::vector<DenseParams> dense;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Gradients share the parameter layout.
using ParamGradients = ModelParams;

struct Model {
  ModelSpec spec;
  ModelParams params;

  // Checks spec validity and that params match it and are finite.
  void validate() const;
};

// Activations entering and leaving each layer; inputs[i] feeds layers[i].
struct ForwardTrace {
  std::vector<Tensor> inputs;
  std::vector<Tensor> outputs;
  std::size_t layer_count() const { return outputs.size(); }
};

struct ForwardResult {
  Tensor logits;
  ForwardTrace trace;
};

struct LossResult {
  double loss = 0.0;
  Tensor probs;
};

ForwardResult forward(const Model& model, const Tensor& x);
Tensor logits(const Model& model, const Tensor& x);

// Softmax fused with cross-entropy; max-logit subtraction keeps both stable.
LossResult softmax_cross_entropy(const Tensor& logits, std::size_t label);
Tensor softmax(const Tensor& logits);

// argmax of the softmax probabilities (lowest index on ties).
std::size_t predict(const Model& model, const Tensor& x);

Tensor input_gradient(const Model& model, const Tensor& x, std::size_t label);

struct BatchGradients {
  ParamGradients grads;
  double mean_loss = 0.0;
};

// Mean over the batch of per-sample parameter gradients.
BatchGradients param_gradients(const Model& model, std::span<const Tensor> batch_x,
                               std::span<const std::size_t> batch_labels);

ParamGradients zeros_like(const ModelParams& params);

}  // namespace ares
