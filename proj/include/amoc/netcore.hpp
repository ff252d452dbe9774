#pragma once

// Layer-stack text classifier: mean-pooled embeddings, a stack of residual
// tanh layers, a layer-attention decoder and a linear softmax head.
//
//   h0      = mean_t E[token_t]
//   h_j     = h_{j-1} + tanh(W_j h_{j-1} + b_j)          j = 1..depth
//   a       = softmax(attention)                         one score per layer
//   r       = sum_j a_j h_j
//   p(y|x)  = softmax(U r + c)
//
// All parameters live in one ordered list of tensors; the freeze mask holds
// one flag per tensor.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace amoc {

using TokenId = std::uint32_t;
using ClassId = std::uint32_t;

inline constexpr TokenId kOovToken = 0;

struct Example {
  std::vector<TokenId> tokens;
  std::optional<ClassId> label;
  // Number of per-token predictions. 1 means one prediction for the whole
  // (mean-pooled) sequence; n > 1 scores each of the first n tokens on its own.
  std::uint32_t positions = 1;

  bool operator==(const Example&) const = default;
};

// Returns a copy of the examples with labels removed.
std::vector<Example> strip_labels(std::span<const Example> examples);

class ProbDist {
 public:
  ProbDist() = default;
  // Throws InputError unless the values form a valid distribution (tol 1e-6).
  explicit ProbDist(std::vector<double> p);

  static ProbDist softmax(std::span<const double> logits);
  static ProbDist uniform(std::size_t n);
  static bool is_valid(std::span<const double> p, double tol = 1e-6);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }
  // Lowest index among maximal entries.
  std::size_t argmax() const;

 private:
  std::vector<double> p_;
};

struct ModelDims {
  std::uint32_t vocab_size = 2000;
  std::uint32_t width = 32;
  std::uint32_t n_classes = 2;
  std::uint32_t depth = 6;  // layer count of the uncompressed model

  bool operator==(const ModelDims&) const = default;
};

struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::size_t size() const { return data.size(); }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum class TensorKind { embedding, layer_weight, layer_bias, layer_attention, head_weight, head_bias };

class LayerStackModel {
 public:
  // Zero-initialized, all tensors trainable. active_layers are 1-based
  // original layer indices, strictly increasing, nonempty, <= dims.depth.
  LayerStackModel(ModelDims dims, std::vector<std::uint32_t> active_layers);

  // Full-depth model with seeded random weights and uniform layer attention.
  static LayerStackModel initialize(ModelDims dims, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  std::span<const std::uint32_t> active_layers() const { return active_layers_; }
  std::size_t depth() const { return active_layers_.size(); }

  std::size_t tensor_count() const { return tensors_.size(); }
  Tensor& tensor(std::size_t i) { return tensors_.at(i); }
  const Tensor& tensor(std::size_t i) const { return tensors_.at(i); }
  TensorKind kind(std::size_t i) const;
  std::string tensor_name(std::size_t i) const;

  static constexpr std::size_t embedding_index() { return 0; }
  std::size_t weight_index(std::size_t slot) const { return 1 + 2 * slot; }
  std::size_t bias_index(std::size_t slot) const { return 2 + 2 * slot; }
  std::size_t attention_index() const { return 1 + 2 * depth(); }
  std::size_t head_weight_index() const { return 2 + 2 * depth(); }
  std::size_t head_bias_index() const { return 3 + 2 * depth(); }

  Tensor& embedding() { return tensors_[embedding_index()]; }
  const Tensor& embedding() const { return tensors_[embedding_index()]; }
  Tensor& weight(std::size_t slot) { return tensors_[weight_index(slot)]; }
  const Tensor& weight(std::size_t slot) const { return tensors_[weight_index(slot)]; }
  Tensor& bias(std::size_t slot) { return tensors_[bias_index(slot)]; }
  const Tensor& bias(std::size_t slot) const { return tensors_[bias_index(slot)]; }
  Tensor& attention() { return tensors_[attention_index()]; }
  const Tensor& attention() const { return tensors_[attention_index()]; }
  Tensor& head_weight() { return tensors_[head_weight_index()]; }
  const Tensor& head_weight() const { return tensors_[head_weight_index()]; }
  Tensor& head_bias() { return tensors_[head_bias_index()]; }
  const Tensor& head_bias() const { return tensors_[head_bias_index()]; }

  bool is_frozen(std::size_t i) const { return frozen_.at(i); }
  void set_frozen(std::size_t i, bool frozen) { frozen_.at(i) = frozen; }
  void freeze_all();
  void unfreeze_all();
  const std::vector<bool>& freeze_mask() const { return frozen_; }

  std::size_t parameter_count() const;
  std::size_t trainable_parameter_count() const;

  // Bit-exact comparison of dims, active layers, tensors and freeze mask.
  bool operator==(const LayerStackModel& other) const;

 private:
  ModelDims dims_;
  std::vector<std::uint32_t> active_layers_;
  std::vector<Tensor> tensors_;
  std::vector<bool> frozen_;
};

// Throws InputError when a token is out of vocabulary range, the example is
// empty, positions is out of range, or a label is outside the label space.
void validate_example(const LayerStackModel& model, const Example& x);

// One distribution per prediction position.
std::vector<ProbDist> forward_all(const LayerStackModel& model, const Example& x);
// Single-position examples only.
ProbDist forward(const LayerStackModel& model, const Example& x);

struct Gradients {
  // One entry per tensor; std::nullopt for frozen tensors.
  std::vector<std::optional<std::vector<double>>> tensors;
};

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;
};

// Mean cross-entropy over a batch of labeled single-position examples.
LossAndGrads loss_and_grads(const LayerStackModel& model, std::span<const Example> batch);
double mean_loss(const LayerStackModel& model, std::span<const Example> batch);

}  // namespace amoc
