#include "amoc/netcore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "amoc/error.hpp"
#include "amoc/random.hpp"

namespace amoc {

std::vector<Example> strip_labels(std::span<const Example> examples) {
  std::vector<Example> out(examples.begin(), examples.end());
  for (auto& x : out) x.label.reset();
  return out;
}

// ---------------------------------------------------------------------------
// ProbDist

ProbDist::ProbDist(std::vector<double> p) : p_(std::move(p)) {
  if (!is_valid(p_)) throw InputError("ProbDist: values do not form a probability distribution");
}

bool ProbDist::is_valid(std::span<const double> p, double tol) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

ProbDist ProbDist::softmax(std::span<const double> logits) {
  ProbDist out;
  out.p_.resize(logits.size());
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.p_[i] = std::exp(logits[i] - peak);
    sum += out.p_[i];
  }
  for (double& v : out.p_) v /= sum;
  return out;
}

ProbDist ProbDist::uniform(std::size_t n) {
  if (n == 0) throw InputError("ProbDist::uniform: zero classes");
  return ProbDist(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

std::size_t ProbDist::argmax() const {
  return static_cast<std::size_t>(std::max_element(p_.begin(), p_.end()) - p_.begin());
}

// ---------------------------------------------------------------------------
// LayerStackModel

LayerStackModel::LayerStackModel(ModelDims dims, std::vector<std::uint32_t> active_layers)
    : dims_(dims), active_layers_(std::move(active_layers)) {
  if (dims_.vocab_size == 0 || dims_.width == 0 || dims_.n_classes == 0 || dims_.depth == 0) {
    throw InputError("LayerStackModel: all dimensions must be positive");
  }
  if (active_layers_.empty()) throw InputError("LayerStackModel: no active layers");
  for (std::size_t i = 0; i < active_layers_.size(); ++i) {
    const auto layer = active_layers_[i];
    if (layer < 1 || layer > dims_.depth) throw InputError("LayerStackModel: active layer index out of range");
    if (i > 0 && active_layers_[i - 1] >= layer) {
      throw InputError("LayerStackModel: active layers must be strictly increasing");
    }
  }
  const std::size_t d = dims_.width;
  tensors_.reserve(4 + 2 * active_layers_.size());
  tensors_.emplace_back(dims_.vocab_size, d);
  for (std::size_t j = 0; j < active_layers_.size(); ++j) {
    tensors_.emplace_back(d, d);
    tensors_.emplace_back(d, 1);
  }
  tensors_.emplace_back(active_layers_.size(), 1);
  tensors_.emplace_back(dims_.n_classes, d);
  tensors_.emplace_back(dims_.n_classes, 1);
  frozen_.assign(tensors_.size(), false);
}

LayerStackModel LayerStackModel::initialize(ModelDims dims, std::uint64_t seed) {
  std::vector<std::uint32_t> layers(dims.depth);
  std::iota(layers.begin(), layers.end(), 1u);
  LayerStackModel model(dims, std::move(layers));
  Rng rng(seed);
  const double layer_scale = 0.5 / std::sqrt(static_cast<double>(dims.width));
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(dims.width));
  for (double& v : model.embedding().data) v = 0.3 * rng.normal();
  for (std::size_t j = 0; j < model.depth(); ++j) {
    for (double& v : model.weight(j).data) v = layer_scale * rng.normal();
  }
  for (double& v : model.head_weight().data) v = head_scale * rng.normal();
  return model;
}

TensorKind LayerStackModel::kind(std::size_t i) const {
  if (i == embedding_index()) return TensorKind::embedding;
  if (i == attention_index()) return TensorKind::layer_attention;
  if (i == head_weight_index()) return TensorKind::head_weight;
  if (i == head_bias_index()) return TensorKind::head_bias;
  if (i >= tensors_.size()) throw InputError("tensor index out of range");
  return (i % 2 == 1) ? TensorKind::layer_weight : TensorKind::layer_bias;
}

std::string LayerStackModel::tensor_name(std::size_t i) const {
  switch (kind(i)) {
    case TensorKind::embedding: return "embedding";
    case TensorKind::layer_weight: return "layer" + std::to_string(active_layers_[(i - 1) / 2]) + ".weight";
    case TensorKind::layer_bias: return "layer" + std::to_string(active_layers_[(i - 2) / 2]) + ".bias";
    case TensorKind::layer_attention: return "decoder.layer_attention";
    case TensorKind::head_weight: return "decoder.head.weight";
    case TensorKind::head_bias: return "decoder.head.bias";
  }
  return {};
}

void LayerStackModel::freeze_all() { std::fill(frozen_.begin(), frozen_.end(), true); }
void LayerStackModel::unfreeze_all() { std::fill(frozen_.begin(), frozen_.end(), false); }

std::size_t LayerStackModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

std::size_t LayerStackModel::trainable_parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (!frozen_[i]) n += tensors_[i].size();
  }
  return n;
}

bool LayerStackModel::operator==(const LayerStackModel& other) const {
  if (dims_ != other.dims_ || active_layers_ != other.active_layers_ || frozen_ != other.frozen_ ||
      tensors_.size() != other.tensors_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = other.tensors_[i];
    if (a.rows != b.rows || a.cols != b.cols) return false;
    if (std::memcmp(a.data.data(), b.data.data(), a.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

struct Activations {
  std::vector<std::vector<double>> hidden;  // hidden[0] is the pooled input
  std::vector<std::vector<double>> act;     // tanh output of each layer
  std::vector<double> attention;
  std::vector<double> mixed;
  std::vector<double> logits;
};

void pool_tokens(const LayerStackModel& model, std::span<const TokenId> tokens, std::vector<double>& out) {
  const std::size_t d = model.dims().width;
  const auto& emb = model.embedding();
  out.assign(d, 0.0);
  for (TokenId t : tokens) {
    const double* row = &emb.data[static_cast<std::size_t>(t) * d];
    for (std::size_t k = 0; k < d; ++k) out[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (double& v : out) v *= inv;
}

void run_stack(const LayerStackModel& model, Activations& a) {
  const std::size_t d = model.dims().width;
  const std::size_t depth = model.depth();
  a.hidden.resize(depth + 1);
  a.act.resize(depth);
  for (std::size_t j = 0; j < depth; ++j) {
    const auto& w = model.weight(j).data;
    const auto& b = model.bias(j).data;
    const auto& in = a.hidden[j];
    auto& g = a.act[j];
    auto& out = a.hidden[j + 1];
    g.resize(d);
    out.resize(d);
    for (std::size_t r = 0; r < d; ++r) {
      double z = b[r];
      const double* row = &w[r * d];
      for (std::size_t c = 0; c < d; ++c) z += row[c] * in[c];
      g[r] = std::tanh(z);
      out[r] = in[r] + g[r];
    }
  }

  const auto& scores = model.attention().data;
  const double peak = *std::max_element(scores.begin(), scores.end());
  a.attention.resize(depth);
  double norm = 0.0;
  for (std::size_t j = 0; j < depth; ++j) {
    a.attention[j] = std::exp(scores[j] - peak);
    norm += a.attention[j];
  }
  for (double& v : a.attention) v /= norm;

  a.mixed.assign(d, 0.0);
  for (std::size_t j = 0; j < depth; ++j) {
    const auto& h = a.hidden[j + 1];
    for (std::size_t k = 0; k < d; ++k) a.mixed[k] += a.attention[j] * h[k];
  }

  const std::size_t n_classes = model.dims().n_classes;
  const auto& u = model.head_weight().data;
  const auto& c = model.head_bias().data;
  a.logits.resize(n_classes);
  for (std::size_t y = 0; y < n_classes; ++y) {
    double z = c[y];
    const double* row = &u[y * d];
    for (std::size_t k = 0; k < d; ++k) z += row[k] * a.mixed[k];
    a.logits[y] = z;
  }
}

void accumulate(std::optional<std::vector<double>>& slot, std::size_t index, double value) {
  if (slot) (*slot)[index] += value;
}

}  // namespace

void validate_example(const LayerStackModel& model, const Example& x) {
  if (x.tokens.empty()) throw InputError("example has no tokens");
  if (x.positions == 0 || x.positions > x.tokens.size()) {
    throw InputError("example positions must be in [1, token count]");
  }
  for (TokenId t : x.tokens) {
    if (t >= model.dims().vocab_size) {
      throw InputError("token index " + std::to_string(t) + " outside vocabulary of size " +
                       std::to_string(model.dims().vocab_size));
    }
  }
  if (x.label && *x.label >= model.dims().n_classes) {
    throw InputError("label " + std::to_string(*x.label) + " outside label space");
  }
}

std::vector<ProbDist> forward_all(const LayerStackModel& model, const Example& x) {
  validate_example(model, x);
  std::vector<ProbDist> out;
  out.reserve(x.positions);
  Activations a;
  a.hidden.resize(1);
  if (x.positions == 1) {
    pool_tokens(model, x.tokens, a.hidden[0]);
    run_stack(model, a);
    out.push_back(ProbDist::softmax(a.logits));
    return out;
  }
  for (std::uint32_t p = 0; p < x.positions; ++p) {
    pool_tokens(model, std::span(x.tokens).subspan(p, 1), a.hidden[0]);
    run_stack(model, a);
    out.push_back(ProbDist::softmax(a.logits));
  }
  return out;
}

ProbDist forward(const LayerStackModel& model, const Example& x) {
  if (x.positions != 1) throw InputError("forward: multi-position example; use forward_all");
  return std::move(forward_all(model, x).front());
}

LossAndGrads loss_and_grads(const LayerStackModel& model, std::span<const Example> batch) {
  if (batch.empty()) throw InputError("loss_and_grads: empty batch");
  const std::size_t d = model.dims().width;
  const std::size_t depth = model.depth();
  const std::size_t n_classes = model.dims().n_classes;

  LossAndGrads result;
  auto& grads = result.grads.tensors;
  grads.resize(model.tensor_count());
  for (std::size_t i = 0; i < model.tensor_count(); ++i) {
    if (!model.is_frozen(i)) grads[i].emplace(model.tensor(i).size(), 0.0);
  }

  const double scale = 1.0 / static_cast<double>(batch.size());
  Activations a;
  a.hidden.resize(1);
  std::vector<double> dlogits(n_classes), dmixed(d), dattn(depth), dh(d), dz(d);

  for (const Example& x : batch) {
    validate_example(model, x);
    if (!x.label) throw InputError("loss_and_grads: unlabeled example in batch");
    if (x.positions != 1) throw InputError("loss_and_grads: multi-position examples are not trainable");

    pool_tokens(model, x.tokens, a.hidden[0]);
    run_stack(model, a);
    const ProbDist p = ProbDist::softmax(a.logits);
    const ClassId y = *x.label;
    result.loss -= std::log(std::max(p[y], 1e-300)) * scale;

    for (std::size_t c = 0; c < n_classes; ++c) {
      dlogits[c] = (p[c] - (c == y ? 1.0 : 0.0)) * scale;
    }

    // Head.
    std::fill(dmixed.begin(), dmixed.end(), 0.0);
    const auto& u = model.head_weight().data;
    auto& gu = grads[model.head_weight_index()];
    auto& gc = grads[model.head_bias_index()];
    for (std::size_t c = 0; c < n_classes; ++c) {
      accumulate(gc, c, dlogits[c]);
      for (std::size_t k = 0; k < d; ++k) {
        accumulate(gu, c * d + k, dlogits[c] * a.mixed[k]);
        dmixed[k] += u[c * d + k] * dlogits[c];
      }
    }

    // Layer attention: d a_j = dmixed . h_j, then through the softmax.
    double weighted = 0.0;
    for (std::size_t j = 0; j < depth; ++j) {
      const auto& h = a.hidden[j + 1];
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += dmixed[k] * h[k];
      dattn[j] = s;
      weighted += a.attention[j] * s;
    }
    auto& gs = grads[model.attention_index()];
    for (std::size_t j = 0; j < depth; ++j) accumulate(gs, j, a.attention[j] * (dattn[j] - weighted));

    // Stack, top to bottom. dh carries the gradient w.r.t. hidden[j + 1].
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t jj = depth; jj-- > 0;) {
      for (std::size_t k = 0; k < d; ++k) dh[k] += a.attention[jj] * dmixed[k];
      const auto& g = a.act[jj];
      const auto& in = a.hidden[jj];
      for (std::size_t r = 0; r < d; ++r) dz[r] = dh[r] * (1.0 - g[r] * g[r]);
      auto& gw = grads[model.weight_index(jj)];
      auto& gb = grads[model.bias_index(jj)];
      const auto& w = model.weight(jj).data;
      for (std::size_t r = 0; r < d; ++r) {
        accumulate(gb, r, dz[r]);
        if (gw) {
          double* row = &(*gw)[r * d];
          for (std::size_t c = 0; c < d; ++c) row[c] += dz[r] * in[c];
        }
      }
      // Residual path keeps dh; add W^T dz.
      for (std::size_t c = 0; c < d; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < d; ++r) s += w[r * d + c] * dz[r];
        dh[c] += s;
      }
    }

    auto& ge = grads[LayerStackModel::embedding_index()];
    if (ge) {
      const double inv = 1.0 / static_cast<double>(x.tokens.size());
      for (TokenId t : x.tokens) {
        double* row = &(*ge)[static_cast<std::size_t>(t) * d];
        for (std::size_t k = 0; k < d; ++k) row[k] += dh[k] * inv;
      }
    }
  }
  return result;
}

double mean_loss(const LayerStackModel& model, std::span<const Example> batch) {
  if (batch.empty()) throw InputError("mean_loss: empty batch");
  double loss = 0.0;
  for (const Example& x : batch) {
    if (!x.label) throw InputError("mean_loss: unlabeled example");
    const ProbDist p = forward(model, x);
    loss -= std::log(std::max(p[*x.label], 1e-300));
  }
  return loss / static_cast<double>(batch.size());
}

}  // namespace amoc
