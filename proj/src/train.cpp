#include "amoc/train.hpp"

#include <cmath>
#include <numeric>

#include "amoc/error.hpp"
#include "amoc/random.hpp"

namespace amoc {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("TrainConfig: learning_rate must be positive");
  if (batch_size == 0) throw InputError("TrainConfig: batch_size must be positive");
  if (!(weight_decay >= 0.0)) throw InputError("TrainConfig: weight_decay must be nonnegative");
  if (optimizer == OptimizerKind::adam) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
      throw InputError("TrainConfig: invalid adam parameters");
    }
  }
}

Trainer::Trainer(LayerStackModel model, TrainConfig config)
    : model_(std::move(model)), config_(config), rng_(config.seed) {
  config_.validate();
  if (config_.optimizer == OptimizerKind::adam) {
    m_.resize(model_.tensor_count());
    v_.resize(model_.tensor_count());
    for (std::size_t i = 0; i < model_.tensor_count(); ++i) {
      if (model_.is_frozen(i)) continue;
      m_[i].assign(model_.tensor(i).size(), 0.0);
      v_[i].assign(model_.tensor(i).size(), 0.0);
    }
  }
}

double Trainer::run_epoch(std::span<const Example> data) {
  if (data.empty()) throw InputError("train: empty labeled data");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng_.shuffle(std::span(order));

  std::vector<Example> batch;
  batch.reserve(config_.batch_size);
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    const std::size_t end = std::min(order.size(), start + config_.batch_size);
    batch.clear();
    for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
    const LossAndGrads lg = loss_and_grads(model_, batch);
    ++step_;
    if (!std::isfinite(lg.loss)) {
      throw TrainingError(step_, "training diverged at step " + std::to_string(step_));
    }
    trace_.push_back(lg.loss);
    apply(lg.grads);
    total += lg.loss;
    ++batches;
  }
  return total / static_cast<double>(batches);
}

void Trainer::apply(const Gradients& grads) {
  const double lr = config_.learning_rate;
  const double wd = config_.weight_decay;
  for (std::size_t i = 0; i < model_.tensor_count(); ++i) {
    if (model_.is_frozen(i) || !grads.tensors[i]) continue;
    auto& w = model_.tensor(i).data;
    const auto& g = *grads.tensors[i];
    if (config_.optimizer == OptimizerKind::sgd) {
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * (g[k] + wd * w[k]);
      continue;
    }
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      w[k] -= lr * (mhat / (std::sqrt(vhat) + config_.epsilon) + wd * w[k]);
    }
  }
}

TrainResult train(LayerStackModel model, std::span<const Example> labeled_data, const TrainConfig& config) {
  if (labeled_data.empty()) throw InputError("train: empty labeled data");
  Trainer trainer(std::move(model), config);
  for (std::size_t e = 0; e < config.epochs; ++e) trainer.run_epoch(labeled_data);
  std::vector<double> trace = trainer.loss_trace();
  return TrainResult{std::move(trainer).release(), std::move(trace)};
}

}  // namespace amoc
