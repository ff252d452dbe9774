#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "amoc/netcore.hpp"
#include "amoc/random.hpp"

namespace amoc {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  std::size_t epochs = 1;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Decoupled (AdamW-style) for adam, L2 for sgd.
  double weight_decay = 0.01;

  // Throws InputError on nonpositive rates/sizes or negative decay.
  // epochs == 0 is allowed and means "no updates".
  void validate() const;
};

// Mini-batch trainer over the trainable tensors of a model. Frozen tensors are
// never written. Optimizer state is created fresh for every Trainer.
class Trainer {
 public:
  Trainer(LayerStackModel model, TrainConfig config);

  // One pass over the data in a seeded shuffled order. Returns the mean batch
  // loss. Throws TrainingError carrying the global step on NaN/Inf loss.
  double run_epoch(std::span<const Example> data);

  const LayerStackModel& model() const { return model_; }
  LayerStackModel release() && { return std::move(model_); }
  const std::vector<double>& loss_trace() const { return trace_; }
  std::size_t steps() const { return step_; }

 private:
  void apply(const Gradients& grads);

  LayerStackModel model_;
  TrainConfig config_;
  Rng rng_;
  std::size_t step_ = 0;
  std::vector<double> trace_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

struct TrainResult {
  LayerStackModel model;
  std::vector<double> loss_trace;  // per optimizer step
};

TrainResult train(LayerStackModel model, std::span<const Example> labeled_data, const TrainConfig& config);

}  // namespace amoc
