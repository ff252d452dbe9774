#include "amoc/metrics.hpp"

#include "amoc/error.hpp"
#include "amoc/kernels.hpp"

namespace amoc {

double macro_f1(std::span<const ClassId> predicted, std::span<const ClassId> gold, std::size_t n_classes) {
  if (predicted.size() != gold.size()) throw InputError("macro_f1: prediction/gold length mismatch");
  if (gold.empty()) throw InputError("macro_f1: empty input");
  if (n_classes == 0) throw InputError("macro_f1: empty label space");
  std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] >= n_classes || gold[i] >= n_classes) throw InputError("macro_f1: class outside label space");
    if (predicted[i] == gold[i]) {
      ++tp[gold[i]];
    } else {
      ++fp[predicted[i]];
      ++fn[gold[i]];
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom > 0) total += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  return total / static_cast<double>(n_classes);
}

double accuracy(std::span<const ClassId> predicted, std::span<const ClassId> gold) {
  if (predicted.size() != gold.size()) throw InputError("accuracy: prediction/gold length mismatch");
  if (gold.empty()) throw InputError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += predicted[i] == gold[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

std::vector<ClassId> gold_labels(std::span<const Example> labeled) {
  std::vector<ClassId> out;
  out.reserve(labeled.size());
  for (const auto& x : labeled) {
    if (!x.label) throw InputError("expected labeled examples");
    out.push_back(*x.label);
  }
  return out;
}

double evaluate_macro_f1(const LayerStackModel& model, std::span<const Example> labeled_data) {
  if (labeled_data.empty()) throw InputError("evaluate_macro_f1: empty data");
  const auto gold = gold_labels(labeled_data);
  const auto predicted = kernels::omp::predict_labels(model, labeled_data);
  return macro_f1(predicted, gold, model.dims().n_classes);
}

double evaluate_accuracy(const LayerStackModel& model, std::span<const Example> labeled_data) {
  if (labeled_data.empty()) throw InputError("evaluate_accuracy: empty data");
  const auto gold = gold_labels(labeled_data);
  return accuracy(kernels::omp::predict_labels(model, labeled_data), gold);
}

}  // namespace amoc
