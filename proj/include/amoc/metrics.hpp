#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "amoc/netcore.hpp"

namespace amoc {

// Unweighted mean of per-class F1 over all n_classes classes of the label
// space. A class whose F1 denominator is zero contributes 0.
double macro_f1(std::span<const ClassId> predicted, std::span<const ClassId> gold, std::size_t n_classes);

double accuracy(std::span<const ClassId> predicted, std::span<const ClassId> gold);

// Labels of the examples; throws InputError if any is missing.
std::vector<ClassId> gold_labels(std::span<const Example> labeled);

double evaluate_macro_f1(const LayerStackModel& model, std::span<const Example> labeled_data);
double evaluate_accuracy(const LayerStackModel& model, std::span<const Example> labeled_data);

}  // namespace amoc
