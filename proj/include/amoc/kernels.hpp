#pragma once

// Data-parallel inner loops over a corpus. Each kernel has a serial reference
// and an OpenMP version; both produce per-example results in input order, and
// any reduction happens afterwards in that fixed order, so the two agree
// bit-for-bit regardless of thread count.

#include <span>
#include <vector>

#include "amoc/effects.hpp"
#include "amoc/netcore.hpp"

namespace amoc {

namespace kernels {

// Per-example, per-position output distributions.
using Predictions = std::vector<std::vector<ProbDist>>;

namespace serial {

Predictions predict_all(const LayerStackModel& model, std::span<const Example> corpus);
std::vector<ClassId> predict_labels(const LayerStackModel& model, std::span<const Example> corpus);
// Per-example distance between base and candidate outputs, averaged over
// positions within multi-position examples.
std::vector<double> example_distances(const LayerStackModel& base, const LayerStackModel& candidate,
                                      std::span<const Example> corpus, DistanceMetric metric);

}  // namespace serial

namespace omp {

Predictions predict_all(const LayerStackModel& model, std::span<const Example> corpus);
std::vector<ClassId> predict_labels(const LayerStackModel& model, std::span<const Example> corpus);
std::vector<double> example_distances(const LayerStackModel& base, const LayerStackModel& candidate,
                                      std::span<const Example> corpus, DistanceMetric metric);

}  // namespace omp

// Ordered sum; the single reduction used after either kernel flavour.
double ordered_sum(std::span<const double> values);

}  // namespace kernels
}  // namespace amoc
