#include "amoc/kernels.hpp"

#include <exception>
#include <limits>

#include "amoc/error.hpp"

namespace amoc::kernels {
namespace {

double example_distance(const LayerStackModel& base, const LayerStackModel& candidate, const Example& x,
                        DistanceMetric metric) {
  const auto p = forward_all(base, x);
  const auto q = forward_all(candidate, x);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += metric_distance(p[i], q[i], metric);
  return total / static_cast<double>(p.size());
}

// Runs body(i) for i in [0, n) under OpenMP. The exception of the smallest
// failing index is rethrown after the loop.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr first_error;
  std::size_t first_index = std::numeric_limits<std::size_t>::max();
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(amoc_kernel_error)
      {
        if (static_cast<std::size_t>(i) < first_index) {
          first_index = static_cast<std::size_t>(i);
          first_error = std::current_exception();
        }
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

double ordered_sum(std::span<const double> values) {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

namespace serial {

Predictions predict_all(const LayerStackModel& model, std::span<const Example> corpus) {
  Predictions out;
  out.reserve(corpus.size());
  for (const auto& x : corpus) out.push_back(forward_all(model, x));
  return out;
}

std::vector<ClassId> predict_labels(const LayerStackModel& model, std::span<const Example> corpus) {
  std::vector<ClassId> out;
  out.reserve(corpus.size());
  for (const auto& x : corpus) out.push_back(static_cast<ClassId>(forward(model, x).argmax()));
  return out;
}

std::vector<double> example_distances(const LayerStackModel& base, const LayerStackModel& candidate,
                                      std::span<const Example> corpus, DistanceMetric metric) {
  std::vector<double> out;
  out.reserve(corpus.size());
  for (const auto& x : corpus) out.push_back(example_distance(base, candidate, x, metric));
  return out;
}

}  // namespace serial

namespace omp {

Predictions predict_all(const LayerStackModel& model, std::span<const Example> corpus) {
  Predictions out(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) { out[i] = forward_all(model, corpus[i]); });
  return out;
}

std::vector<ClassId> predict_labels(const LayerStackModel& model, std::span<const Example> corpus) {
  std::vector<ClassId> out(corpus.size());
  parallel_for(corpus.size(),
               [&](std::size_t i) { out[i] = static_cast<ClassId>(forward(model, corpus[i]).argmax()); });
  return out;
}

std::vector<double> example_distances(const LayerStackModel& base, const LayerStackModel& candidate,
                                      std::span<const Example> corpus, DistanceMetric metric) {
  std::vector<double> out(corpus.size());
  parallel_for(corpus.size(),
               [&](std::size_t i) { out[i] = example_distance(base, candidate, corpus[i], metric); });
  return out;
}

}  // namespace omp
}  // namespace amoc::kernels
