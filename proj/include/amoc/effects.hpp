#pragma once

// Average treatment effect of removing a layer subset, measured as the mean
// distance between base-model and candidate-model output distributions over
// an unlabeled corpus.

#include <cstddef>
#include <span>
#include <string>

#include "amoc/netcore.hpp"

namespace amoc {

enum class DistanceMetric { total_variation, kl };

const char* to_string(DistanceMetric metric);
DistanceMetric parse_distance_metric(const std::string& name);

inline constexpr double kKlSmoothing = 1e-12;

// Sum of absolute coordinate differences, in [0, 2].
double tv_distance(std::span<const double> p, std::span<const double> q);
double tv_distance(const ProbDist& p, const ProbDist& q);

// KL(p || q) after adding `smoothing` to every coordinate of both vectors and
// renormalizing.
double kl_divergence(std::span<const double> p, std::span<const double> q, double smoothing = kKlSmoothing);
double kl_divergence(const ProbDist& p, const ProbDist& q, double smoothing = kKlSmoothing);

double metric_distance(const ProbDist& p, const ProbDist& q, DistanceMetric metric);

struct AteEstimate {
  double value = 0.0;
  DistanceMetric metric = DistanceMetric::total_variation;
  std::size_t n_examples = 0;
  std::string domain_name;
};

// Mean per-example distance between base and candidate predictions. Multi-
// position examples contribute the mean of their position-level distances.
// Uses the OpenMP kernel; the reduction order is fixed.
AteEstimate estimate_ate(const LayerStackModel& base, const LayerStackModel& candidate,
                         std::span<const Example> corpus, DistanceMetric metric,
                         const std::string& domain_name = {});

}  // namespace amoc
