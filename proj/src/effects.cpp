#include "amoc/effects.hpp"

#include <cmath>

#include "amoc/error.hpp"
#include "amoc/kernels.hpp"

namespace amoc {

const char* to_string(DistanceMetric metric) {
  return metric == DistanceMetric::kl ? "kl" : "total_variation";
}

DistanceMetric parse_distance_metric(const std::string& name) {
  if (name == "total_variation" || name == "tv") return DistanceMetric::total_variation;
  if (name == "kl") return DistanceMetric::kl;
  throw InputError("unknown ATE metric '" + name + "'");
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("tv_distance: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return total;
}

double tv_distance(const ProbDist& p, const ProbDist& q) { return tv_distance(p.values(), q.values()); }

double kl_divergence(std::span<const double> p, std::span<const double> q, double smoothing) {
  if (p.size() != q.size()) throw InputError("kl_divergence: dimension mismatch");
  const double n = static_cast<double>(p.size());
  double zp = 0.0;
  double zq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    zp += p[i];
    zq += q[i];
  }
  zp += n * smoothing;
  zq += n * smoothing;
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double ps = (p[i] + smoothing) / zp;
    const double qs = (q[i] + smoothing) / zq;
    total += ps * std::log(ps / qs);
  }
  // Rounding can leave tiny negative totals when p == q.
  return total < 0.0 ? 0.0 : total;
}

double kl_divergence(const ProbDist& p, const ProbDist& q, double smoothing) {
  return kl_divergence(p.values(), q.values(), smoothing);
}

double metric_distance(const ProbDist& p, const ProbDist& q, DistanceMetric metric) {
  return metric == DistanceMetric::kl ? kl_divergence(p, q) : tv_distance(p, q);
}

AteEstimate estimate_ate(const LayerStackModel& base, const LayerStackModel& candidate,
                         std::span<const Example> corpus, DistanceMetric metric, const std::string& domain_name) {
  if (corpus.empty()) throw InputError("estimate_ate: empty corpus");
  if (base.dims().n_classes != candidate.dims().n_classes) {
    throw InputError("estimate_ate: base and candidate label spaces differ");
  }
  const auto distances = kernels::omp::example_distances(base, candidate, corpus, metric);
  AteEstimate out;
  out.value = kernels::ordered_sum(distances) / static_cast<double>(corpus.size());
  out.metric = metric;
  out.n_examples = corpus.size();
  out.domain_name = domain_name;
  return out;
}

}  // namespace amoc
