#include "amoc/features.hpp"

#include <algorithm>
#include <cmath>

#include "amoc/error.hpp"
#include "amoc/kernels.hpp"
#include "amoc/metrics.hpp"
#include "amoc/random.hpp"

namespace amoc {

double indomain_f1(const LayerStackModel& candidate, std::span<const Example> held_out_source) {
  if (held_out_source.empty()) throw InputError("indomain_f1: empty held-out set");
  return evaluate_macro_f1(candidate, held_out_source);
}

DomainClassifier train_domain_classifier(std::span<const Example> unlabeled_source,
                                         std::span<const Example> unlabeled_target, const LayerStackModel& encoder,
                                         const DomainClassifierConfig& config) {
  if (unlabeled_source.empty() || unlabeled_target.empty()) {
    throw InputError("train_domain_classifier: both source and target corpora are required");
  }
  if (!(config.holdout_fraction > 0.0 && config.holdout_fraction < 1.0)) {
    throw InputError("train_domain_classifier: holdout_fraction must be in (0,1)");
  }

  std::vector<Example> data;
  data.reserve(unlabeled_source.size() + unlabeled_target.size());
  for (const auto& x : unlabeled_source) {
    Example e{x.tokens, kSourceDomainClass, 1};
    data.push_back(std::move(e));
  }
  for (const auto& x : unlabeled_target) {
    Example e{x.tokens, ClassId{0}, 1};
    data.push_back(std::move(e));
  }
  Rng rng(derive_seed(config.train.seed, "domain-holdout"));
  rng.shuffle(std::span(data));
  const auto n_holdout =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::round(config.holdout_fraction * data.size())));
  if (n_holdout >= data.size()) throw InputError("train_domain_classifier: corpora too small for a held-out slice");
  const std::span<const Example> holdout(data.data(), n_holdout);
  const std::span<const Example> fit(data.data() + n_holdout, data.size() - n_holdout);

  ModelDims dims = encoder.dims();
  dims.n_classes = 2;
  std::vector<std::uint32_t> layers(encoder.active_layers().begin(), encoder.active_layers().end());
  LayerStackModel model(dims, layers);
  model.embedding() = encoder.embedding();
  for (std::size_t j = 0; j < encoder.depth(); ++j) {
    model.weight(j) = encoder.weight(j);
    model.bias(j) = encoder.bias(j);
  }
  Rng init(derive_seed(config.train.seed, "domain-head"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dims.width));
  for (double& v : model.head_weight().data) v = scale * init.normal();

  // Held-out accuracy decides; equal accuracy goes to the lower held-out
  // loss, so a saturated slice keeps sharpening the probabilities.
  Trainer trainer(std::move(model), config.train);
  DomainClassifier best{trainer.model(), evaluate_accuracy(trainer.model(), holdout), 0};
  double best_loss = mean_loss(trainer.model(), holdout);
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.train.epochs; ++epoch) {
    trainer.run_epoch(fit);
    const double acc = evaluate_accuracy(trainer.model(), holdout);
    const double loss = mean_loss(trainer.model(), holdout);
    if (acc > best.holdout_accuracy || (acc == best.holdout_accuracy && loss < best_loss)) {
      best = DomainClassifier{trainer.model(), acc, epoch};
      best_loss = loss;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return best;
}

double p_s_given_t(const LayerStackModel& classifier, std::span<const Example> target_dev) {
  if (target_dev.empty()) throw InputError("p_s_given_t: empty target set");
  if (classifier.dims().n_classes != 2) throw InputError("p_s_given_t: classifier must be binary");
  const auto preds = kernels::omp::predict_all(classifier, target_dev);
  std::vector<double> p(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) p[i] = preds[i].front()[kSourceDomainClass];
  const double mean = kernels::ordered_sum(p) / static_cast<double>(p.size());
  return std::clamp(mean, 0.0, 1.0);
}

namespace terms {
std::string size_indicator(std::uint32_t size) { return "ind_size_" + std::to_string(size); }
}  // namespace terms

std::vector<std::string> selector_terms(std::span<const std::uint32_t> run_sizes) {
  std::vector<std::string> out = {terms::f1_s,  terms::ate_t,         terms::ate_s,
                                  terms::p_s_t, terms::ate_t_x_p_s_t, terms::f1_s_x_p_s_t};
  std::vector<std::uint32_t> sizes(run_sizes.begin(), run_sizes.end());
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  // Larger removals first, matching the usual report layout.
  for (auto it = sizes.rbegin(); it != sizes.rend() && std::next(it) != sizes.rend(); ++it) {
    out.push_back(terms::size_indicator(*it));
  }
  return out;
}

double CandidateRecord::term(const std::string& name) const {
  if (name == terms::f1_s) return f1_source;
  if (name == terms::ate_t) return ate_target.value;
  if (name == terms::ate_s) return ate_source.value;
  if (name == terms::p_s_t) return p_s_given_t;
  if (name == terms::ate_t_x_p_s_t) return ate_target_x_p_s_t;
  if (name == terms::f1_s_x_p_s_t) return f1_source_x_p_s_t;
  for (const auto& [size, flag] : size_indicators) {
    if (name == terms::size_indicator(size)) return flag;
  }
  throw InputError("record " + pair_id + " " + spec.to_json() + " has no term '" + name + "'");
}

std::vector<std::string> CandidateRecord::term_names() const { return selector_terms(run_sizes); }

CandidateRecord assemble_record(const std::string& pair_id, const CandidateSpec& spec, const AteEstimate& ate_source,
                                const AteEstimate& ate_target, double f1_source, double p_s_given_t,
                                std::span<const std::uint32_t> run_sizes) {
  CandidateRecord r;
  r.pair_id = pair_id;
  r.spec = spec;
  r.ate_source = ate_source;
  r.ate_target = ate_target;
  r.f1_source = f1_source;
  r.p_s_given_t = p_s_given_t;
  r.run_sizes.assign(run_sizes.begin(), run_sizes.end());
  std::sort(r.run_sizes.begin(), r.run_sizes.end());
  r.run_sizes.erase(std::unique(r.run_sizes.begin(), r.run_sizes.end()), r.run_sizes.end());
  for (std::size_t i = 1; i < r.run_sizes.size(); ++i) {
    r.size_indicators[r.run_sizes[i]] = spec.size() == r.run_sizes[i] ? 1 : 0;
  }
  r.ate_target_x_p_s_t = ate_target.value * p_s_given_t;
  r.f1_source_x_p_s_t = f1_source * p_s_given_t;
  return r;
}

}  // namespace amoc
