#include "amoc/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "amoc/error.hpp"
#include "amoc/log.hpp"
#include "amoc/metrics.hpp"
#include "amoc/random.hpp"

namespace amoc {

PairId PairId::parse(const std::string& text) {
  PairId id;
  if (const auto arrow = text.find("->"); arrow != std::string::npos) {
    id.source = text.substr(0, arrow);
    id.target = text.substr(arrow + 2);
  } else if (const auto comma = text.find(','); comma != std::string::npos) {
    id.source = text.substr(0, comma);
    id.target = text.substr(comma + 1);
  } else {
    throw InputError("pair '" + text + "' must look like S,T or S->T");
  }
  if (id.source.empty() || id.target.empty() || id.source == id.target) {
    throw InputError("pair '" + text + "' needs two distinct domain names");
  }
  return id;
}

std::vector<PairId> ordered_pairs(std::span<const std::string> domains) {
  std::vector<std::string> names(domains.begin(), domains.end());
  std::sort(names.begin(), names.end());
  std::vector<PairId> out;
  for (const auto& s : names) {
    for (const auto& t : names) {
      if (s != t) out.push_back({s, t});
    }
  }
  return out;
}

const char* to_string(DataSplit split) {
  switch (split) {
    case DataSplit::labeled_train:
      return "train";
    case DataSplit::unlabeled:
      return "unlabeled";
    case DataSplit::dev:
      return "dev";
    case DataSplit::test:
      return "test";
  }
  return "?";
}

void AccessLog::record(AccessEvent event) {
  std::lock_guard lock(mutex_);
  events_.push_back(std::move(event));
}

std::vector<AccessEvent> AccessLog::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::size_t AccessLog::label_reads(DomainRole role, AccessPhase phase) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(events_.begin(), events_.end(), [&](const AccessEvent& e) {
    return e.labels && e.role == role && e.phase == phase;
  }));
}

std::size_t AccessLog::label_reads(DomainRole role) const {
  return label_reads(role, AccessPhase::features) + label_reads(role, AccessPhase::evaluation);
}

DomainView::DomainView(const DomainDataset& data, AccessLog& log, DomainRole role, AccessPhase phase)
    : data_(&data), log_(&log), role_(role), phase_(phase) {}

void DomainView::note(DataSplit split, bool labels) const { log_->record({data_->name, role_, split, labels, phase_}); }

std::span<const Example> DomainView::labeled_train() const {
  note(DataSplit::labeled_train, true);
  return data_->labeled_train;
}

std::vector<Example> DomainView::unlabeled_train() const {
  note(DataSplit::labeled_train, false);
  note(DataSplit::unlabeled, false);
  auto out = strip_labels(data_->labeled_train);
  const auto extra = strip_labels(data_->unlabeled);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

std::vector<Example> DomainView::unlabeled_dev() const {
  note(DataSplit::dev, false);
  return strip_labels(data_->held_out);
}

std::span<const Example> DomainView::labeled_dev() const {
  note(DataSplit::dev, true);
  return data_->held_out;
}

std::span<const Example> DomainView::labeled_test() const {
  note(DataSplit::test, true);
  if (data_->test.empty()) throw InputError("domain " + data_->name + " has no test split");
  return data_->test;
}

std::uint64_t pair_seed(const ExperimentConfig& config, const PairId& pair) {
  return derive_seed(config.seed, "pair:" + pair.str());
}

LayerStackModel train_base(const ExperimentConfig& config, const ModelDims& dims, const DomainView& source,
                           std::uint64_t seed) {
  TrainConfig tc = config.base_train;
  tc.seed = derive_seed(seed, "base-train");
  auto model = LayerStackModel::initialize(dims, derive_seed(seed, "base-init"));
  return train(std::move(model), source.labeled_train(), tc).model;
}

std::vector<CandidateRecord> PairResult::records() const {
  std::vector<CandidateRecord> out;
  for (const auto& c : candidates) {
    if (c.record) out.push_back(*c.record);
  }
  return out;
}

namespace {

int thread_count(const ExperimentConfig& config) { return config.jobs > 0 ? config.jobs : omp_get_max_threads(); }

std::uint64_t base_seed(const ExperimentConfig& config, const std::string& source) {
  return derive_seed(config.seed, "base:" + source);
}

}  // namespace

PairResult process_pair(const ExperimentConfig& config, const ModelDims& dims, const DomainView& source,
                        const DomainView& target, const DomainView* target_eval, const LayerStackModel* base) {
  PairResult result;
  result.pair = {source.name(), target.name()};
  result.seed = pair_seed(config, result.pair);
  const std::string pair_id = result.pair.str();

  LayerStackModel trained_base =
      base ? *base : train_base(config, dims, source, base_seed(config, source.name()));
  if (trained_base.dims() != dims) throw InputError("base model dimensions do not match the configuration");
  if (trained_base.active_layers().size() != dims.depth) throw InputError("base model is already compressed");

  // Everything the candidates need is fetched once, before the parallel loop.
  const auto labeled_source = source.labeled_train();
  const auto source_unlabeled = source.unlabeled_train();
  const auto source_dev_unlabeled = source.unlabeled_dev();
  const auto source_dev = source.labeled_dev();
  const auto target_unlabeled = target.unlabeled_train();
  const auto target_dev_unlabeled = target.unlabeled_dev();
  std::span<const Example> target_dev_labeled;
  std::span<const Example> target_test_labeled;
  if (target_eval) {
    if (target_eval->name() != target.name()) throw InputError("evaluation view does not match the target domain");
    target_dev_labeled = target_eval->labeled_dev();
    target_test_labeled = target_eval->labeled_test();
  }

  DomainClassifierConfig dc = config.domain_classifier;
  dc.train.seed = derive_seed(result.seed, "domain-classifier");
  const auto classifier = train_domain_classifier(source_unlabeled, target_unlabeled, trained_base, dc);
  result.domain_classifier_accuracy = classifier.holdout_accuracy;
  result.p_s_given_t = p_s_given_t(classifier.model, target_dev_unlabeled);

  const auto specs = sample_candidate_specs(dims.depth, config.removal_sizes, config.candidates_per_size,
                                            derive_seed(result.seed, "specs"));
  result.candidates.resize(specs.size());
  const auto n = static_cast<std::ptrdiff_t>(specs.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(config))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& out = result.candidates[static_cast<std::size_t>(i)];
    out.spec = specs[static_cast<std::size_t>(i)];
    try {
      TrainConfig tc = config.candidate_train;
      tc.seed = derive_seed(result.seed, "candidate:" + out.spec.to_json());
      const auto plan = plan_reconnection(out.spec, dims.depth);
      auto candidate = finetune_candidate(build_candidate(trained_base, out.spec, plan), labeled_source, tc);
      const auto ate_s =
          estimate_ate(trained_base, candidate, source_dev_unlabeled, config.ate_metric, source.name());
      const auto ate_t =
          estimate_ate(trained_base, candidate, target_dev_unlabeled, config.ate_metric, target.name());
      const double f1_s = indomain_f1(candidate, source_dev);
      auto record = assemble_record(pair_id, out.spec, ate_s, ate_t, f1_s, result.p_s_given_t, config.removal_sizes);
      if (target_eval) {
        out.target_dev_f1 = evaluate_macro_f1(candidate, target_dev_labeled);
        out.target_test_f1 = evaluate_macro_f1(candidate, target_test_labeled);
        record.target_f1 = out.target_dev_f1;
      }
      out.record = std::move(record);
    } catch (const std::exception& e) {
      out.error = e.what();
      out.failure = std::current_exception();
      out.record.reset();
    }
  }

  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const CandidateOutcome& a, const CandidateOutcome& b) { return a.spec < b.spec; });
  std::size_t ok = 0;
  const CandidateOutcome* first_failure = nullptr;
  for (const auto& c : result.candidates) {
    if (c.ok()) {
      ++ok;
    } else {
      log::warn("pair " + pair_id + ": candidate " + c.spec.to_json() + " failed: " + c.error);
      if (!first_failure) first_failure = &c;
    }
  }
  if (ok == 0) {
    log::warn("pair " + pair_id + " produced no records");
    if (first_failure && first_failure->failure) std::rethrow_exception(first_failure->failure);
    throw InputError("pair " + pair_id + " produced no candidates");
  }
  return result;
}

TrainingPairsResult run_training_pairs(const ExperimentConfig& config, const Corpus& corpus,
                                       std::span<const PairId> pairs, AccessLog& log) {
  const auto dims = model_dims(config, corpus);
  std::vector<PairId> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end());
  TrainingPairsResult out;
  std::map<std::string, LayerStackModel> bases;
  for (const auto& pair : sorted) {
    const DomainView source(corpus.domain(pair.source), log, DomainRole::source, AccessPhase::features);
    const DomainView target(corpus.domain(pair.target), log, DomainRole::target, AccessPhase::features);
    const auto eval = target.in_phase(AccessPhase::evaluation);
    auto it = bases.find(pair.source);
    if (it == bases.end()) {
      it = bases.emplace(pair.source, train_base(config, dims, source, base_seed(config, pair.source))).first;
    }
    out.pairs.push_back(process_pair(config, dims, source, target, &eval, &it->second));
    const auto recs = out.pairs.back().records();
    out.records.insert(out.records.end(), recs.begin(), recs.end());
  }
  return out;
}

RegressionModel fit_selector(std::span<const CandidateRecord> records, std::span<const std::uint32_t> run_sizes,
                             double alpha) {
  const auto names = selector_terms(run_sizes);
  return stepwise_fit(DesignMatrix::from_records(records, names), names, alpha);
}

std::vector<RankedCandidate> rank_candidates(std::span<const CandidateRecord> records,
                                             const RegressionModel& selector) {
  std::vector<RankedCandidate> ranked;
  ranked.reserve(records.size());
  for (const auto& r : records) ranked.push_back({r.spec, predict(selector, r), r.f1_source});
  std::sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.predicted != b.predicted) return a.predicted > b.predicted;
    if (a.f1_source != b.f1_source) return a.f1_source > b.f1_source;
    if (a.spec.size() != b.spec.size()) return a.spec.size() < b.spec.size();
    return a.spec < b.spec;
  });
  return ranked;
}

SelectionResult select_for_unseen_pair(const ExperimentConfig& config, const ModelDims& dims,
                                       const DomainDataset& source, const DomainDataset& target,
                                       const RegressionModel& selector, AccessLog& log) {
  // Fail before any training if the selector asks for a term this run cannot
  // produce.
  const auto available = selector_terms(config.removal_sizes);
  for (const auto& name : selector.term_names()) {
    if (std::find(available.begin(), available.end(), name) == available.end()) {
      throw InputError("selector term '" + name + "' is not produced for removal sizes of this run");
    }
  }
  const DomainView sv(source, log, DomainRole::source, AccessPhase::features);
  const DomainView tv(target, log, DomainRole::target, AccessPhase::features);
  SelectionResult out;
  out.pair_result = process_pair(config, dims, sv, tv);
  const auto records = out.pair_result.records();
  out.ranked = rank_candidates(records, selector);
  out.chosen = out.ranked.front().spec;
  return out;
}

SelectionReport evaluate_selection(const CandidateSpec& chosen, std::span<const ScoredCandidate> all_candidates) {
  const auto it = std::find_if(all_candidates.begin(), all_candidates.end(),
                               [&](const ScoredCandidate& c) { return c.spec == chosen; });
  if (it == all_candidates.end()) throw InputError("chosen candidate " + chosen.to_json() + " was not evaluated");
  SelectionReport report;
  report.n_candidates = all_candidates.size();
  report.chosen_f1 = it->target_f1;
  report.best_f1 = it->target_f1;
  std::size_t better = 0;
  for (const auto& c : all_candidates) {
    report.best_f1 = std::max(report.best_f1, c.target_f1);
    if (c.target_f1 > report.chosen_f1) ++better;
  }
  report.regret = report.best_f1 - report.chosen_f1;
  report.rank = better + 1;
  return report;
}

}  // namespace amoc
