#pragma once

// End-to-end orchestration: base models per source domain, candidate
// generation and features per domain pair, stepwise selector per fold, and
// selection/evaluation on held-out pairs. Everything written to disk is
// sorted and seed-derived so reruns are byte-identical.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amoc/compress.hpp"
#include "amoc/datagen.hpp"
#include "amoc/effects.hpp"
#include "amoc/features.hpp"
#include "amoc/regress.hpp"
#include "amoc/train.hpp"

namespace amoc {

struct PairId {
  std::string source;
  std::string target;

  // "S->T"
  std::string str() const { return source + "->" + target; }
  // Filesystem-safe "S__T".
  std::string dirname() const { return source + "__" + target; }
  static PairId parse(const std::string& text);  // "S,T" or "S->T"

  auto operator<=>(const PairId&) const = default;
};

// All ordered (source, target) pairs with source != target.
std::vector<PairId> ordered_pairs(std::span<const std::string> domains);

// ---------------------------------------------------------------------------
// Audited data access

enum class DataSplit { labeled_train, unlabeled, dev, test };
enum class AccessPhase { features, evaluation };
enum class DomainRole { source, target };

const char* to_string(DataSplit split);

struct AccessEvent {
  std::string domain;
  DomainRole role = DomainRole::source;
  DataSplit split = DataSplit::labeled_train;
  bool labels = false;
  AccessPhase phase = AccessPhase::features;
};

class AccessLog {
 public:
  void record(AccessEvent event);
  std::vector<AccessEvent> events() const;
  // Label-bearing reads of domains acting in `role` during `phase`.
  std::size_t label_reads(DomainRole role, AccessPhase phase) const;
  std::size_t label_reads(DomainRole role) const;

 private:
  mutable std::mutex mutex_;
  std::vector<AccessEvent> events_;
};

// Read-only view of one domain that logs every split it hands out.
class DomainView {
 public:
  DomainView(const DomainDataset& data, AccessLog& log, DomainRole role, AccessPhase phase);

  const std::string& name() const { return data_->name; }
  DomainView in_phase(AccessPhase phase) const { return DomainView(*data_, *log_, role_, phase); }

  std::span<const Example> labeled_train() const;
  // labeled_train without labels, followed by the unlabeled split.
  std::vector<Example> unlabeled_train() const;
  std::vector<Example> unlabeled_dev() const;
  std::span<const Example> labeled_dev() const;
  std::span<const Example> labeled_test() const;

 private:
  const DomainDataset* data_;
  AccessLog* log_;
  DomainRole role_;
  AccessPhase phase_;

  void note(DataSplit split, bool labels) const;
};

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "amoc_run";
  int jobs = 0;  // 0: all available cores

  // Exactly one data source: a synthetic spec or a corpus directory.
  std::optional<ShiftSpec> synthetic;
  std::filesystem::path data_dir;
  std::vector<std::string> domains;  // empty: every domain found

  std::uint32_t width = 32;
  std::uint32_t depth = 6;

  std::size_t fold_count = 5;
  std::vector<std::uint32_t> removal_sizes = {2, 3, 4};
  std::size_t candidates_per_size = 20;

  // Seeds inside these configs are ignored; they are derived from `seed`.
  TrainConfig base_train{.epochs = 10};
  TrainConfig candidate_train{.epochs = kDefaultCandidateEpochs};
  DomainClassifierConfig domain_classifier{.train = TrainConfig{.epochs = 25}};

  DistanceMetric ate_metric = DistanceMetric::total_variation;
  double alpha = kDefaultStepwiseAlpha;

  void validate() const;
};

// Every field is optional; unknown keys are a FormatError. A synthetic block
// without its own seed gets one derived from the top-level seed.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);
// Applies AMOC_OUTPUT_DIR and AMOC_JOBS when set.
void apply_env_overrides(ExperimentConfig& config);

ShiftSpec shift_spec_from_json(const std::string& text);
std::string shift_spec_to_json(const ShiftSpec& spec);

struct Corpus {
  std::vector<DomainDataset> domains;
  std::uint32_t vocab_size = 0;
  std::uint32_t n_classes = 0;

  const DomainDataset& domain(const std::string& name) const;
};

Corpus load_corpus(const ExperimentConfig& config);
ModelDims model_dims(const ExperimentConfig& config, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Per-pair processing

std::uint64_t pair_seed(const ExperimentConfig& config, const PairId& pair);

// Base model trained on the source labeled split.
LayerStackModel train_base(const ExperimentConfig& config, const ModelDims& dims, const DomainView& source,
                           std::uint64_t seed);

struct CandidateOutcome {
  CandidateSpec spec;
  std::optional<CandidateRecord> record;
  std::optional<double> target_dev_f1;
  std::optional<double> target_test_f1;
  std::string error;  // nonempty when the candidate failed
  std::exception_ptr failure;

  bool ok() const { return error.empty(); }
};

struct PairResult {
  PairId pair;
  std::uint64_t seed = 0;
  double p_s_given_t = 0.0;
  double domain_classifier_accuracy = 0.0;
  std::vector<CandidateOutcome> candidates;  // sorted by spec

  std::vector<CandidateRecord> records() const;
};

// Steps 1(a)-(b) for one pair. Feature computation only reads the source
// splits and the target's unlabeled splits through the views. When
// target_eval is given, each candidate is also scored on the target dev
// (stored as target_f1) and test splits through that view. If `base` is
// given it is used instead of training a new base model. Failed candidates
// are kept with their error; a pair with zero successful candidates throws.
PairResult process_pair(const ExperimentConfig& config, const ModelDims& dims, const DomainView& source,
                        const DomainView& target, const DomainView* target_eval = nullptr,
                        const LayerStackModel* base = nullptr);

struct TrainingPairsResult {
  std::vector<PairResult> pairs;
  std::vector<CandidateRecord> records;  // successful records with target_f1, sorted
};

TrainingPairsResult run_training_pairs(const ExperimentConfig& config, const Corpus& corpus,
                                       std::span<const PairId> pairs, AccessLog& log);

// Stepwise regression on the full selector term set for the run's sizes.
RegressionModel fit_selector(std::span<const CandidateRecord> records, std::span<const std::uint32_t> run_sizes,
                             double alpha = kDefaultStepwiseAlpha);

struct RankedCandidate {
  CandidateSpec spec;
  double predicted = 0.0;
  double f1_source = 0.0;
};

// Sorted by predicted performance, ties by higher f1_source, then fewer
// removed layers, then spec order. Throws InputError if a selector term is
// missing from the records.
std::vector<RankedCandidate> rank_candidates(std::span<const CandidateRecord> records, const RegressionModel& selector);

struct SelectionResult {
  CandidateSpec chosen;
  std::vector<RankedCandidate> ranked;
  PairResult pair_result;
};

// Step 3: candidates are generated for the unseen pair as in step 1(b) and
// ranked by the selector. Never reads target labels; every access goes
// through `log`.
SelectionResult select_for_unseen_pair(const ExperimentConfig& config, const ModelDims& dims,
                                       const DomainDataset& source, const DomainDataset& target,
                                       const RegressionModel& selector, AccessLog& log);

struct SelectionReport {
  double regret = 0.0;     // best target F1 - chosen target F1
  std::size_t rank = 0;    // 1 + number of candidates strictly better than chosen
  std::size_t n_candidates = 0;
  double chosen_f1 = 0.0;
  double best_f1 = 0.0;
};

struct ScoredCandidate {
  CandidateSpec spec;
  double target_f1 = 0.0;
};

SelectionReport evaluate_selection(const CandidateSpec& chosen, std::span<const ScoredCandidate> all_candidates);

// ---------------------------------------------------------------------------
// Folds

struct PairFold {
  std::vector<PairId> test_pairs;
  std::vector<PairId> train_pairs;  // share no domain with any test pair
};

// Partitions all ordered pairs into fold_count test folds (both directions of
// a domain pair share a fold). Among seeded greedy candidates, keeps the
// partition whose smallest training set is largest.
std::vector<PairFold> make_pair_folds(std::span<const std::string> domains, std::size_t fold_count,
                                      std::uint64_t seed);

// Per-pair files: records.csv (successful candidates) and target_eval.csv
// (pair_id,spec,status,target_dev_f1,target_test_f1,error; one row per
// candidate including failures).
void write_pair_outputs(const std::filesystem::path& dir, const PairResult& result);
// Rebuilds candidates, records and P(S|T) from the files written above.
PairResult read_pair_outputs(const std::filesystem::path& dir, const PairId& pair, std::uint32_t depth);

// Candidate test scores of a pair result (successful candidates only).
std::vector<ScoredCandidate> test_scores(const PairResult& result);

// ---------------------------------------------------------------------------
// Full run

struct PairSelection {
  PairId pair;
  std::size_t fold = 0;
  CandidateSpec chosen;
  double predicted = 0.0;
  SelectionReport report;
  CandidateSpec naive_chosen;  // best f1_source
  SelectionReport naive_report;
};

struct FoldSummary {
  std::size_t index = 0;
  PairFold fold;
  std::optional<RegressionModel> selector;  // absent when the fold has no training records
  std::string error;
};

struct RunSummary {
  std::vector<PairResult> pairs;
  std::vector<FoldSummary> folds;
  std::vector<PairSelection> selections;
  std::size_t target_label_reads_during_selection = 0;
  double top_quartile_rate = 0.0;  // fraction of test pairs with rank <= 25% of candidates
  double mean_regret = 0.0;
  double naive_mean_regret = 0.0;
  std::size_t resumed_pairs = 0;
};

// Writes under config.output_dir:
//   manifest.json, timings.json, selection.csv
//   bases/<S>.amoc, pairs/<S>__<T>/{records.csv, target_eval.csv}
//   folds/fold<i>/selector.json
//   analysis/{layer_frequency.csv, layer_frequency_long.csv, layer_importance.csv}
// Pairs already marked complete in an existing manifest are loaded, not
// recomputed.
RunSummary run_all(const ExperimentConfig& config);

}  // namespace amoc
