#pragma once

// Regression covariates for a compressed candidate: ATEs on source and target,
// in-domain F1, domain-classifier proximity P(S|T), removal-size indicators
// and the two interaction terms.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amoc/compress.hpp"
#include "amoc/effects.hpp"
#include "amoc/netcore.hpp"
#include "amoc/train.hpp"

namespace amoc {

// Macro-F1 of a candidate on the source held-out split.
double indomain_f1(const LayerStackModel& candidate, std::span<const Example> held_out_source);

struct DomainClassifierConfig {
  TrainConfig train;  // train.epochs is the epoch cap
  std::size_t patience = 3;
  double holdout_fraction = 0.2;
};

struct DomainClassifier {
  LayerStackModel model;  // class 1 = source, class 0 = target
  double holdout_accuracy = 0.0;
  std::size_t epochs_run = 0;
};

inline constexpr ClassId kSourceDomainClass = 1;

// Binary source-vs-target classifier initialized from the task-trained
// encoder (embedding and layers) with a fresh two-class decoder. Trained with
// early stopping on a seeded held-out slice; the best epoch is kept.
DomainClassifier train_domain_classifier(std::span<const Example> unlabeled_source,
                                         std::span<const Example> unlabeled_target, const LayerStackModel& encoder,
                                         const DomainClassifierConfig& config);

// Mean probability of the source class over target examples, in [0, 1].
double p_s_given_t(const LayerStackModel& classifier, std::span<const Example> target_dev);

struct CandidateRecord {
  std::string pair_id;
  CandidateSpec spec;
  AteEstimate ate_source;
  AteEstimate ate_target;
  double f1_source = 0.0;
  double p_s_given_t = 0.0;
  // Removal sizes present in the run (sorted); the smallest is the baseline.
  std::vector<std::uint32_t> run_sizes;
  // size -> 0/1 for every non-baseline size.
  std::map<std::uint32_t, int> size_indicators;
  double ate_target_x_p_s_t = 0.0;
  double f1_source_x_p_s_t = 0.0;
  std::optional<double> target_f1;
  std::string model_path;

  // Value of a regression term by name. Throws InputError for unknown terms.
  double term(const std::string& name) const;
  std::vector<std::string> term_names() const;
};

// Canonical term names.
namespace terms {
inline constexpr const char* f1_s = "f1_s";
inline constexpr const char* ate_t = "ate_t";
inline constexpr const char* ate_s = "ate_s";
inline constexpr const char* p_s_t = "p_s_t";
inline constexpr const char* ate_t_x_p_s_t = "ate_t_x_p_s_t";
inline constexpr const char* f1_s_x_p_s_t = "f1_s_x_p_s_t";
std::string size_indicator(std::uint32_t size);
}  // namespace terms

// Full stepwise term set for a run with the given removal sizes.
std::vector<std::string> selector_terms(std::span<const std::uint32_t> run_sizes);

CandidateRecord assemble_record(const std::string& pair_id, const CandidateSpec& spec, const AteEstimate& ate_source,
                                const AteEstimate& ate_target, double f1_source, double p_s_given_t,
                                std::span<const std::uint32_t> run_sizes);

// CSV with the fixed column order
//   pair_id,spec,ate_s,ate_t,f1_s,p_s_t,ind_size_<s>...,ate_t_x_p_s_t,f1_s_x_p_s_t,target_f1
// Doubles are written with 17 significant digits; an absent target_f1 is an
// empty cell. All records in one file share the same run sizes.
std::string records_to_csv(std::span<const CandidateRecord> records);
std::vector<CandidateRecord> records_from_csv(const std::string& text, std::uint32_t depth);
void write_records(const std::filesystem::path& path, std::span<const CandidateRecord> records);
std::vector<CandidateRecord> read_records(const std::filesystem::path& path, std::uint32_t depth);

}  // namespace amoc
