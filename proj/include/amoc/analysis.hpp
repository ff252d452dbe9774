#pragma once

// Post-hoc layer analyses: how often oracle-best candidates keep each layer,
// per-layer removal effects from an indicator regression, and the rank
// correlation between the two.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amoc/compress.hpp"
#include "amoc/features.hpp"

namespace amoc {

// frequency[l - 1] = fraction of specs that keep layer l. Empty input is an
// InputError.
std::vector<double> layer_frequency(std::span<const CandidateSpec> best_specs, std::uint32_t depth);

struct LayerImportance {
  // beta[l - 1]: mean over pairs of the OLS coefficient on "layer l removed"
  // (1 = removed, so a positive value means removal tends to help). NaN for a
  // layer that was never estimable.
  std::vector<double> beta;
  std::vector<std::size_t> n_pairs;  // pairs contributing to beta[l - 1]
  std::vector<std::string> warnings;
};

// Per pair: target_f1 on the depth exclusion indicators plus an intercept.
// Constant or collinear indicators are dropped from that pair's design with a
// warning; pairs with too few records are skipped with a warning.
LayerImportance layer_importance_regression(std::span<const CandidateRecord> records, std::uint32_t depth);

// 1-based ranks, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rho with average ranks. InputError on length mismatch or fewer
// than two values; NaN when either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

struct ScoredSpec {
  std::string pair_id;
  CandidateSpec spec;
  double target_f1 = 0.0;
};

// Best spec per pair (highest score, ties to the earlier spec), optionally
// restricted to one removal size. Pairs are visited in sorted order.
std::vector<CandidateSpec> oracle_best_specs(std::span<const ScoredSpec> scored,
                                             std::optional<std::uint32_t> size = std::nullopt);

struct AnalysisReport {
  std::uint32_t depth = 0;
  std::vector<double> frequency;  // over the overall best spec of each pair
  std::vector<std::pair<std::uint32_t, std::vector<double>>> frequency_by_size;
  LayerImportance importance;
  // Spearman between beta and removal frequency (1 - frequency) over layers
  // with a finite beta. NaN when undefined.
  double rho = 0.0;
};

AnalysisReport analyze(std::span<const ScoredSpec> oracle_scores, std::span<const CandidateRecord> records,
                       std::uint32_t depth);

// layer_frequency.csv (layer, frequency), layer_frequency_long.csv (layer,
// size, frequency; size "all" for the overall best), layer_importance.csv
// (layer, beta, pairs) and spearman.txt.
void write_analysis(const std::filesystem::path& dir, const AnalysisReport& report);

}  // namespace amoc
