#include "amoc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "amoc/error.hpp"
#include "amoc/log.hpp"
#include "amoc/regress.hpp"
#include "csv_util.hpp"

namespace amoc {

std::vector<double> layer_frequency(std::span<const CandidateSpec> best_specs, std::uint32_t depth) {
  if (best_specs.empty()) throw InputError("layer_frequency: no best specs");
  std::vector<std::size_t> kept(depth, 0);
  for (const auto& spec : best_specs) {
    for (std::uint32_t l = 1; l <= depth; ++l) {
      if (!spec.removes(l)) ++kept[l - 1];
    }
  }
  std::vector<double> out(depth);
  for (std::uint32_t l = 0; l < depth; ++l) {
    out[l] = static_cast<double>(kept[l]) / static_cast<double>(best_specs.size());
  }
  return out;
}

namespace {

std::string layer_column(std::uint32_t layer) { return "layer_" + std::to_string(layer); }

}  // namespace

LayerImportance layer_importance_regression(std::span<const CandidateRecord> records, std::uint32_t depth) {
  std::map<std::string, std::vector<CandidateRecord>> by_pair;
  for (const auto& r : records) {
    if (!r.target_f1) throw InputError("layer_importance_regression: record without target_f1");
    by_pair[r.pair_id].push_back(r);
  }
  LayerImportance out;
  out.beta.assign(depth, 0.0);
  out.n_pairs.assign(depth, 0);

  for (const auto& [pair, recs] : by_pair) {
    std::vector<std::string> columns;
    for (std::uint32_t l = 1; l <= depth; ++l) columns.push_back(layer_column(l));
    DesignMatrix design(columns, recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      design.response(i) = *recs[i].target_f1;
      for (std::uint32_t l = 1; l <= depth; ++l) design.at(i, l - 1) = recs[i].spec.removes(l) ? 1.0 : 0.0;
    }

    std::vector<std::string> used;
    for (std::uint32_t l = 1; l <= depth; ++l) {
      const double first = design.at(0, l - 1);
      bool constant = true;
      for (std::size_t i = 1; i < recs.size() && constant; ++i) constant = design.at(i, l - 1) == first;
      if (constant) {
        out.warnings.push_back("pair " + pair + ": layer " + std::to_string(l) + " is " +
                               (first == 1.0 ? "always" : "never") + " removed; dropped");
      } else {
        used.push_back(layer_column(l));
      }
    }

    std::optional<OlsFit> fit;
    while (!fit) {
      try {
        fit = ols_fit(design, used);
      } catch (const SingularityError& e) {
        const auto it = std::find(used.begin(), used.end(), e.column());
        if (it == used.end()) break;
        out.warnings.push_back("pair " + pair + ": " + e.column() + " is collinear with earlier indicators; dropped");
        used.erase(it);
      } catch (const InsufficientDataError&) {
        out.warnings.push_back("pair " + pair + ": too few records for the indicator regression; skipped");
        break;
      }
    }
    if (!fit) continue;
    for (std::size_t c = 0; c < used.size(); ++c) {
      const auto layer = static_cast<std::uint32_t>(std::stoul(used[c].substr(6)));
      out.beta[layer - 1] += fit->beta[c + 1];
      ++out.n_pairs[layer - 1];
    }
  }
  for (std::uint32_t l = 0; l < depth; ++l) {
    out.beta[l] = out.n_pairs[l] ? out.beta[l] / static_cast<double>(out.n_pairs[l])
                                 : std::numeric_limits<double>::quiet_NaN();
  }
  for (const auto& w : out.warnings) log::warn(w);
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("spearman: length mismatch");
  if (a.size() < 2) throw InputError("spearman: at least two values are required");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;  // ranks always average to this
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<CandidateSpec> oracle_best_specs(std::span<const ScoredSpec> scored, std::optional<std::uint32_t> size) {
  std::map<std::string, const ScoredSpec*> best;
  for (const auto& s : scored) {
    if (size && s.spec.size() != *size) continue;
    auto& slot = best[s.pair_id];
    if (!slot || s.target_f1 > slot->target_f1 || (s.target_f1 == slot->target_f1 && s.spec < slot->spec)) {
      slot = &s;
    }
  }
  std::vector<CandidateSpec> out;
  for (const auto& [_, s] : best) out.push_back(s->spec);
  return out;
}

AnalysisReport analyze(std::span<const ScoredSpec> oracle_scores, std::span<const CandidateRecord> records,
                       std::uint32_t depth) {
  AnalysisReport report;
  report.depth = depth;
  const auto best = oracle_best_specs(oracle_scores);
  report.frequency = layer_frequency(best, depth);
  std::vector<std::uint32_t> sizes;
  for (const auto& s : oracle_scores) sizes.push_back(static_cast<std::uint32_t>(s.spec.size()));
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  for (auto size : sizes) {
    report.frequency_by_size.emplace_back(size, layer_frequency(oracle_best_specs(oracle_scores, size), depth));
  }
  report.importance = layer_importance_regression(records, depth);

  std::vector<double> beta;
  std::vector<double> removal;
  for (std::uint32_t l = 0; l < depth; ++l) {
    if (std::isfinite(report.importance.beta[l])) {
      beta.push_back(report.importance.beta[l]);
      removal.push_back(1.0 - report.frequency[l]);
    }
  }
  report.rho = beta.size() >= 2 ? spearman(beta, removal) : std::numeric_limits<double>::quiet_NaN();
  return report;
}

void write_analysis(const std::filesystem::path& dir, const AnalysisReport& report) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + (dir / name).string());
    return out;
  };
  const auto num = [](double v) { return std::isfinite(v) ? csv::fmt_double(v) : std::string(); };

  auto freq = open("layer_frequency.csv");
  freq << "layer,frequency\n";
  for (std::uint32_t l = 0; l < report.depth; ++l) freq << l + 1 << ',' << num(report.frequency[l]) << '\n';

  auto longf = open("layer_frequency_long.csv");
  longf << "layer,size,frequency\n";
  for (std::uint32_t l = 0; l < report.depth; ++l) longf << l + 1 << ",all," << num(report.frequency[l]) << '\n';
  for (const auto& [size, f] : report.frequency_by_size) {
    for (std::uint32_t l = 0; l < report.depth; ++l) longf << l + 1 << ',' << size << ',' << num(f[l]) << '\n';
  }

  auto imp = open("layer_importance.csv");
  imp << "layer,beta,pairs\n";
  for (std::uint32_t l = 0; l < report.depth; ++l) {
    imp << l + 1 << ',' << num(report.importance.beta[l]) << ',' << report.importance.n_pairs[l] << '\n';
  }

  auto rho = open("spearman.txt");
  rho << "spearman_beta_vs_removal_frequency," << num(report.rho) << '\n';
}

}  // namespace amoc
