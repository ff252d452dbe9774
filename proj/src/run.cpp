#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "amoc/analysis.hpp"
#include "amoc/error.hpp"
#include "amoc/log.hpp"
#include "amoc/pipeline.hpp"
#include "amoc/random.hpp"
#include "amoc/serialize.hpp"
#include "csv_util.hpp"

namespace amoc {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kManifestFormat = 1;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << text;
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string opt_num(const std::optional<double>& v) { return v ? csv::fmt_double(*v) : std::string(); }

// The config as recorded in the manifest: output location and thread count do
// not affect results, so they are left out.
json config_echo(const ExperimentConfig& config) {
  auto j = json::parse(config_to_json(config));
  j.erase("output_dir");
  j.erase("jobs");
  return j;
}

json pairs_json(const std::vector<PairId>& pairs) {
  json out = json::array();
  for (const auto& p : pairs) out.push_back(p.str());
  return out;
}

json report_json(const SelectionReport& r) {
  return {{"regret", r.regret},
          {"rank", r.rank},
          {"n_candidates", r.n_candidates},
          {"chosen_f1", r.chosen_f1},
          {"best_f1", r.best_f1}};
}

}  // namespace

void write_pair_outputs(const fs::path& dir, const PairResult& result) {
  const auto records = result.records();
  write_text(dir / "records.csv", records_to_csv(records));
  std::ostringstream out;
  out << "pair_id,spec,status,target_dev_f1,target_test_f1,error\n";
  for (const auto& c : result.candidates) {
    out << csv::quote(result.pair.str()) << ',' << csv::quote(c.spec.to_json()) << ',' << (c.ok() ? "ok" : "failed")
        << ',' << opt_num(c.target_dev_f1) << ',' << opt_num(c.target_test_f1) << ',' << csv::quote(c.error) << '\n';
  }
  write_text(dir / "target_eval.csv", out.str());
}

PairResult read_pair_outputs(const fs::path& dir, const PairId& pair, std::uint32_t depth) {
  PairResult result;
  result.pair = pair;
  const auto records = read_records(dir / "records.csv", depth);
  std::map<CandidateSpec, const CandidateRecord*> by_spec;
  for (const auto& r : records) {
    if (r.pair_id != pair.str()) throw FormatError((dir / "records.csv").string() + ": record for another pair");
    by_spec[r.spec] = &r;
  }
  if (!records.empty()) result.p_s_given_t = records.front().p_s_given_t;

  const auto path = (dir / "target_eval.csv").string();
  std::istringstream in(read_text(dir / "target_eval.csv"));
  std::string line;
  std::getline(in, line);
  if (line != "pair_id,spec,status,target_dev_f1,target_test_f1,error") throw FormatError(path + ": bad header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = path + ":" + std::to_string(line_no);
    const auto cells = csv::split_line(line, where);
    if (cells.size() != 6) throw FormatError(where + ": expected 6 cells");
    CandidateOutcome c;
    c.spec = CandidateSpec::parse(cells[1], depth);
    if (!cells[3].empty()) c.target_dev_f1 = csv::parse_double(cells[3], where);
    if (!cells[4].empty()) c.target_test_f1 = csv::parse_double(cells[4], where);
    if (cells[2] == "ok") {
      const auto it = by_spec.find(c.spec);
      if (it == by_spec.end()) throw FormatError(where + ": no record for " + c.spec.to_json());
      c.record = *it->second;
    } else if (cells[2] == "failed") {
      c.error = cells[5].empty() ? "failed" : cells[5];
    } else {
      throw FormatError(where + ": bad status '" + cells[2] + "'");
    }
    result.candidates.push_back(std::move(c));
  }
  return result;
}

std::vector<ScoredCandidate> test_scores(const PairResult& result) {
  std::vector<ScoredCandidate> out;
  for (const auto& c : result.candidates) {
    if (!c.ok()) continue;
    if (!c.target_test_f1) throw InputError("pair " + result.pair.str() + ": candidate " + c.spec.to_json() +
                                            " has no target test score");
    out.push_back({c.spec, *c.target_test_f1});
  }
  return out;
}

RunSummary run_all(const ExperimentConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const fs::path root = config.output_dir;
  fs::create_directories(root);

  const auto corpus = load_corpus(config);
  const auto dims = model_dims(config, corpus);
  std::vector<std::string> names;
  for (const auto& d : corpus.domains) names.push_back(d.name);
  const auto pairs = ordered_pairs(names);
  const auto folds = make_pair_folds(names, config.fold_count, derive_seed(config.seed, "folds"));
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (folds[f].train_pairs.empty()) {
      throw InputError("fold " + std::to_string(f) + " leaves no training pairs; use more domains or more folds");
    }
  }

  const json echo = config_echo(config);
  std::map<std::string, json> done;
  bool same_config = false;
  if (fs::exists(root / "manifest.json")) {
    try {
      const auto old = json::parse(read_text(root / "manifest.json"));
      if (old.at("config") == echo) {
        same_config = true;
        for (const auto& p : old.at("pairs")) {
          if (p.at("status") == "complete") done[p.at("pair").get<std::string>()] = p;
        }
      } else {
        log::warn("existing manifest was written for a different config; recomputing every pair");
      }
    } catch (const json::exception& e) {
      log::warn(std::string("ignoring unreadable manifest: ") + e.what());
    }
  }

  RunSummary summary;
  AccessLog log;
  json pair_entries = json::array();
  json timings = {{"pairs", json::object()}};
  std::map<std::string, LayerStackModel> bases;
  const auto write_manifest = [&](const json& extra) {
    json m = {{"format", kManifestFormat}, {"config", echo}, {"pairs", pair_entries}, {"timings", "timings.json"}};
    m.update(extra);
    write_text(root / "manifest.json", m.dump(2) + "\n");
  };

  for (const auto& pair : pairs) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path pair_dir = fs::path("pairs") / pair.dirname();
    const fs::path base_path = fs::path("bases") / (pair.source + ".amoc");
    if (const auto it = done.find(pair.str());
        it != done.end() && fs::exists(root / pair_dir / "records.csv") && fs::exists(root / pair_dir / "target_eval.csv")) {
      auto result = read_pair_outputs(root / pair_dir, pair, dims.depth);
      result.seed = it->second.at("seed").get<std::uint64_t>();
      result.domain_classifier_accuracy = it->second.at("domain_classifier_accuracy").get<double>();
      result.p_s_given_t = it->second.at("p_s_given_t").get<double>();
      summary.pairs.push_back(std::move(result));
      pair_entries.push_back(it->second);
      ++summary.resumed_pairs;
      log::info("pair " + pair.str() + " loaded from a previous run");
      continue;
    }

    const DomainView source(corpus.domain(pair.source), log, DomainRole::source, AccessPhase::features);
    const DomainView target(corpus.domain(pair.target), log, DomainRole::target, AccessPhase::features);
    const auto eval = target.in_phase(AccessPhase::evaluation);
    auto base_it = bases.find(pair.source);
    if (base_it == bases.end()) {
      const bool reuse = same_config && fs::exists(root / base_path);
      LayerStackModel base = reuse ? load_model(root / base_path)
                                   : train_base(config, dims, source, derive_seed(config.seed, "base:" + pair.source));
      if (!reuse) save_model(root / base_path, base);
      base_it = bases.emplace(pair.source, std::move(base)).first;
    }
    log::info("pair " + pair.str() + ": generating candidates");
    auto result = process_pair(config, dims, source, target, &eval, &base_it->second);
    write_pair_outputs(root / pair_dir, result);

    std::size_t failed = 0;
    for (const auto& c : result.candidates) failed += c.ok() ? 0 : 1;
    pair_entries.push_back({{"pair", pair.str()},
                            {"status", "complete"},
                            {"seed", result.seed},
                            {"base_model", base_path.generic_string()},
                            {"records", (pair_dir / "records.csv").generic_string()},
                            {"evaluation", (pair_dir / "target_eval.csv").generic_string()},
                            {"n_records", result.candidates.size() - failed},
                            {"n_failed", failed},
                            {"p_s_given_t", result.p_s_given_t},
                            {"domain_classifier_accuracy", result.domain_classifier_accuracy}});
    summary.pairs.push_back(std::move(result));
    timings["pairs"][pair.str()] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(json::object());
  }

  std::map<PairId, const PairResult*> by_pair;
  for (const auto& p : summary.pairs) by_pair[p.pair] = &p;

  json fold_entries = json::array();
  json selection_entries = json::array();
  std::ostringstream selection_csv;
  selection_csv << "pair_id,fold,chosen,predicted,rank,regret,chosen_test_f1,best_test_f1,n_candidates,"
                   "naive_chosen,naive_rank,naive_regret\n";
  std::size_t top_quartile = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    FoldSummary fs_entry;
    fs_entry.index = f;
    fs_entry.fold = folds[f];
    std::vector<CandidateRecord> train_records;
    for (const auto& p : folds[f].train_pairs) {
      const auto recs = by_pair.at(p)->records();
      train_records.insert(train_records.end(), recs.begin(), recs.end());
    }
    const auto selector = fit_selector(train_records, config.removal_sizes, config.alpha);
    const fs::path selector_path = fs::path("folds") / ("fold" + std::to_string(f)) / "selector.json";
    save_regression(root / selector_path, selector);
    fold_entries.push_back({{"index", f},
                            {"test_pairs", pairs_json(folds[f].test_pairs)},
                            {"train_pairs", pairs_json(folds[f].train_pairs)},
                            {"n_train_records", train_records.size()},
                            {"selector", selector_path.generic_string()},
                            {"terms", selector.term_names()},
                            {"adjusted_r2", selector.adjusted_r2}});
    fs_entry.selector = selector;
    summary.folds.push_back(std::move(fs_entry));

    for (const auto& p : folds[f].test_pairs) {
      const auto& result = *by_pair.at(p);
      const auto records = result.records();
      const auto scores = test_scores(result);
      const auto ranked = rank_candidates(records, selector);

      // Naive rule: best held-out source F1, then fewer removed layers.
      const CandidateRecord* naive = &records.front();
      for (const auto& r : records) {
        if (r.f1_source > naive->f1_source ||
            (r.f1_source == naive->f1_source && (r.spec.size() < naive->spec.size() ||
                                                 (r.spec.size() == naive->spec.size() && r.spec < naive->spec)))) {
          naive = &r;
        }
      }

      PairSelection sel;
      sel.pair = p;
      sel.fold = f;
      sel.chosen = ranked.front().spec;
      sel.predicted = ranked.front().predicted;
      sel.report = evaluate_selection(sel.chosen, scores);
      sel.naive_chosen = naive->spec;
      sel.naive_report = evaluate_selection(sel.naive_chosen, scores);
      if (4 * sel.report.rank <= sel.report.n_candidates) ++top_quartile;

      selection_csv << csv::quote(p.str()) << ',' << f << ',' << csv::quote(sel.chosen.to_json()) << ','
                    << csv::fmt_double(sel.predicted) << ',' << sel.report.rank << ','
                    << csv::fmt_double(sel.report.regret) << ',' << csv::fmt_double(sel.report.chosen_f1) << ','
                    << csv::fmt_double(sel.report.best_f1) << ',' << sel.report.n_candidates << ','
                    << csv::quote(sel.naive_chosen.to_json()) << ',' << sel.naive_report.rank << ','
                    << csv::fmt_double(sel.naive_report.regret) << '\n';
      selection_entries.push_back({{"pair", p.str()},
                                   {"fold", f},
                                   {"chosen", sel.chosen.to_json()},
                                   {"predicted", sel.predicted},
                                   {"report", report_json(sel.report)},
                                   {"naive_chosen", sel.naive_chosen.to_json()},
                                   {"naive_report", report_json(sel.naive_report)}});
      summary.selections.push_back(std::move(sel));
    }
  }
  write_text(root / "selection.csv", selection_csv.str());

  double regret = 0.0;
  double naive_regret = 0.0;
  for (const auto& s : summary.selections) {
    regret += s.report.regret;
    naive_regret += s.naive_report.regret;
  }
  const double n_sel = static_cast<double>(summary.selections.size());
  summary.mean_regret = regret / n_sel;
  summary.naive_mean_regret = naive_regret / n_sel;
  summary.top_quartile_rate = static_cast<double>(top_quartile) / n_sel;
  summary.target_label_reads_during_selection = log.label_reads(DomainRole::target, AccessPhase::features);

  std::vector<ScoredSpec> oracle;
  std::vector<CandidateRecord> all_records;
  for (const auto& p : summary.pairs) {
    for (const auto& s : test_scores(p)) oracle.push_back({p.pair.str(), s.spec, s.target_f1});
    const auto recs = p.records();
    all_records.insert(all_records.end(), recs.begin(), recs.end());
  }
  const auto analysis = analyze(oracle, all_records, dims.depth);
  write_analysis(root / "analysis", analysis);

  write_manifest({{"folds", fold_entries},
                  {"selection", selection_entries},
                  {"analysis",
                   {{"dir", "analysis"},
                    {"spearman", std::isfinite(analysis.rho) ? json(analysis.rho) : json(nullptr)}}},
                  {"summary",
                   {{"top_quartile_rate", summary.top_quartile_rate},
                    {"mean_regret", summary.mean_regret},
                    {"naive_mean_regret", summary.naive_mean_regret},
                    {"target_label_reads_during_selection", summary.target_label_reads_during_selection}}}});
  timings["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  timings["resumed_pairs"] = summary.resumed_pairs;
  write_text(root / "timings.json", timings.dump(2) + "\n");
  return summary;
}

}  // namespace amoc
