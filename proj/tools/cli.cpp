#include "cli.hpp"

#include <glob.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "amoc/analysis.hpp"
#include "amoc/error.hpp"
#include "amoc/log.hpp"
#include "amoc/pipeline.hpp"
#include "amoc/serialize.hpp"

namespace amoc::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Flags beat environment variables, which beat the config file. --seed is
// patched into the JSON before parsing so derived data seeds follow it.
ExperimentConfig load(const Common& c) {
  if (c.config_path.empty()) throw InputError("--config is required");
  auto j = nlohmann::json::parse(slurp(c.config_path), nullptr, false);
  if (j.is_discarded()) throw FormatError("config " + c.config_path + " is not valid JSON");
  if (c.seed) j["seed"] = *c.seed;
  auto config = config_from_json(j.dump());
  if (!config.data_dir.empty() && config.data_dir.is_relative()) {
    config.data_dir = fs::path(c.config_path).parent_path() / config.data_dir;
  }
  apply_env_overrides(config);
  if (c.jobs) config.jobs = *c.jobs;
  if (!c.out.empty()) config.output_dir = c.out;
  config.validate();
  return config;
}

std::vector<fs::path> expand(const std::vector<std::string>& patterns) {
  std::vector<fs::path> out;
  for (const auto& pattern : patterns) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc == GLOB_NOMATCH) throw InputError("no files match '" + pattern + "'");
    if (rc != 0 && rc != GLOB_NOMATCH) throw InputError("cannot expand '" + pattern + "'");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<CandidateRecord> read_all(const std::vector<fs::path>& files, std::uint32_t depth) {
  std::vector<CandidateRecord> out;
  for (const auto& f : files) {
    auto recs = read_records(f, depth);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void add_config(CLI::App* cmd, Common& c, bool required = true) {
  auto* opt = cmd->add_option("--config", c.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  if (required) opt->required();
  cmd->add_option("--seed", c.seed, "Override the config seed");
  cmd->add_option("--jobs", c.jobs, "Candidate-level threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", c.out, "Override the output directory");
}

fs::path base_path(const ExperimentConfig& config, const PairId& pair) {
  return config.output_dir / "bases" / (pair.source + ".amoc");
}

int cmd_gen_data(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed) {
  auto spec = shift_spec_from_json(slurp(spec_path));
  if (seed) spec.seed = *seed;
  const auto domains = generate(spec);
  JsonlSchema schema;
  schema.vocabulary = Vocabulary::synthetic(spec.vocab_size);
  for (std::uint32_t c = 0; c < spec.n_classes; ++c) schema.label_names.push_back("class" + std::to_string(c));
  write_corpus(out, domains, schema);
  std::cout << "wrote " << domains.size() << " domains to " << out << '\n';
  return 0;
}

int cmd_train_base(const Common& c, const std::string& pair_text) {
  const auto config = load(c);
  const auto pair = PairId::parse(pair_text);
  const auto corpus = load_corpus(config);
  AccessLog log;
  const DomainView source(corpus.domain(pair.source), log, DomainRole::source, AccessPhase::features);
  corpus.domain(pair.target);
  const auto model = train_base(config, model_dims(config, corpus), source, derive_seed(config.seed, "base:" + pair.source));
  const auto path = base_path(config, pair);
  save_model(path, model);
  std::cout << path.string() << '\n';
  return 0;
}

int cmd_compress(const Common& c, const std::string& pair_text, const std::vector<std::uint32_t>& sizes,
                 std::optional<std::size_t> count, bool unseen) {
  auto config = load(c);
  if (!sizes.empty()) config.removal_sizes = sizes;
  if (count) config.candidates_per_size = *count;
  config.validate();
  const auto pair = PairId::parse(pair_text);
  const auto corpus = load_corpus(config);
  const auto dims = model_dims(config, corpus);
  AccessLog log;
  const DomainView source(corpus.domain(pair.source), log, DomainRole::source, AccessPhase::features);
  const DomainView target(corpus.domain(pair.target), log, DomainRole::target, AccessPhase::features);
  const auto eval = target.in_phase(AccessPhase::evaluation);
  std::optional<LayerStackModel> base;
  if (fs::exists(base_path(config, pair))) base = load_model(base_path(config, pair));
  const auto result = process_pair(config, dims, source, target, unseen ? nullptr : &eval, base ? &*base : nullptr);
  const auto dir = config.output_dir / "pairs" / pair.dirname();
  write_pair_outputs(dir, result);
  std::size_t failed = 0;
  for (const auto& cand : result.candidates) failed += cand.ok() ? 0 : 1;
  std::cout << "records: " << result.candidates.size() - failed << " (failed " << failed << ")\n"
            << "p_s_t: " << fmt(result.p_s_given_t) << '\n'
            << (dir / "records.csv").string() << '\n';
  return 0;
}

int cmd_fit_selector(const std::vector<std::string>& patterns, const std::string& out, double alpha) {
  const auto records = read_all(expand(patterns), 0);
  if (records.empty()) throw InputError("no records found");
  const auto model = fit_selector(records, records.front().run_sizes, alpha);
  if (!out.empty()) save_regression(out, model);
  std::cout << regression_to_json(model) << '\n';
  return 0;
}

int cmd_select(const Common& c, const std::string& pair_text, const std::string& selector_path) {
  const auto config = load(c);
  const auto pair = PairId::parse(pair_text);
  const auto selector = load_regression(selector_path);
  const auto corpus = load_corpus(config);
  AccessLog log;
  const auto result = select_for_unseen_pair(config, model_dims(config, corpus), corpus.domain(pair.source),
                                             corpus.domain(pair.target), selector, log);
  std::cout << "chosen: " << result.chosen.to_json() << '\n' << "rank,spec,predicted,f1_s\n";
  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    const auto& r = result.ranked[i];
    std::cout << i + 1 << ",\"" << r.spec.to_json() << "\"," << fmt(r.predicted) << ',' << fmt(r.f1_source) << '\n';
  }
  std::cout << "target_label_reads: " << log.label_reads(DomainRole::target) << '\n';
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& pair_text, const std::string& chosen_text) {
  const auto config = load(c);
  const auto pair = PairId::parse(pair_text);
  const auto dir = config.output_dir / "pairs" / pair.dirname();
  if (!fs::exists(dir / "target_eval.csv")) {
    throw InputError("no evaluation for " + pair.str() + " under " + dir.string() + "; run compress first");
  }
  const auto result = read_pair_outputs(dir, pair, config.depth);
  const auto report = evaluate_selection(CandidateSpec::parse(chosen_text, config.depth), test_scores(result));
  std::cout << "regret: " << fmt(report.regret) << '\n'
            << "rank: " << report.rank << " of " << report.n_candidates << '\n'
            << "chosen_f1: " << fmt(report.chosen_f1) << '\n'
            << "best_f1: " << fmt(report.best_f1) << '\n';
  return 0;
}

int cmd_analyze(const std::vector<std::string>& patterns, std::uint32_t depth, const std::string& out) {
  const auto files = expand(patterns);
  const auto records = read_all(files, depth);
  if (records.empty()) throw InputError("no records found");
  // Oracle scores come from the sibling target_eval.csv (test F1) when it
  // exists, otherwise from the records' target_f1.
  std::vector<ScoredSpec> oracle;
  for (const auto& f : files) {
    const auto eval = f.parent_path() / "target_eval.csv";
    const auto recs = read_records(f, depth);
    if (recs.empty()) continue;
    if (fs::exists(eval)) {
      const auto result = read_pair_outputs(f.parent_path(), PairId::parse(recs.front().pair_id), depth);
      for (const auto& s : test_scores(result)) oracle.push_back({recs.front().pair_id, s.spec, s.target_f1});
    } else {
      for (const auto& r : recs) {
        if (!r.target_f1) throw InputError(f.string() + ": records lack target_f1");
        oracle.push_back({r.pair_id, r.spec, *r.target_f1});
      }
    }
  }
  const auto report = analyze(oracle, records, depth);
  if (!out.empty()) write_analysis(out, report);
  std::cout << "layer,frequency,beta\n";
  for (std::uint32_t l = 0; l < depth; ++l) {
    std::cout << l + 1 << ',' << fmt(report.frequency[l]) << ','
              << (std::isfinite(report.importance.beta[l]) ? fmt(report.importance.beta[l]) : "") << '\n';
  }
  std::cout << "spearman: " << (std::isfinite(report.rho) ? fmt(report.rho) : "undefined") << '\n';
  return 0;
}

int cmd_run_all(const Common& c) {
  const auto config = load(c);
  const auto summary = run_all(config);
  std::cout << "pairs: " << summary.pairs.size() << " (resumed " << summary.resumed_pairs << ")\n"
            << "top_quartile_rate: " << fmt(summary.top_quartile_rate) << '\n'
            << "mean_regret: " << fmt(summary.mean_regret) << '\n'
            << "naive_mean_regret: " << fmt(summary.naive_mean_regret) << '\n'
            << "target_label_reads_during_selection: " << summary.target_label_reads_during_selection << '\n'
            << (config.output_dir / "manifest.json").string() << '\n';
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Causal layer-removal compression with regression-based model selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "amoc 0.1.0");

  Common common;
  std::string pair;
  std::string path_a;
  std::string path_b;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint32_t> sizes;
  std::optional<std::size_t> count;
  bool unseen = false;
  std::vector<std::string> patterns;
  double alpha = kDefaultStepwiseAlpha;
  std::uint32_t depth = 6;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic multi-domain corpus as JSONL");
  gen->add_option("--spec", path_a, "Shift spec (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", path_b, "Output corpus directory")->required();
  gen->add_option("--seed", seed, "Override the spec seed");

  auto* tb = app.add_subcommand("train-base", "Train the base model on the source domain of a pair");
  tb->add_option("--pair", pair, "Domain pair S,T")->required();
  add_config(tb, common);

  auto* comp = app.add_subcommand("compress", "Generate, fine-tune and featurize candidates for a pair");
  comp->add_option("--pair", pair, "Domain pair S,T")->required();
  comp->add_option("--sizes", sizes, "Removal sizes")->delimiter(',');
  comp->add_option("--count", count, "Candidates per size");
  comp->add_flag("--unseen", unseen, "Skip target-label evaluation");
  add_config(comp, common);

  auto* fit = app.add_subcommand("fit-selector", "Fit the stepwise selector on candidate records");
  fit->add_option("--records", patterns, "Record CSV files or glob patterns")->required();
  fit->add_option("--out", path_b, "Write the regression report here");
  fit->add_option("--alpha", alpha, "Entry significance level")->check(CLI::Range(0.0, 1.0));

  auto* sel = app.add_subcommand("select", "Rank candidates for an unseen pair with a fitted selector");
  sel->add_option("--pair", pair, "Domain pair S,T")->required();
  sel->add_option("--selector", path_a, "Regression report (JSON)")->required()->check(CLI::ExistingFile);
  add_config(sel, common);

  auto* ev = app.add_subcommand("evaluate", "Regret and rank of a chosen candidate against the oracle best");
  ev->add_option("--pair", pair, "Domain pair S,T")->required();
  ev->add_option("--chosen", path_a, "Chosen spec, e.g. [2,3]")->required();
  add_config(ev, common);

  auto* an = app.add_subcommand("analyze", "Layer frequency, importance regression and Spearman");
  an->add_option("--records", patterns, "Record CSV files or glob patterns")->required();
  an->add_option("--depth", depth, "Base model depth")->check(CLI::PositiveNumber);
  an->add_option("--out", path_b, "Write analysis CSVs to this directory");

  auto* ra = app.add_subcommand("run-all", "Full pipeline with fold splits; resumes from an existing manifest");
  add_config(ra, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    if (*gen) return cmd_gen_data(path_a, path_b, seed);
    if (*tb) return cmd_train_base(common, pair);
    if (*comp) return cmd_compress(common, pair, sizes, count, unseen);
    if (*fit) return cmd_fit_selector(patterns, path_b, alpha);
    if (*sel) return cmd_select(common, pair, path_a);
    if (*ev) return cmd_evaluate(common, pair, path_a);
    if (*an) return cmd_analyze(patterns, depth, path_b);
    if (*ra) return cmd_run_all(common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::data);
  }
  return static_cast<int>(ExitCode::usage);
}

}  // namespace amoc::cli
