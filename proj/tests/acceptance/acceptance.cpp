// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "amoc/analysis.hpp"
#include "amoc/compress.hpp"
#include "amoc/effects.hpp"
#include "amoc/pipeline.hpp"
#include "amoc/regress.hpp"
#include "amoc/train.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace amoc;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      if (ok) detail << what;
      ok = false;
    }
  }
};

int failures = 0;

void report(int id, const std::string& name, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!c.ok) ++failures;
  std::cout << (c.ok ? "PASS" : "FAIL") << "  " << id << ". " << name << "  (" << std::fixed
            << std::setprecision(1) << secs << " s)";
  if (!c.detail.str().empty()) std::cout << "  " << c.detail.str();
  std::cout << std::endl;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig config_for_seed(const std::string& text, std::uint64_t seed, const fs::path& out) {
  auto j = nlohmann::json::parse(text);
  j["seed"] = seed;
  auto config = config_from_json(j.dump());
  config.output_dir = out;
  config.validate();
  return config;
}

// Every file under root, relative path -> contents.
std::map<std::string, std::string> tree(const fs::path& root, const std::string& ext) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ext) {
      out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string config_path;
  std::string work = "acceptance_runs";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  app.add_option("--config", config_path, "Reference benchmark config")->required()->check(CLI::ExistingFile);
  app.add_option("--work", work, "Scratch directory for benchmark runs");
  app.add_option("--seeds", seeds, "Benchmark seeds");
  CLI11_PARSE(app, argc, argv);

  const std::string config_text = slurp(config_path);
  fs::remove_all(work);
  fs::create_directories(work);

  report(1, "ATE worked example", [](Check& c) {
    const double tv = tv_distance(ProbDist({0.7, 0.2, 0.1}), ProbDist({0.5, 0.1, 0.4}));
    c.expect(std::fabs(tv - 0.6) < 1e-15, "tv = " + std::to_string(tv));
  });

  report(2, "reconnection oracle", [](Check& c) {
    constexpr std::uint32_t k = 8;
    int checked = 0;
    for (std::uint32_t mask = 1; mask + 1 < (1u << k); ++mask) {
      std::vector<std::uint32_t> removed;
      for (std::uint32_t l = 1; l <= k; ++l) {
        if (mask & (1u << (l - 1))) removed.push_back(l);
      }
      ++checked;
      c.expect(plan_reconnection(CandidateSpec(removed, k), k) == testing::brute_force_plan(removed, k),
               "mismatch at mask " + std::to_string(mask));
    }
    c.expect(checked == 254, "checked " + std::to_string(checked));
    const auto plan = plan_reconnection(CandidateSpec({2, 3, 7}, 12), 12);
    const std::vector<std::pair<std::uint32_t, std::uint32_t>> junctions = {{1, 4}, {6, 8}};
    c.expect(plan.junctions == junctions, "K=12 junctions");
    c.expect(plan.unfrozen == std::set<std::uint32_t>{1, 6}, "K=12 unfrozen");
    c.detail << "254 subsets + K=12 example";
  });

  report(3, "freeze invariant", [](Check& c) {
    const ModelDims dims{60, 8, 2, 6};
    const auto base = testing::trained_like_base(dims, 11);
    const auto data = testing::random_examples(48, 60, 2, 12);
    Rng rng(13);
    int moved = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const auto size = 1 + static_cast<std::uint32_t>(rng.index(5));
      const std::vector<std::uint32_t> sizes = {size};
      const auto spec = sample_candidate_specs(6, sizes, 1, rng.next_u64()).front();
      TrainConfig tc;
      tc.epochs = 1;
      tc.learning_rate = 0.05;
      tc.seed = rng.next_u64();
      const auto tuned = finetune_candidate(build_candidate(base, spec, plan_reconnection(spec, 6)), data, tc);
      for (std::size_t t = 0; t < tuned.tensor_count(); ++t) {
        const auto name = tuned.tensor_name(t);
        std::size_t b = 0;
        while (base.tensor_name(b) != name) ++b;
        if (tuned.is_frozen(t)) {
          c.expect(tuned.tensor(t).data == base.tensor(b).data, spec.to_json() + " " + name + " changed");
        } else if (tuned.tensor(t).data != base.tensor(b).data) {
          ++moved;
        }
      }
    }
    c.expect(moved > 0, "no trainable tensor moved");
    c.detail << "50 fine-tunes";
  });

  report(4, "gradient check", [](Check& c) {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) worst = std::max(worst, testing::max_relative_gradient_error(seed));
    c.expect(worst < 1e-4, "");
    c.detail << "max relative error " << std::scientific << std::setprecision(2) << worst;
  });

  report(5, "OLS and stepwise oracles", [](Check& c) {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto X = testing::random_design(60, 4, seed);
      const std::vector<std::string> terms = {"x1", "x2", "x3", "x4"};
      const auto fit = ols_fit(X, terms);
      const auto oracle = testing::oracle_ols(X, {0, 1, 2, 3});
      for (std::size_t i = 0; i < 5; ++i) {
        worst = std::max(worst, std::fabs(fit.beta[i] - static_cast<double>(oracle.beta[i])));
        worst = std::max(worst, std::fabs(fit.se[i] - static_cast<double>(oracle.se[i])));
      }
    }
    c.expect(worst <= 1e-8, "coefficient error");
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto X = testing::random_design(100, 6, seed * 31);
      Rng rng(seed);
      for (std::size_t r = 0; r < 100; ++r) {
        X.response(r) = 0.5 * X.at(r, seed % 6) - 0.3 * X.at(r, (seed + 2) % 6) + 0.25 * X.at(r, (seed + 3) % 6) +
                        rng.normal();
      }
      const auto m = stepwise_fit(X, X.columns(), 0.01);
      c.expect(m.term_names() == testing::oracle_stepwise(X, 0.01), "stepwise path differs, seed " + std::to_string(seed));
    }
    c.detail << "max |beta/se diff| " << std::scientific << std::setprecision(2) << worst << ", 20 stepwise paths";
  });

  report(6, "adjusted R2 formula", [](Check& c) {
    DesignMatrix X({"a", "b"}, 7);
    const double a[] = {1, 2, 3, 4, 5, 6, 7};
    const double b[] = {2, 1, 4, 3, 6, 5, 8};
    const double y[] = {1.1, 1.9, 3.2, 3.8, 5.3, 5.9, 7.4};
    for (std::size_t r = 0; r < 7; ++r) {
      X.at(r, 0) = a[r];
      X.at(r, 1) = b[r];
      X.response(r) = y[r];
    }
    const auto fit = ols_fit(X, std::vector<std::string>{"a", "b"});
    const double expected = 1.0 - (1.0 - fit.r2) * 6.0 / 4.0;
    c.expect(std::fabs(fit.adjusted_r2 - expected) <= 1e-12, "");
  });

  // Reference benchmark, one full run per seed.
  std::vector<RunSummary> runs;
  std::vector<ExperimentConfig> configs;
  const auto bench_t0 = std::chrono::steady_clock::now();
  for (auto seed : seeds) {
    configs.push_back(config_for_seed(config_text, seed, fs::path(work) / ("seed" + std::to_string(seed))));
    runs.push_back(run_all(configs.back()));
  }
  const double bench_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - bench_t0).count();
  std::cout << "benchmark: " << seeds.size() << " seeds in " << std::fixed << std::setprecision(1) << bench_secs
            << " s" << std::endl;

  report(7, "selector quality", [&](Check& c) {
    std::size_t top = 0;
    std::size_t n = 0;
    double regret = 0.0;
    for (const auto& r : runs) {
      for (const auto& s : r.selections) {
        top += 4 * s.report.rank <= s.report.n_candidates ? 1 : 0;
        regret += s.report.regret;
        ++n;
      }
    }
    const double rate = static_cast<double>(top) / static_cast<double>(n);
    const double mean = regret / static_cast<double>(n);
    c.expect(n == 20 * seeds.size(), "expected 20 test pairs per seed");
    c.expect(rate >= 0.70, "top-quartile rate below 0.70; ");
    c.expect(mean <= 0.03, "mean regret above 0.03; ");
    c.detail << "top-quartile " << std::setprecision(3) << rate << " (>= 0.70), mean regret " << std::setprecision(4)
             << mean << " (<= 0.03)";
  });

  report(8, "selector vs naive", [&](Check& c) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const bool ok = runs[i].mean_regret <= runs[i].naive_mean_regret;
      c.expect(ok, "");
      c.detail << "seed " << seeds[i] << ": " << std::setprecision(4) << runs[i].mean_regret << " vs "
               << runs[i].naive_mean_regret << (ok ? "" : " x") << "; ";
    }
  });

  report(9, "in-sample fit", [&](Check& c) {
    double lowest = 1.0;
    for (const auto& r : runs) {
      for (const auto& f : r.folds) {
        c.expect(f.selector.has_value(), "fold without selector");
        if (f.selector) lowest = std::min(lowest, f.selector->adjusted_r2);
      }
    }
    c.expect(lowest >= 0.5, "");
    c.detail << "lowest training-fold adjusted R2 " << std::setprecision(3) << lowest << " (>= 0.5)";
  });

  report(10, "test-time purity", [&](Check& c) {
    for (const auto& r : runs) c.expect(r.target_label_reads_during_selection == 0, "run_all read target labels");
    // Re-run the unseen-pair path on every pair of the first seed.
    const auto& config = configs.front();
    const auto& run = runs.front();
    const auto corpus = load_corpus(config);
    const auto dims = model_dims(config, corpus);
    std::size_t pairs = 0;
    std::size_t same = 0;
    for (const auto& s : run.selections) {
      AccessLog log;
      const auto sel = select_for_unseen_pair(config, dims, corpus.domain(s.pair.source),
                                              corpus.domain(s.pair.target), *run.folds[s.fold].selector, log);
      c.expect(log.label_reads(DomainRole::target) == 0, s.pair.str() + " read target labels; ");
      ++pairs;
      same += sel.chosen == s.chosen ? 1 : 0;
    }
    c.expect(same == pairs, "unseen-pair path chose differently; ");
    c.detail << pairs << " pairs, 0 target-label reads, choices agree with run-all on " << same;
  });

  report(11, "determinism", [&](Check& c) {
    const auto again_dir = fs::path(work) / "repeat";
    auto again = configs.front();
    again.output_dir = again_dir;
    run_all(again);
    const auto& first_dir = configs.front().output_dir;
    c.expect(slurp(first_dir / "manifest.json") == slurp(again_dir / "manifest.json"), "manifest differs; ");
    const auto a = tree(first_dir, ".csv");
    const auto b = tree(again_dir, ".csv");
    c.expect(a == b, "csv outputs differ; ");
    c.detail << "manifest + " << a.size() << " csv files byte-identical";
  });

  report(12, "spearman oracle", [](Check& c) {
    Rng rng(33);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 5 + rng.index(20);
      std::vector<double> a(n);
      std::vector<double> b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = static_cast<double>(i % (2 + trial % 5));
        b[i] = static_cast<double>(i % (3 + trial % 4));
      }
      rng.shuffle(std::span(a));
      rng.shuffle(std::span(b));
      worst = std::max(worst, std::fabs(spearman(a, b) - testing::brute_spearman(a, b)));
    }
    c.expect(worst <= 1e-12, "");
    c.detail << "max diff " << std::scientific << std::setprecision(2) << worst;
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
