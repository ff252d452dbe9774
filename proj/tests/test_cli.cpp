#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "amoc/error.hpp"
#include "cli.hpp"
#include "test_util.hpp"

namespace amoc {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "amoc");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  ::testing::internal::CaptureStdout();
  ::testing::internal::CaptureStderr();
  const int code = cli::run(static_cast<int>(argv.size()), argv.data());
  auto out = ::testing::internal::GetCapturedStdout();
  ::testing::internal::GetCapturedStderr();
  return {code, out};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, static_cast<int>(ExitCode::usage));
  EXPECT_EQ(run_cli({"bogus"}).code, static_cast<int>(ExitCode::usage));
  EXPECT_EQ(run_cli({"run-all", "--frobnicate"}).code, static_cast<int>(ExitCode::usage));
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_NE(run_cli({"run-all", "--config", "/nonexistent/config.json"}).code, 0);
}

TEST(Cli, GenDataWritesCorpus) {
  const auto dir = testing::scratch_dir("cli_gen");
  ShiftSpec spec;
  spec.n_domains = 2;
  spec.sizes = {20, 5, 5, 5};
  write_file(dir / "spec.json", shift_spec_to_json(spec));
  const auto r = run_cli({"gen-data", "--spec", (dir / "spec.json").string(), "--out", (dir / "corpus").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("wrote 2 domains"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "corpus" / synthetic_domain_name(1)));

  write_file(dir / "bad.json", "{not json");
  EXPECT_EQ(run_cli({"gen-data", "--spec", (dir / "bad.json").string(), "--out", (dir / "x").string()}).code,
            static_cast<int>(ExitCode::data));
}

TEST(Cli, DivergentBaseExitsWithDivergenceCode) {
  const auto dir = testing::scratch_dir("cli_diverge");
  auto config = testing::tiny_config(2);
  config.output_dir = dir / "out";
  config.base_train.optimizer = OptimizerKind::sgd;
  config.base_train.learning_rate = 1e300;
  write_file(dir / "config.json", config_to_json(config));
  const auto r = run_cli({"train-base", "--config", (dir / "config.json").string(), "--pair", "d0,d1"});
  EXPECT_EQ(r.code, static_cast<int>(ExitCode::divergence));
}

TEST(Cli, CompressFitSelectEvaluateAnalyze) {
  const auto dir = testing::scratch_dir("cli_flow");
  auto config = testing::tiny_config(2);
  config.output_dir = dir / "out";
  const auto cfg = (dir / "config.json").string();
  write_file(cfg, config_to_json(config));
  const std::string a = synthetic_domain_name(0);
  const std::string b = synthetic_domain_name(1);

  auto r = run_cli({"compress", "--config", cfg, "--pair", a + "," + b});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("records: 6 (failed 0)"), std::string::npos) << r.out;
  r = run_cli({"compress", "--config", cfg, "--pair", b + "," + a, "--sizes", "1,2", "--count", "3"});
  ASSERT_EQ(r.code, 0);

  const auto records_ab = (dir / "out" / "pairs" / (a + "__" + b) / "records.csv").string();
  const auto records_ba = (dir / "out" / "pairs" / (b + "__" + a) / "records.csv").string();
  const auto selector = (dir / "selector.json").string();
  r = run_cli({"fit-selector", "--records", records_ab, records_ba, "--out", selector});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(selector));

  r = run_cli({"select", "--config", cfg, "--pair", a + "," + b, "--selector", selector});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("chosen: ["), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("target_label_reads: 0"), std::string::npos) << r.out;

  // A selector that needs a feature the records do not carry.
  auto bad = nlohmann::json::parse(read_file(selector));
  bad["terms"] = nlohmann::json::array(
      {{{"name", "ind_size_9"}, {"beta", 1.0}, {"se", 0.1}, {"t", 10.0}, {"p", 0.0}, {"delta_r2", 0.1}}});
  write_file(dir / "bad_selector.json", bad.dump());
  r = run_cli({"select", "--config", cfg, "--pair", a + "," + b, "--selector", (dir / "bad_selector.json").string()});
  EXPECT_NE(r.code, 0);

  // The oracle best by test F1 has zero regret.
  std::ifstream eval(dir / "out" / "pairs" / (a + "__" + b) / "target_eval.csv");
  std::string line;
  std::getline(eval, line);
  std::string best_spec;
  double best = -1.0;
  while (std::getline(eval, line)) {
    line = line.substr(line.find(',') + 1);
    std::string spec;
    std::size_t rest_at;
    if (line.front() == '"') {
      rest_at = line.find('"', 1);
      spec = line.substr(1, rest_at - 1);
      rest_at += 2;
    } else {
      rest_at = line.find(',');
      spec = line.substr(0, rest_at);
      rest_at += 1;
    }
    std::vector<std::string> cols;
    std::stringstream rest(line.substr(rest_at));
    for (std::string c; std::getline(rest, c, ',');) cols.push_back(c);
    const double test_f1 = std::stod(cols.at(2));
    if (test_f1 > best) {
      best = test_f1;
      best_spec = spec;
    }
  }
  r = run_cli({"evaluate", "--config", cfg, "--pair", a + "," + b, "--chosen", best_spec});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("regret: 0.000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("rank: 1 of"), std::string::npos) << r.out;

  r = run_cli({"analyze", "--records", records_ab, records_ba, "--depth", "4", "--out", (dir / "analysis").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("layer,frequency,beta"), std::string::npos);
  EXPECT_NE(r.out.find("spearman: "), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "analysis" / "layer_frequency.csv"));
}

}  // namespace
}  // namespace amoc
