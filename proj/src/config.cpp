#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "amoc/error.hpp"
#include "amoc/log.hpp"
#include "amoc/pipeline.hpp"
#include "amoc/random.hpp"

namespace amoc {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw FormatError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json train_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"optimizer", c.optimizer == OptimizerKind::adam ? "adam" : "sgd"},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"weight_decay", c.weight_decay}};
}

void train_from_json(const json& j, TrainConfig& c, const std::string& where,
                     const std::set<std::string>& extra = {}) {
  std::set<std::string> keys = {"epochs", "learning_rate", "batch_size", "optimizer",
                                "beta1",  "beta2",         "epsilon",    "weight_decay"};
  keys.insert(extra.begin(), extra.end());
  check_keys(j, keys, where);
  read(j, "epochs", c.epochs);
  read(j, "learning_rate", c.learning_rate);
  read(j, "batch_size", c.batch_size);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "epsilon", c.epsilon);
  read(j, "weight_decay", c.weight_decay);
  if (j.contains("optimizer")) {
    const auto name = j.at("optimizer").get<std::string>();
    if (name == "adam") {
      c.optimizer = OptimizerKind::adam;
    } else if (name == "sgd") {
      c.optimizer = OptimizerKind::sgd;
    } else {
      throw FormatError(where + ": optimizer must be 'adam' or 'sgd'");
    }
  }
}

json shift_to_json(const ShiftSpec& s) {
  return {{"vocab_size", s.vocab_size},
          {"n_classes", s.n_classes},
          {"n_domains", s.n_domains},
          {"shift_strength", s.shift_strength},
          {"domain_jitter", s.domain_jitter},
          {"label_noise", s.label_noise},
          {"cue_tokens_per_class", s.cue_tokens_per_class},
          {"shared_background", s.shared_background},
          {"domain_background", s.domain_background},
          {"cue_mass", s.cue_mass},
          {"min_length", s.min_length},
          {"max_length", s.max_length},
          {"sizes",
           {{"train", s.sizes.train}, {"unlabeled", s.sizes.unlabeled}, {"dev", s.sizes.dev}, {"test", s.sizes.test}}},
          {"seed", s.seed}};
}

ShiftSpec shift_from_json(const json& j) {
  check_keys(j,
             {"vocab_size", "n_classes", "n_domains", "shift_strength", "domain_jitter", "label_noise",
              "cue_tokens_per_class", "shared_background", "domain_background", "cue_mass", "min_length",
              "max_length", "sizes", "seed"},
             "synthetic");
  ShiftSpec s;
  read(j, "vocab_size", s.vocab_size);
  read(j, "n_classes", s.n_classes);
  read(j, "n_domains", s.n_domains);
  read(j, "shift_strength", s.shift_strength);
  read(j, "domain_jitter", s.domain_jitter);
  read(j, "label_noise", s.label_noise);
  read(j, "cue_tokens_per_class", s.cue_tokens_per_class);
  read(j, "shared_background", s.shared_background);
  read(j, "domain_background", s.domain_background);
  read(j, "cue_mass", s.cue_mass);
  read(j, "min_length", s.min_length);
  read(j, "max_length", s.max_length);
  read(j, "seed", s.seed);
  if (j.contains("sizes")) {
    const auto& z = j.at("sizes");
    check_keys(z, {"train", "unlabeled", "dev", "test"}, "synthetic.sizes");
    read(z, "train", s.sizes.train);
    read(z, "unlabeled", s.sizes.unlabeled);
    read(z, "dev", s.sizes.dev);
    read(z, "test", s.sizes.test);
  }
  return s;
}

std::string slurp(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw InputError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (synthetic && !data_dir.empty()) throw InputError("config: give either a synthetic spec or a data_dir, not both");
  if (!synthetic && data_dir.empty()) throw InputError("config: no data source (synthetic or data_dir)");
  if (synthetic) synthetic->validate();
  if (width == 0 || depth == 0) throw InputError("config: model width and depth must be positive");
  if (fold_count < 2) throw InputError("config: fold count must be at least 2");
  if (removal_sizes.empty()) throw InputError("config: removal_sizes is empty");
  std::set<std::uint32_t> seen;
  for (auto s : removal_sizes) {
    if (s == 0 || s >= depth) throw InputError("config: removal size " + std::to_string(s) + " out of range");
    if (!seen.insert(s).second) throw InputError("config: duplicate removal size " + std::to_string(s));
  }
  if (candidates_per_size == 0) throw InputError("config: candidates_per_size must be positive");
  base_train.validate();
  candidate_train.validate();
  domain_classifier.train.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("config: alpha must be in (0,1)");
  if (jobs < 0) throw InputError("config: jobs must be >= 0");
}

ShiftSpec shift_spec_from_json(const std::string& text) {
  try {
    return shift_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("synthetic spec: ") + e.what());
  }
}

std::string shift_spec_to_json(const ShiftSpec& spec) { return shift_to_json(spec).dump(2); }

ExperimentConfig config_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    check_keys(j,
               {"seed", "output_dir", "jobs", "data", "model", "folds", "removal_sizes", "candidates_per_size",
                "base_train", "candidate_train", "domain_classifier", "ate_metric", "alpha"},
               "config");
    ExperimentConfig c;
    read(j, "seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    read(j, "jobs", c.jobs);
    if (j.contains("data")) {
      const auto& d = j.at("data");
      check_keys(d, {"synthetic", "dir", "domains"}, "config.data");
      if (d.contains("synthetic")) {
        c.synthetic = shift_from_json(d.at("synthetic"));
        if (!d.at("synthetic").contains("seed")) c.synthetic->seed = derive_seed(c.seed, "data");
      }
      if (d.contains("dir")) c.data_dir = d.at("dir").get<std::string>();
      read(d, "domains", c.domains);
    }
    if (j.contains("model")) {
      check_keys(j.at("model"), {"width", "depth"}, "config.model");
      read(j.at("model"), "width", c.width);
      read(j.at("model"), "depth", c.depth);
    }
    read(j, "folds", c.fold_count);
    read(j, "removal_sizes", c.removal_sizes);
    read(j, "candidates_per_size", c.candidates_per_size);
    if (j.contains("base_train")) train_from_json(j.at("base_train"), c.base_train, "config.base_train");
    if (j.contains("candidate_train")) {
      train_from_json(j.at("candidate_train"), c.candidate_train, "config.candidate_train");
    }
    if (j.contains("domain_classifier")) {
      const auto& d = j.at("domain_classifier");
      train_from_json(d, c.domain_classifier.train, "config.domain_classifier", {"patience", "holdout_fraction"});
      read(d, "patience", c.domain_classifier.patience);
      read(d, "holdout_fraction", c.domain_classifier.holdout_fraction);
    }
    if (j.contains("ate_metric")) c.ate_metric = parse_distance_metric(j.at("ate_metric").get<std::string>());
    read(j, "alpha", c.alpha);
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  json data = json::object();
  if (c.synthetic) data["synthetic"] = shift_to_json(*c.synthetic);
  if (!c.data_dir.empty()) data["dir"] = c.data_dir.string();
  data["domains"] = c.domains;
  auto dc = train_to_json(c.domain_classifier.train);
  dc["patience"] = c.domain_classifier.patience;
  dc["holdout_fraction"] = c.domain_classifier.holdout_fraction;
  const json j = {{"seed", c.seed},
                  {"output_dir", c.output_dir.string()},
                  {"jobs", c.jobs},
                  {"data", data},
                  {"model", {{"width", c.width}, {"depth", c.depth}}},
                  {"folds", c.fold_count},
                  {"removal_sizes", c.removal_sizes},
                  {"candidates_per_size", c.candidates_per_size},
                  {"base_train", train_to_json(c.base_train)},
                  {"candidate_train", train_to_json(c.candidate_train)},
                  {"domain_classifier", dc},
                  {"ate_metric", to_string(c.ate_metric)},
                  {"alpha", c.alpha}};
  return j.dump(2);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  auto config = config_from_json(slurp(path, "config"));
  // A relative data directory is resolved against the config file.
  if (!config.data_dir.empty() && config.data_dir.is_relative()) {
    config.data_dir = path.parent_path() / config.data_dir;
  }
  return config;
}

void apply_env_overrides(ExperimentConfig& config) {
  if (const char* dir = std::getenv("AMOC_OUTPUT_DIR"); dir && *dir) config.output_dir = dir;
  if (const char* jobs = std::getenv("AMOC_JOBS"); jobs && *jobs) {
    try {
      config.jobs = std::stoi(jobs);
    } catch (const std::exception&) {
      throw InputError(std::string("AMOC_JOBS is not an integer: ") + jobs);
    }
  }
}

Corpus load_corpus(const ExperimentConfig& config) {
  Corpus corpus;
  if (config.synthetic) {
    corpus.domains = generate(*config.synthetic);
    corpus.vocab_size = config.synthetic->vocab_size;
    corpus.n_classes = config.synthetic->n_classes;
  } else {
    const auto schema = load_schema(config.data_dir);
    const auto names = config.domains.empty() ? list_domains(config.data_dir) : config.domains;
    for (const auto& name : names) {
      corpus.domains.push_back(load_domain(config.data_dir, name, schema, derive_seed(config.seed, "split:" + name)));
    }
    corpus.vocab_size = schema.vocabulary.size();
    corpus.n_classes = static_cast<std::uint32_t>(schema.label_names.size());
  }
  if (config.synthetic && !config.domains.empty()) {
    std::vector<DomainDataset> kept;
    for (const auto& name : config.domains) kept.push_back(corpus.domain(name));
    corpus.domains = std::move(kept);
  }
  if (corpus.domains.size() < 2) throw InputError("corpus: at least two domains are required");
  std::sort(corpus.domains.begin(), corpus.domains.end(),
            [](const DomainDataset& a, const DomainDataset& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < corpus.domains.size(); ++i) {
    if (corpus.domains[i].name == corpus.domains[i - 1].name) {
      throw InputError("corpus: duplicate domain " + corpus.domains[i].name);
    }
  }
  for (const auto& d : corpus.domains) {
    if (d.labeled_train.empty() || d.held_out.empty()) {
      throw InputError("corpus: domain " + d.name + " needs labeled train and dev examples");
    }
    if (d.test.empty()) log::warn("domain " + d.name + " has no test split; test-set reporting will fail");
  }
  return corpus;
}

const DomainDataset& Corpus::domain(const std::string& name) const {
  for (const auto& d : domains) {
    if (d.name == name) return d;
  }
  throw InputError("corpus has no domain '" + name + "'");
}

ModelDims model_dims(const ExperimentConfig& config, const Corpus& corpus) {
  ModelDims dims;
  dims.vocab_size = corpus.vocab_size;
  dims.width = config.width;
  dims.n_classes = corpus.n_classes;
  dims.depth = config.depth;
  return dims;
}

}  // namespace amoc
