#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "amoc/datagen.hpp"
#include "amoc/netcore.hpp"
#include "amoc/pipeline.hpp"
#include "amoc/random.hpp"

namespace amoc::testing {

// Random labeled examples over a small vocabulary.
inline std::vector<Example> random_examples(std::size_t n, std::uint32_t vocab, std::uint32_t classes,
                                            std::uint64_t seed, std::uint32_t max_len = 8) {
  Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    Example x;
    const auto len = 1 + rng.index(max_len);
    for (std::uint64_t t = 0; t < len; ++t) x.tokens.push_back(static_cast<TokenId>(rng.index(vocab)));
    x.label = static_cast<ClassId>(rng.index(classes));
    out.push_back(std::move(x));
  }
  return out;
}

// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("amoc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Small, fast synthetic setup for pipeline tests.
inline ExperimentConfig tiny_config(std::uint32_t n_domains, std::uint64_t seed = 3) {
  ExperimentConfig c;
  c.seed = seed;
  ShiftSpec s;
  s.vocab_size = 400;
  s.n_domains = n_domains;
  s.shift_strength = 0.3;
  s.shared_background = 60;
  s.domain_background = 30;
  s.cue_tokens_per_class = 8;
  s.sizes = {96, 16, 48, 48};
  s.seed = seed;
  c.synthetic = s;
  c.width = 8;
  c.depth = 4;
  c.fold_count = 2;
  c.removal_sizes = {1, 2};
  c.candidates_per_size = 3;
  c.base_train.epochs = 3;
  c.base_train.learning_rate = 0.01;
  c.candidate_train.epochs = 1;
  c.domain_classifier.train.epochs = 3;
  c.jobs = 2;
  return c;
}

}  // namespace amoc::testing
