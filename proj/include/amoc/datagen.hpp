#pragma once

// Synthetic multi-domain corpora with a controllable domain shift, plus the
// JSONL reader/writer shared by synthetic and real corpora.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "amoc/netcore.hpp"

namespace amoc {

// One domain's data. labeled_train is L, held_out is the development split
// (H), test is only read for final reporting, unlabeled holds extra label-free
// examples (U is labeled_train without labels plus this split).
struct DomainDataset {
  std::string name;
  std::vector<Example> labeled_train;
  std::vector<Example> unlabeled;
  std::vector<Example> held_out;
  std::vector<Example> test;

  bool operator==(const DomainDataset&) const = default;
};

struct SplitSizes {
  std::size_t train = 640;
  std::size_t unlabeled = 0;
  std::size_t dev = 160;
  std::size_t test = 200;
};

// Token model: for domain d and class c,
//   p_{d,c} = (1 - s_d) * P_c + s_d * Q_{d,c}
// where P_c lives on a vocabulary block shared by all domains and Q_{d,c} on a
// block owned by domain d (blocks of different domains are disjoint). Each of
// P_c and Q_{d,c} puts `cue_mass` on class-specific cue tokens and the rest on
// background tokens. s_d = shift_strength * (1 - domain_jitter * u_d), u_d
// uniform in [0, 1) drawn per domain.
struct ShiftSpec {
  std::uint32_t vocab_size = 2000;
  std::uint32_t n_classes = 2;
  std::uint32_t n_domains = 4;
  double shift_strength = 0.5;
  double domain_jitter = 0.0;
  double label_noise = 0.0;
  std::uint32_t cue_tokens_per_class = 20;
  std::uint32_t shared_background = 200;
  std::uint32_t domain_background = 100;
  double cue_mass = 0.3;
  std::uint32_t min_length = 5;
  std::uint32_t max_length = 30;
  SplitSizes sizes;
  std::uint64_t seed = 0;

  // Throws InputError for degenerate specs (zero classes/domains, too small
  // a vocabulary, out-of-range probabilities).
  void validate() const;
};

std::string synthetic_domain_name(std::size_t index);

// Per-domain shift weights s_d.
std::vector<double> domain_shift_weights(const ShiftSpec& spec);

// token_distributions(spec)[d][c][t] = p_{d,c}(t).
std::vector<std::vector<std::vector<double>>> token_distributions(const ShiftSpec& spec);

std::vector<DomainDataset> generate(const ShiftSpec& spec);

struct SplitResult {
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;
};

// Seeded random partition. Sizes use the largest-remainder rule, so
// (0.64, 0.16, 0.20) of 100 is exactly 64/16/20. Throws InputError when the
// fractions are negative or do not sum to 1 (tolerance 1e-9).
SplitResult split(std::span<const Example> examples, std::array<double, 3> fractions, std::uint64_t seed);

// Whitespace-token vocabulary. Index 0 is the OOV bucket.
class Vocabulary {
 public:
  Vocabulary();
  static Vocabulary from_words(std::span<const std::string> words);
  // "w1" .. "w{size-1}" mapping to 1 .. size-1.
  static Vocabulary synthetic(std::uint32_t size);
  // Most frequent whitespace tokens of the texts (ties by first occurrence),
  // capped so that size() <= max_size.
  static Vocabulary build(std::span<const std::string> texts, std::uint32_t max_size);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  TokenId lookup(std::string_view word) const;
  const std::string& word(TokenId id) const { return words_.at(id); }
  std::uint32_t size() const { return static_cast<std::uint32_t>(words_.size()); }

  std::vector<TokenId> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const TokenId> tokens) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

struct JsonlSchema {
  Vocabulary vocabulary;
  std::vector<std::string> label_names;

  // Index of a label name; throws InputError when unknown.
  ClassId label_index(std::string_view name) const;
};

// Each line: {"text": string, "label": string|null, "domain": string}.
// Labeled lines go to labeled_train, unlabeled lines to unlabeled. An empty
// file yields an empty dataset and a warning. A malformed line throws
// FormatError naming the line number.
DomainDataset load_jsonl(const std::filesystem::path& path, const JsonlSchema& schema);

void write_jsonl(const std::filesystem::path& path, std::span<const Example> examples, const std::string& domain,
                 const JsonlSchema& schema);

// Corpus directory layout:
//   <dir>/vocab.txt, <dir>/labels.txt
//   <dir>/<domain>/{train,unlabeled,dev,test}.jsonl
// A domain may instead be a single <dir>/<domain>.jsonl file; its labeled
// lines are then split 64/16/20 with `split_seed`.
void write_corpus(const std::filesystem::path& dir, std::span<const DomainDataset> domains, const JsonlSchema& schema);
JsonlSchema load_schema(const std::filesystem::path& dir);
DomainDataset load_domain(const std::filesystem::path& dir, const std::string& name, const JsonlSchema& schema,
                          std::uint64_t split_seed = 0);
std::vector<std::string> list_domains(const std::filesystem::path& dir);

}  // namespace amoc
