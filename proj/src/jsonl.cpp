#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "amoc/datagen.hpp"
#include "amoc/error.hpp"
#include "amoc/log.hpp"

namespace amoc {
namespace {

constexpr const char* kOovWord = "<unk>";

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  words_.push_back(kOovWord);
  index_.emplace(kOovWord, kOovToken);
}

Vocabulary Vocabulary::from_words(std::span<const std::string> words) {
  Vocabulary v;
  for (const auto& w : words) {
    if (w.empty() || w == kOovWord || v.index_.contains(w)) continue;
    v.index_.emplace(w, static_cast<TokenId>(v.words_.size()));
    v.words_.push_back(w);
  }
  return v;
}

Vocabulary Vocabulary::synthetic(std::uint32_t size) {
  std::vector<std::string> words;
  for (std::uint32_t i = 1; i < size; ++i) words.push_back("w" + std::to_string(i));
  return from_words(words);
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::uint32_t max_size) {
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> counts;  // word -> (count, first seen)
  std::size_t seen = 0;
  for (const auto& text : texts) {
    std::istringstream in(text);
    std::string w;
    while (in >> w) {
      auto [it, inserted] = counts.try_emplace(w, 0, seen);
      ++it->second.first;
      if (inserted) ++seen;
    }
  }
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::vector<std::string> words;
  for (const auto& [w, _] : ranked) {
    if (words.size() + 1 >= max_size) break;
    words.push_back(w);
  }
  return from_words(words);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (!lines.empty() && lines.front() == kOovWord) lines.erase(lines.begin());
  return from_words(lines);
}

void Vocabulary::save(const std::filesystem::path& path) const { write_lines(path, words_); }

TokenId Vocabulary::lookup(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? kOovToken : it->second;
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    if (end > pos) out.push_back(lookup(text.substr(pos, end - pos)));
    pos = end;
  }
  return out;
}

std::string Vocabulary::detokenize(std::span<const TokenId> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i] < words_.size() ? words_[tokens[i]] : kOovWord;
  }
  return out;
}

ClassId JsonlSchema::label_index(std::string_view name) const {
  const auto it = std::find(label_names.begin(), label_names.end(), name);
  if (it == label_names.end()) throw InputError("unknown label '" + std::string(name) + "'");
  return static_cast<ClassId>(it - label_names.begin());
}

// ---------------------------------------------------------------------------
// JSONL

DomainDataset load_jsonl(const std::filesystem::path& path, const JsonlSchema& schema) {
  const auto lines = read_lines(path);
  DomainDataset ds;
  ds.name = path.stem().string();
  bool named = false;
  std::size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw FormatError(where + ": expected an object with a string \"text\" field");
    }
    Example x;
    x.tokens = schema.vocabulary.tokenize(j["text"].get<std::string>());
    if (x.tokens.empty()) throw FormatError(where + ": empty text");
    if (j.contains("label") && !j["label"].is_null()) {
      if (!j["label"].is_string()) throw FormatError(where + ": \"label\" must be a string or null");
      try {
        x.label = schema.label_index(j["label"].get<std::string>());
      } catch (const InputError& e) {
        throw FormatError(where + ": " + e.what());
      }
    }
    if (!named && j.contains("domain") && j["domain"].is_string()) {
      ds.name = j["domain"].get<std::string>();
      named = true;
    }
    (x.label ? ds.labeled_train : ds.unlabeled).push_back(std::move(x));
  }
  if (ds.labeled_train.empty() && ds.unlabeled.empty()) log::warn("empty corpus file " + path.string());
  return ds;
}

void write_jsonl(const std::filesystem::path& path, std::span<const Example> examples, const std::string& domain,
                 const JsonlSchema& schema) {
  std::vector<std::string> lines;
  lines.reserve(examples.size());
  for (const auto& x : examples) {
    nlohmann::json j;
    j["text"] = schema.vocabulary.detokenize(x.tokens);
    if (x.label) {
      if (*x.label >= schema.label_names.size()) throw InputError("write_jsonl: label outside schema");
      j["label"] = schema.label_names[*x.label];
    } else {
      j["label"] = nullptr;
    }
    j["domain"] = domain;
    lines.push_back(j.dump());
  }
  write_lines(path, lines);
}

// ---------------------------------------------------------------------------
// Corpus directories

void write_corpus(const std::filesystem::path& dir, std::span<const DomainDataset> domains,
                  const JsonlSchema& schema) {
  std::filesystem::create_directories(dir);
  schema.vocabulary.save(dir / "vocab.txt");
  write_lines(dir / "labels.txt", schema.label_names);
  for (const auto& ds : domains) {
    const auto sub = dir / ds.name;
    write_jsonl(sub / "train.jsonl", ds.labeled_train, ds.name, schema);
    write_jsonl(sub / "unlabeled.jsonl", ds.unlabeled, ds.name, schema);
    write_jsonl(sub / "dev.jsonl", ds.held_out, ds.name, schema);
    write_jsonl(sub / "test.jsonl", ds.test, ds.name, schema);
  }
}

JsonlSchema load_schema(const std::filesystem::path& dir) {
  JsonlSchema schema;
  schema.vocabulary = Vocabulary::load(dir / "vocab.txt");
  for (auto& l : read_lines(dir / "labels.txt")) {
    if (!l.empty()) schema.label_names.push_back(std::move(l));
  }
  if (schema.label_names.empty()) throw FormatError("no labels in " + (dir / "labels.txt").string());
  return schema;
}

DomainDataset load_domain(const std::filesystem::path& dir, const std::string& name, const JsonlSchema& schema,
                          std::uint64_t split_seed) {
  const auto sub = dir / name;
  if (std::filesystem::is_directory(sub)) {
    auto labeled = [&](const char* file) {
      auto part = load_jsonl(sub / file, schema);
      if (!part.unlabeled.empty()) throw FormatError((sub / file).string() + ": unlabeled lines in a labeled split");
      return std::move(part.labeled_train);
    };
    DomainDataset ds;
    ds.name = name;
    ds.labeled_train = labeled("train.jsonl");
    ds.held_out = labeled("dev.jsonl");
    ds.test = labeled("test.jsonl");
    if (std::filesystem::exists(sub / "unlabeled.jsonl")) {
      auto u = load_jsonl(sub / "unlabeled.jsonl", schema);
      ds.unlabeled = strip_labels(u.unlabeled);
      auto extra = strip_labels(u.labeled_train);
      ds.unlabeled.insert(ds.unlabeled.end(), extra.begin(), extra.end());
    }
    return ds;
  }
  const auto file = dir / (name + ".jsonl");
  if (!std::filesystem::exists(file)) throw InputError("domain '" + name + "' not found under " + dir.string());
  auto raw = load_jsonl(file, schema);
  auto parts = split(raw.labeled_train, {0.64, 0.16, 0.20}, split_seed);
  DomainDataset ds;
  ds.name = name;
  ds.labeled_train = std::move(parts.train);
  ds.held_out = std::move(parts.dev);
  ds.test = std::move(parts.test);
  ds.unlabeled = std::move(raw.unlabeled);
  return ds;
}

std::vector<std::string> list_domains(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  if (!std::filesystem::is_directory(dir)) throw InputError("corpus directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "train.jsonl")) {
      names.push_back(entry.path().filename().string());
    } else if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      names.push_back(entry.path().stem().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace amoc
