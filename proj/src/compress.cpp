#include "amoc/compress.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "amoc/error.hpp"
#include "amoc/random.hpp"

namespace amoc {

CandidateSpec::CandidateSpec(std::vector<std::uint32_t> removed, std::uint32_t depth) : removed_(std::move(removed)) {
  std::sort(removed_.begin(), removed_.end());
  if (removed_.empty()) throw InputError("candidate spec must remove at least one layer");
  if (std::adjacent_find(removed_.begin(), removed_.end()) != removed_.end()) {
    throw InputError("candidate spec has duplicate layers");
  }
  if (removed_.front() < 1 || removed_.back() > depth) {
    throw InputError("candidate spec layer outside [1, " + std::to_string(depth) + "]");
  }
  if (removed_.size() >= depth) throw InputError("candidate spec cannot remove every layer");
}

bool CandidateSpec::removes(std::uint32_t layer) const {
  return std::binary_search(removed_.begin(), removed_.end(), layer);
}

std::vector<std::uint32_t> CandidateSpec::surviving(std::uint32_t depth) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t l = 1; l <= depth; ++l) {
    if (!removes(l)) out.push_back(l);
  }
  return out;
}

std::string CandidateSpec::to_json() const {
  std::string out = "[";
  for (std::size_t i = 0; i < removed_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(removed_[i]);
  }
  return out + "]";
}

CandidateSpec CandidateSpec::parse(const std::string& json, std::uint32_t depth) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error&) {
    throw InputError("candidate spec '" + json + "' is not a JSON array");
  }
  if (!j.is_array()) throw InputError("candidate spec '" + json + "' is not a JSON array");
  std::vector<std::uint32_t> removed;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 1) throw InputError("candidate spec '" + json + "' has a bad index");
    removed.push_back(v.get<std::uint32_t>());
  }
  return CandidateSpec(std::move(removed), depth);
}

ReconnectionPlan plan_reconnection(const CandidateSpec& spec, std::uint32_t depth) {
  // Re-validate against this depth; a spec built for a larger model is rejected.
  const CandidateSpec checked(std::vector<std::uint32_t>(spec.removed().begin(), spec.removed().end()), depth);
  ReconnectionPlan plan;
  for (std::uint32_t l = 1; l <= depth; ++l) {
    if (checked.removes(l)) continue;
    if (plan.runs.empty() || plan.runs.back().back() + 1 != l) plan.runs.emplace_back();
    plan.runs.back().push_back(l);
  }
  for (std::size_t i = 0; i + 1 < plan.runs.size(); ++i) {
    const auto from = plan.runs[i].back();
    plan.junctions.emplace_back(from, plan.runs[i + 1].front());
    plan.unfrozen.insert(from);
  }
  plan.unfreeze_embedding = checked.removes(1);
  plan.decoder_reconnected = checked.removes(depth);
  if (plan.decoder_reconnected) plan.unfrozen.insert(plan.runs.back().back());
  return plan;
}

LayerStackModel build_candidate(const LayerStackModel& base, const CandidateSpec& spec, const ReconnectionPlan& plan) {
  const std::uint32_t depth = base.dims().depth;
  if (base.depth() != depth) throw InputError("build_candidate: base model is already compressed");
  if (plan != plan_reconnection(spec, depth)) throw InternalError("build_candidate: plan does not match spec");

  const auto survivors = spec.surviving(depth);
  LayerStackModel candidate(base.dims(), survivors);
  candidate.embedding() = base.embedding();
  for (std::size_t slot = 0; slot < survivors.size(); ++slot) {
    const std::size_t base_slot = survivors[slot] - 1;
    candidate.weight(slot) = base.weight(base_slot);
    candidate.bias(slot) = base.bias(base_slot);
  }
  // Zero scores give uniform attention over the surviving layers.
  std::fill(candidate.attention().data.begin(), candidate.attention().data.end(), 0.0);
  candidate.head_weight() = base.head_weight();
  candidate.head_bias() = base.head_bias();

  candidate.freeze_all();
  for (std::size_t slot = 0; slot < survivors.size(); ++slot) {
    if (plan.unfrozen.contains(survivors[slot])) {
      candidate.set_frozen(candidate.weight_index(slot), false);
      candidate.set_frozen(candidate.bias_index(slot), false);
    }
  }
  if (plan.unfreeze_embedding) candidate.set_frozen(LayerStackModel::embedding_index(), false);
  candidate.set_frozen(candidate.attention_index(), false);
  candidate.set_frozen(candidate.head_weight_index(), false);
  candidate.set_frozen(candidate.head_bias_index(), false);
  return candidate;
}

LayerStackModel finetune_candidate(LayerStackModel candidate, std::span<const Example> labeled_source,
                                   const TrainConfig& config) {
  if (config.epochs == 0) return candidate;
  return train(std::move(candidate), labeled_source, config).model;
}

std::uint64_t binomial(std::uint32_t n, std::uint32_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint32_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

namespace {

// All k-subsets of {1..n} in lexicographic order.
std::vector<std::vector<std::uint32_t>> all_subsets(std::uint32_t n, std::uint32_t k) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> cur(k);
  for (std::uint32_t i = 0; i < k; ++i) cur[i] = i + 1;
  while (true) {
    out.push_back(cur);
    std::int64_t i = static_cast<std::int64_t>(k) - 1;
    while (i >= 0 && cur[i] == n - k + 1 + static_cast<std::uint32_t>(i)) --i;
    if (i < 0) break;
    ++cur[i];
    for (auto j = static_cast<std::size_t>(i) + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

}  // namespace

std::vector<CandidateSpec> sample_candidate_specs(std::uint32_t depth, std::span<const std::uint32_t> sizes,
                                                  std::size_t count_per_size, std::uint64_t seed) {
  std::vector<CandidateSpec> out;
  std::set<std::uint32_t> seen_sizes;
  for (const auto size : sizes) {
    if (size == 0 || size >= depth) {
      throw InputError("removal size " + std::to_string(size) + " impossible for depth " + std::to_string(depth));
    }
    if (!seen_sizes.insert(size).second) throw InputError("duplicate removal size " + std::to_string(size));
    if (binomial(depth, size) <= count_per_size) {
      for (auto& s : all_subsets(depth, size)) out.emplace_back(std::move(s), depth);
      continue;
    }
    Rng rng(derive_seed(seed, "candidate-size-" + std::to_string(size)));
    std::set<std::vector<std::uint32_t>> drawn;
    std::vector<std::uint32_t> pool(depth);
    while (drawn.size() < count_per_size) {
      for (std::uint32_t i = 0; i < depth; ++i) pool[i] = i + 1;
      // Partial Fisher-Yates: the first `size` entries are a uniform subset.
      for (std::uint32_t i = 0; i < size; ++i) {
        const auto j = i + static_cast<std::uint32_t>(rng.index(depth - i));
        std::swap(pool[i], pool[j]);
      }
      std::vector<std::uint32_t> subset(pool.begin(), pool.begin() + size);
      std::sort(subset.begin(), subset.end());
      if (drawn.insert(subset).second) out.emplace_back(std::move(subset), depth);
    }
  }
  return out;
}

}  // namespace amoc
