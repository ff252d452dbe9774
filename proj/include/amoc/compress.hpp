#pragma once

// Candidate construction: remove a layer subset from a trained base model,
// reconnect the surviving runs in order, freeze everything except the
// junction layers (plus the embedding when layer 1 is gone) and the decoder,
// then fine-tune briefly.

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "amoc/netcore.hpp"
#include "amoc/train.hpp"

namespace amoc {

// Sorted, unique, nonempty set of 1-based layer indices to remove.
class CandidateSpec {
 public:
  CandidateSpec() = default;
  // Throws InputError unless removed is a nonempty proper subset of {1..depth}.
  CandidateSpec(std::vector<std::uint32_t> removed, std::uint32_t depth);

  std::span<const std::uint32_t> removed() const { return removed_; }
  std::size_t size() const { return removed_.size(); }
  bool removes(std::uint32_t layer) const;
  // Surviving original layers in order.
  std::vector<std::uint32_t> surviving(std::uint32_t depth) const;

  // "[2,3,7]"
  std::string to_json() const;
  static CandidateSpec parse(const std::string& json, std::uint32_t depth);

  auto operator<=>(const CandidateSpec&) const = default;

 private:
  std::vector<std::uint32_t> removed_;
};

struct ReconnectionPlan {
  // Maximal runs of consecutive surviving layers, in order.
  std::vector<std::vector<std::uint32_t>> runs;
  // (last layer of run i, first layer of run i+1).
  std::vector<std::pair<std::uint32_t, std::uint32_t>> junctions;
  // Layers whose weights are fine-tuned. The decoder is always trainable.
  std::set<std::uint32_t> unfrozen;
  // Layer 1 removed: the embedding feeds the first surviving layer and is trained.
  bool unfreeze_embedding = false;
  // The top layer was removed: the last surviving layer now feeds the decoder
  // directly and is unfrozen.
  bool decoder_reconnected = false;

  bool operator==(const ReconnectionPlan&) const = default;
};

ReconnectionPlan plan_reconnection(const CandidateSpec& spec, std::uint32_t depth);

// Copies surviving tensors bit-for-bit from base, re-initializes the layer
// attention uniformly over the surviving layers and sets the freeze mask from
// the plan. Throws InternalError if plan does not describe spec, InputError if
// base is not a full-depth model.
LayerStackModel build_candidate(const LayerStackModel& base, const CandidateSpec& spec, const ReconnectionPlan& plan);

inline constexpr std::size_t kDefaultCandidateEpochs = 1;
// Longer fine-tuning used for tagging-style tasks.
inline constexpr std::size_t kTaggingCandidateEpochs = 10;

// Trains the unfrozen tensors with fresh optimizer state.
LayerStackModel finetune_candidate(LayerStackModel candidate, std::span<const Example> labeled_source,
                                   const TrainConfig& config);

std::uint64_t binomial(std::uint32_t n, std::uint32_t k);

// Per removal size: every subset when C(depth, size) <= count_per_size,
// otherwise count_per_size distinct seeded random subsets. Sizes keep their
// input order; duplicates across sizes are not possible since sizes differ.
std::vector<CandidateSpec> sample_candidate_specs(std::uint32_t depth, std::span<const std::uint32_t> sizes,
                                                  std::size_t count_per_size, std::uint64_t seed);

}  // namespace amoc
