#include <algorithm>
#include <cstdint>
#include <set>

#include "amoc/error.hpp"
#include "amoc/pipeline.hpp"
#include "amoc/random.hpp"

namespace amoc {
namespace {

constexpr std::size_t kFoldTrials = 256;

using Edge = std::pair<std::size_t, std::size_t>;

struct Partition {
  std::vector<std::vector<Edge>> folds;
  std::size_t min_train = 0;
  std::size_t total_train = 0;
};

std::size_t train_pairs_for(const std::vector<Edge>& fold, std::size_t n_domains) {
  std::set<std::size_t> used;
  for (const auto& [a, b] : fold) {
    used.insert(a);
    used.insert(b);
  }
  const std::size_t rest = n_domains - used.size();
  return rest * (rest > 0 ? rest - 1 : 0);
}

// Greedy fill: each fold repeatedly takes the remaining edge that adds the
// fewest new domains, scanning edges in the shuffled order.
Partition greedy_partition(std::vector<Edge> edges, std::size_t n_domains, std::size_t fold_count) {
  Partition p;
  const std::size_t base = edges.size() / fold_count;
  const std::size_t extra = edges.size() % fold_count;
  for (std::size_t f = 0; f < fold_count; ++f) {
    const std::size_t want = base + (f < extra ? 1 : 0);
    std::vector<Edge> fold;
    std::set<std::size_t> used;
    for (std::size_t k = 0; k < want; ++k) {
      std::size_t best = 0;
      std::size_t best_new = 3;
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const std::size_t added = (used.contains(edges[e].first) ? 0 : 1) + (used.contains(edges[e].second) ? 0 : 1);
        if (added < best_new) {
          best = e;
          best_new = added;
        }
      }
      used.insert(edges[best].first);
      used.insert(edges[best].second);
      fold.push_back(edges[best]);
      edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(best));
    }
    p.folds.push_back(std::move(fold));
  }
  p.min_train = SIZE_MAX;
  for (const auto& fold : p.folds) {
    const auto t = train_pairs_for(fold, n_domains);
    p.min_train = std::min(p.min_train, t);
    p.total_train += t;
  }
  return p;
}

}  // namespace

std::vector<PairFold> make_pair_folds(std::span<const std::string> domains, std::size_t fold_count,
                                      std::uint64_t seed) {
  std::vector<std::string> names(domains.begin(), domains.end());
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) throw InputError("folds: duplicate domain");
  if (names.size() < 2) throw InputError("folds: at least two domains are required");
  if (fold_count < 2) throw InputError("folds: fold count must be at least 2");
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < names.size(); ++a) {
    for (std::size_t b = a + 1; b < names.size(); ++b) edges.emplace_back(a, b);
  }
  if (fold_count > edges.size()) {
    throw InputError("folds: " + std::to_string(fold_count) + " folds requested but only " +
                     std::to_string(edges.size()) + " unordered domain pairs exist");
  }

  Partition best;
  bool have = false;
  for (std::size_t trial = 0; trial < kFoldTrials; ++trial) {
    auto order = edges;
    Rng rng(derive_seed(seed, trial));
    rng.shuffle(std::span(order));
    auto p = greedy_partition(std::move(order), names.size(), fold_count);
    if (!have || p.min_train > best.min_train ||
        (p.min_train == best.min_train && p.total_train > best.total_train)) {
      best = std::move(p);
      have = true;
    }
  }

  std::vector<PairFold> out;
  for (const auto& fold : best.folds) {
    PairFold pf;
    std::set<std::size_t> used;
    for (const auto& [a, b] : fold) {
      pf.test_pairs.push_back({names[a], names[b]});
      pf.test_pairs.push_back({names[b], names[a]});
      used.insert(a);
      used.insert(b);
    }
    for (std::size_t a = 0; a < names.size(); ++a) {
      for (std::size_t b = 0; b < names.size(); ++b) {
        if (a != b && !used.contains(a) && !used.contains(b)) pf.train_pairs.push_back({names[a], names[b]});
      }
    }
    std::sort(pf.test_pairs.begin(), pf.test_pairs.end());
    out.push_back(std::move(pf));
  }
  return out;
}

}  // namespace amoc
