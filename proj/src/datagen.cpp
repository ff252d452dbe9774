#include "amoc/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amoc/error.hpp"
#include "amoc/random.hpp"

namespace amoc {
namespace {

struct VocabLayout {
  std::uint32_t shared_cues = 0;       // first shared cue token
  std::uint32_t shared_background = 0;
  std::uint32_t domain_base = 0;       // first token of domain 0's block
  std::uint32_t domain_block = 0;      // tokens per domain block
  std::uint32_t end = 0;               // one past the last used token
};

VocabLayout layout(const ShiftSpec& spec) {
  VocabLayout v;
  const std::uint32_t cues = spec.n_classes * spec.cue_tokens_per_class;
  v.shared_cues = 1;
  v.shared_background = v.shared_cues + cues;
  v.domain_base = v.shared_background + spec.shared_background;
  v.domain_block = cues + spec.domain_background;
  v.end = v.domain_base + spec.n_domains * v.domain_block;
  return v;
}

// Zipf-like weights 1/sqrt(rank) over `n` tokens, rank order permuted by rng.
std::vector<double> cue_weights(std::uint32_t n, Rng& rng) {
  std::vector<double> w(n);
  for (std::uint32_t k = 0; k < n; ++k) w[k] = 1.0 / std::sqrt(static_cast<double>(k + 1));
  rng.shuffle(std::span(w));
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

void add_block(std::vector<double>& p, std::uint32_t first, std::span<const double> weights, double mass) {
  for (std::size_t k = 0; k < weights.size(); ++k) p[first + k] += mass * weights[k];
}

void add_uniform(std::vector<double>& p, std::uint32_t first, std::uint32_t count, double mass) {
  if (count == 0) return;
  const double each = mass / static_cast<double>(count);
  for (std::uint32_t k = 0; k < count; ++k) p[first + k] += each;
}

Example sample_example(const std::vector<std::vector<double>>& cdfs, const ShiftSpec& spec, Rng& rng) {
  Example x;
  const auto label = static_cast<ClassId>(rng.index(spec.n_classes));
  const auto length = spec.min_length + static_cast<std::uint32_t>(rng.index(spec.max_length - spec.min_length + 1));
  const auto& cdf = cdfs[label];
  x.tokens.reserve(length);
  for (std::uint32_t i = 0; i < length; ++i) {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    x.tokens.push_back(static_cast<TokenId>(it - cdf.begin()));
  }
  ClassId observed = label;
  if (spec.n_classes > 1 && rng.uniform() < spec.label_noise) {
    observed = static_cast<ClassId>((label + 1 + rng.index(spec.n_classes - 1)) % spec.n_classes);
  }
  x.label = observed;
  return x;
}

}  // namespace

void ShiftSpec::validate() const {
  if (n_classes == 0) throw InputError("ShiftSpec: n_classes must be positive");
  if (n_domains == 0) throw InputError("ShiftSpec: n_domains must be positive");
  if (cue_tokens_per_class == 0) throw InputError("ShiftSpec: cue_tokens_per_class must be positive");
  if (!(shift_strength >= 0.0 && shift_strength <= 1.0)) throw InputError("ShiftSpec: shift_strength outside [0,1]");
  if (!(domain_jitter >= 0.0 && domain_jitter <= 1.0)) throw InputError("ShiftSpec: domain_jitter outside [0,1]");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw InputError("ShiftSpec: label_noise outside [0,1]");
  if (!(cue_mass > 0.0 && cue_mass <= 1.0)) throw InputError("ShiftSpec: cue_mass outside (0,1]");
  if (cue_mass < 1.0 && (shared_background == 0 || domain_background == 0)) {
    throw InputError("ShiftSpec: background blocks must be nonempty when cue_mass < 1");
  }
  if (min_length == 0 || min_length > max_length) throw InputError("ShiftSpec: invalid sentence length range");
  if (layout(*this).end > vocab_size) {
    throw InputError("ShiftSpec: vocab_size " + std::to_string(vocab_size) + " too small, layout needs " +
                     std::to_string(layout(*this).end));
  }
}

std::string synthetic_domain_name(std::size_t index) { return "d" + std::to_string(index); }

std::vector<double> domain_shift_weights(const ShiftSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "domain-jitter"));
  std::vector<double> s(spec.n_domains);
  for (auto& v : s) v = spec.shift_strength * (1.0 - spec.domain_jitter * rng.uniform());
  return s;
}

std::vector<std::vector<std::vector<double>>> token_distributions(const ShiftSpec& spec) {
  spec.validate();
  const VocabLayout v = layout(spec);
  const auto shifts = domain_shift_weights(spec);
  const std::uint32_t m = spec.cue_tokens_per_class;

  Rng shared_rng(derive_seed(spec.seed, "shared-cues"));
  std::vector<std::vector<double>> shared_weights(spec.n_classes);
  for (auto& w : shared_weights) w = cue_weights(m, shared_rng);

  std::vector<std::vector<std::vector<double>>> out(spec.n_domains);
  for (std::uint32_t d = 0; d < spec.n_domains; ++d) {
    Rng rng(derive_seed(spec.seed, "domain-cues-" + std::to_string(d)));
    const std::uint32_t block = v.domain_base + d * v.domain_block;
    out[d].resize(spec.n_classes);
    for (std::uint32_t c = 0; c < spec.n_classes; ++c) {
      const auto own_weights = cue_weights(m, rng);
      std::vector<double> p(spec.vocab_size, 0.0);
      const double s = shifts[d];
      add_block(p, v.shared_cues + c * m, shared_weights[c], (1.0 - s) * spec.cue_mass);
      add_uniform(p, v.shared_background, spec.shared_background, (1.0 - s) * (1.0 - spec.cue_mass));
      add_block(p, block + c * m, own_weights, s * spec.cue_mass);
      add_uniform(p, block + spec.n_classes * m, spec.domain_background, s * (1.0 - spec.cue_mass));
      out[d][c] = std::move(p);
    }
  }
  return out;
}

std::vector<DomainDataset> generate(const ShiftSpec& spec) {
  const auto dists = token_distributions(spec);
  std::vector<DomainDataset> out(spec.n_domains);
  for (std::uint32_t d = 0; d < spec.n_domains; ++d) {
    std::vector<std::vector<double>> cdfs(spec.n_classes);
    for (std::uint32_t c = 0; c < spec.n_classes; ++c) {
      cdfs[c].resize(spec.vocab_size);
      std::partial_sum(dists[d][c].begin(), dists[d][c].end(), cdfs[c].begin());
    }
    Rng rng(derive_seed(spec.seed, "domain-sample-" + std::to_string(d)));
    auto& ds = out[d];
    ds.name = synthetic_domain_name(d);
    auto fill = [&](std::vector<Example>& split, std::size_t n, bool keep_label) {
      split.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        Example x = sample_example(cdfs, spec, rng);
        if (!keep_label) x.label.reset();
        split.push_back(std::move(x));
      }
    };
    fill(ds.labeled_train, spec.sizes.train, true);
    fill(ds.unlabeled, spec.sizes.unlabeled, false);
    fill(ds.held_out, spec.sizes.dev, true);
    fill(ds.test, spec.sizes.test, true);
  }
  return out;
}

SplitResult split(std::span<const Example> examples, std::array<double, 3> fractions, std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw InputError("split: fractions must be nonnegative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("split: fractions must sum to 1");

  const std::size_t n = examples.size();
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = exact - std::floor(exact);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  for (; assigned > n; --assigned) --*std::max_element(counts.begin(), counts.end());

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(perm));

  SplitResult out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < counts[0]; ++i) out.train.push_back(examples[perm[pos++]]);
  for (std::size_t i = 0; i < counts[1]; ++i) out.dev.push_back(examples[perm[pos++]]);
  for (std::size_t i = 0; i < counts[2]; ++i) out.test.push_back(examples[perm[pos++]]);
  return out;
}

}  // namespace amoc
