#pragma once

#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylekit/core_data.hpp"
#include "stylekit/error.hpp"
#include "stylekit/features.hpp"
#include "stylekit/random.hpp"

namespace stylekit {

enum class Polarity { positive_side_only, both_sides };

inline Polarity parse_polarity(const std::string& s) {
  if (s == "positive_side_only") return Polarity::positive_side_only;
  if (s == "both_sides") return Polarity::both_sides;
  throw PreconditionError("unknown polarity '" + s + "'");
}

inline std::string to_string(Polarity p) {
  return p == Polarity::positive_side_only ? "positive_side_only" : "both_sides";
}

struct SamplerConfig {
  std::size_t per_feature_count = 8000;
  double paraphrase_fraction = 0.5;
  Polarity polarity = Polarity::positive_side_only;
  std::set<std::string> exclude_features;
  std::uint64_t seed = 0;

  /// Triplets per feature whose negative paraphrases the anchor.
  std::size_t paraphrase_count() const {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(per_feature_count) * paraphrase_fraction - 1e-9));
  }

  void validate(const FeatureRegistry& registry) const {
    if (per_feature_count == 0) throw PreconditionError("per_feature_count must be positive");
    if (!(paraphrase_fraction >= 0.0 && paraphrase_fraction <= 1.0))
      throw PreconditionError("paraphrase_fraction must be in [0, 1]");
    for (const auto& id : exclude_features)
      if (!registry.contains(id)) throw PreconditionError("excluded feature '" + id + "' is not in the registry");
  }
};

// ---------------------------------------------------------------------------
// Ablation presets

enum class AblationPreset { in_domain, out_of_domain, out_of_distribution };

inline AblationPreset parse_ablation_preset(const std::string& s) {
  if (s == "in_domain") return AblationPreset::in_domain;
  if (s == "out_of_domain") return AblationPreset::out_of_domain;
  if (s == "out_of_distribution") return AblationPreset::out_of_distribution;
  throw PreconditionError("unknown ablation preset '" + s + "'");
}

/// Features removed from training for each generalization condition.
/// Out-of-domain drops the features covered by the natural STEL benchmark
/// (emoji and text emoticons are separate features here, hence 6);
/// out-of-distribution also drops everything closely related to them.
inline std::set<std::string> ablation_preset(AblationPreset preset) {
  switch (preset) {
    case AblationPreset::in_domain:
      return {};
    case AblationPreset::out_of_domain:
      return {"formal_tone", "contractions", "numerical_substitution", "complex_sentence", "text_emojis", "emojis"};
    case AblationPreset::out_of_distribution:
      return {"formal_tone",         "polite_tone",      "fluency",         "only_uppercase",
              "only_lowercase",      "humor",            "sarcasm",         "contractions",
              "numerical_substitution", "numerical_digits", "complex_sentence", "long_words",
              "text_emojis",         "emojis",           "misspelled_words"};
  }
  return {};
}

inline std::set<std::string> ablation_preset(const std::string& name) {
  return ablation_preset(parse_ablation_preset(name));
}

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

/// k distinct integers from [0, space) in draw order (sparse Fisher-Yates).
inline std::vector<std::uint64_t> draw_without_replacement(Rng& rng, std::uint64_t space, std::uint64_t k) {
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;
  auto value_at = [&](std::uint64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::vector<std::uint64_t> out;
  out.reserve(k);
  for (std::uint64_t t = 0; t < k; ++t) {
    const std::uint64_t r = t + rng.below(space - t);
    const std::uint64_t vr = value_at(r);
    swapped[r] = value_at(t);
    out.push_back(vr);
  }
  return out;
}

}  // namespace detail

/// Number of admissible triplets per negative class for a feature with `n` pairs.
inline std::uint64_t triplet_class_space(std::size_t n, Polarity polarity) {
  const std::uint64_t sides = polarity == Polarity::both_sides ? 2 : 1;
  return n < 2 ? 0 : sides * n * (n - 1);
}

/// Builds per-feature contrastive triplets. Anchor and positive share a side
/// (style) but come from different pairs (content); the negative is the
/// opposite side of the anchor's pair (a paraphrase of the anchor) for an
/// exact paraphrase_count() of triplets, and of the positive's pair for the
/// rest. Each class is drawn uniformly without replacement.
inline std::vector<Triplet> sample_triplets(const std::vector<ParallelPair>& pairs, const SamplerConfig& config,
                                            const FeatureRegistry& registry = default_registry()) {
  config.validate(registry);
  const std::size_t n_para = config.paraphrase_count();
  const std::size_t n_other = config.per_feature_count - n_para;

  std::vector<Triplet> out;
  for (const auto& [feature, idx] : group_by_feature(pairs)) {
    if (config.exclude_features.contains(feature)) continue;
    const std::size_t n = idx.size();
    if (n < 2) throw PreconditionError("feature '" + feature + "' has fewer than 2 pairs");
    const std::uint64_t space = triplet_class_space(n, config.polarity);
    if (n_para > space || n_other > space)
      throw InfeasibleError("feature '" + feature + "': requested " + std::to_string(config.per_feature_count) +
                            " triplets but only " + std::to_string(space) + " admissible per negative class");

    const std::uint64_t per_side = static_cast<std::uint64_t>(n) * (n - 1);
    auto decode = [&](std::uint64_t code, bool paraphrase) {
      const Side side = code / per_side == 0 ? Side::positive : Side::negative;
      const std::uint64_t rem = code % per_side;
      const std::size_t i = rem / (n - 1);
      std::size_t j = rem % (n - 1);
      if (j >= i) ++j;
      const auto& a = pairs[idx[i]];
      const auto& p = pairs[idx[j]];
      const auto& neg_source = paraphrase ? a : p;
      return Triplet{{a.pair_id, side}, {p.pair_id, side}, {neg_source.pair_id, opposite(side)}, feature, paraphrase};
    };

    Rng rng = Rng::derive(config.seed, "sample/" + feature);
    for (auto code : detail::draw_without_replacement(rng, space, n_para)) out.push_back(decode(code, true));
    for (auto code : detail::draw_without_replacement(rng, space, n_other)) out.push_back(decode(code, false));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

struct TripletViolation {
  std::size_t index;
  std::string rule;
};

struct ValidationReport {
  std::size_t n = 0;
  std::vector<TripletViolation> violations;
  std::map<std::string, std::size_t> violations_per_rule;
  double paraphrase_fraction_observed = 0.0;

  bool ok() const { return violations.empty(); }
};

/// Checks every triplet invariant. Rules: style-polarity, content-distinct,
/// negative-style, negative-source, paraphrase-flag, feature-consistency,
/// duplicate. Dangling references throw.
inline ValidationReport validate_triplets(const std::vector<Triplet>& triplets,
                                          const std::vector<ParallelPair>& pairs) {
  const PairIndex index(pairs);
  ValidationReport report;
  report.n = triplets.size();
  for (const auto& rule : {"style-polarity", "content-distinct", "negative-style", "negative-source",
                           "paraphrase-flag", "feature-consistency", "duplicate"})
    report.violations_per_rule[rule] = 0;

  std::set<std::tuple<SideRef, SideRef, SideRef>> seen;
  std::size_t paraphrases = 0;
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    const auto& a = index.at(t.anchor.pair_id);
    const auto& p = index.at(t.positive.pair_id);
    const auto& n = index.at(t.negative.pair_id);
    auto flag = [&](const char* rule) {
      report.violations.push_back({k, rule});
      ++report.violations_per_rule[rule];
    };
    if (t.anchor.side != t.positive.side) flag("style-polarity");
    if (t.anchor.pair_id == t.positive.pair_id) flag("content-distinct");
    if (t.negative.side == t.anchor.side) flag("negative-style");
    if (t.negative.pair_id != t.anchor.pair_id && t.negative.pair_id != t.positive.pair_id) flag("negative-source");
    if (t.negative_paraphrases_anchor != (t.negative.pair_id == t.anchor.pair_id)) flag("paraphrase-flag");
    if (a.feature_id != t.feature_id || p.feature_id != t.feature_id || n.feature_id != t.feature_id)
      flag("feature-consistency");
    if (!seen.emplace(t.anchor, t.positive, t.negative).second) flag("duplicate");
    if (t.negative_paraphrases_anchor) ++paraphrases;
  }
  report.paraphrase_fraction_observed =
      triplets.empty() ? 0.0 : static_cast<double>(paraphrases) / static_cast<double>(triplets.size());
  return report;
}

inline json to_json(const ValidationReport& r) {
  json v = json::array();
  for (const auto& x : r.violations) v.push_back({{"index", x.index}, {"rule", x.rule}});
  return {{"n", r.n},
          {"violation_count", r.violations.size()},
          {"violations_per_rule", r.violations_per_rule},
          {"violations", v},
          {"paraphrase_fraction_observed", r.paraphrase_fraction_observed}};
}

inline std::vector<Triplet> load_triplets(const std::filesystem::path& path, Strictness mode = Strictness::strict) {
  std::vector<Triplet> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(triplet_from_json(j, mode)); });
  return out;
}

inline std::string triplets_to_jsonl(const std::vector<Triplet>& triplets) {
  return to_jsonl(triplets, [](const Triplet& t) { return to_json(t); });
}

}  // namespace stylekit
