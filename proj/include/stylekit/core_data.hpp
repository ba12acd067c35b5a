#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stylekit/error.hpp"
#include "stylekit/features.hpp"
#include "stylekit/jsonl.hpp"
#include "stylekit/random.hpp"

namespace stylekit {

enum class Split { train, test };
enum class Side { positive, negative };

inline std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }
inline std::string to_string(Side s) { return s == Side::positive ? "positive" : "negative"; }

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ParseError("split must be 'train' or 'test', got '" + s + "'");
}

inline Side parse_side(const std::string& s) {
  if (s == "positive") return Side::positive;
  if (s == "negative") return Side::negative;
  throw ParseError("side must be 'positive' or 'negative', got '" + s + "'");
}

inline Side opposite(Side s) { return s == Side::positive ? Side::negative : Side::positive; }

/// Attribute keys a generated pair may carry.
inline const std::vector<std::string>& attribute_keys() {
  static const std::vector<std::string> keys{"topic", "length", "point_of_view", "tense", "sentence_type"};
  return keys;
}

struct ParallelPair {
  std::string pair_id;
  std::string feature_id;
  std::string positive_text;
  std::string negative_text;
  std::map<std::string, std::string> attributes;
  Split split = Split::train;
  /// Unknown fields kept verbatim when loaded in lenient mode.
  json extra = json::object();

  const std::string& text(Side s) const { return s == Side::positive ? positive_text : negative_text; }

  friend bool operator==(const ParallelPair&, const ParallelPair&) = default;
};

/// Addresses one sentence of one pair.
struct SideRef {
  std::string pair_id;
  Side side = Side::positive;

  /// Sentence key used in embedding files: "<pair_id>#pos" / "<pair_id>#neg".
  std::string key() const { return sentence_key(pair_id, side); }

  static std::string sentence_key(const std::string& pair_id, Side side) {
    return pair_id + (side == Side::positive ? "#pos" : "#neg");
  }

  friend bool operator==(const SideRef&, const SideRef&) = default;
  friend auto operator<=>(const SideRef&, const SideRef&) = default;
};

struct Triplet {
  SideRef anchor;
  SideRef positive;
  SideRef negative;
  std::string feature_id;
  bool negative_paraphrases_anchor = false;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// ---------------------------------------------------------------------------
// JSON conversion

enum class Strictness { strict, lenient };

inline json to_json(const ParallelPair& p) {
  json j = p.extra.is_object() ? p.extra : json::object();
  j["pair_id"] = p.pair_id;
  j["feature_id"] = p.feature_id;
  j["positive_text"] = p.positive_text;
  j["negative_text"] = p.negative_text;
  j["attributes"] = p.attributes;
  j["split"] = to_string(p.split);
  return j;
}

inline ParallelPair pair_from_json(const json& j, Strictness mode = Strictness::strict) {
  static const std::initializer_list<const char*> known{"pair_id", "feature_id", "positive_text",
                                                        "negative_text", "attributes", "split"};
  ParallelPair p;
  if (mode == Strictness::strict) {
    field::only(j, known);
  } else {
    for (const auto& [k, v] : j.items())
      if (std::find_if(known.begin(), known.end(), [&](const char* n) { return k == n; }) == known.end())
        p.extra[k] = v;
  }
  p.pair_id = field::string(j, "pair_id");
  p.feature_id = field::string(j, "feature_id");
  p.positive_text = field::string(j, "positive_text");
  p.negative_text = field::string(j, "negative_text");
  p.split = parse_split(field::string(j, "split"));
  if (auto it = j.find("attributes"); it != j.end()) {
    if (!it->is_object()) throw ParseError("field 'attributes' must be an object");
    const auto& keys = attribute_keys();
    for (const auto& [k, v] : it->items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ParseError("unknown attribute '" + k + "'");
      if (!v.is_string()) throw ParseError("attribute '" + k + "' must be a string");
      p.attributes[k] = v.get<std::string>();
    }
  }
  if (p.pair_id.empty()) throw ParseError("pair_id is empty");
  if (p.positive_text.empty() || p.negative_text.empty()) throw ParseError("pair texts must be nonempty");
  if (p.positive_text == p.negative_text) throw ParseError("positive_text and negative_text are identical");
  return p;
}

inline json to_json(const SideRef& r) { return {{"pair_id", r.pair_id}, {"side", to_string(r.side)}}; }

inline SideRef sideref_from_json(const json& j) {
  field::only(j, {"pair_id", "side"});
  return {field::string(j, "pair_id"), parse_side(field::string(j, "side"))};
}

inline json to_json(const Triplet& t) {
  return {{"anchor", to_json(t.anchor)},
          {"positive", to_json(t.positive)},
          {"negative", to_json(t.negative)},
          {"feature_id", t.feature_id},
          {"negative_paraphrases_anchor", t.negative_paraphrases_anchor}};
}

inline Triplet triplet_from_json(const json& j, Strictness mode = Strictness::strict) {
  if (mode == Strictness::strict)
    field::only(j, {"anchor", "positive", "negative", "feature_id", "negative_paraphrases_anchor"});
  return {sideref_from_json(field::require(j, "anchor")), sideref_from_json(field::require(j, "positive")),
          sideref_from_json(field::require(j, "negative")), field::string(j, "feature_id"),
          field::boolean(j, "negative_paraphrases_anchor")};
}

// ---------------------------------------------------------------------------
// Embeddings

/// Keyed dense vectors of one uniform dimension, in insertion order.
class EmbeddingSet {
public:
  void add(std::string key, std::vector<double> values) {
    if (values.empty()) throw ValidationError("embedding '" + key + "' has dimension 0");
    for (double v : values)
      if (!std::isfinite(v)) throw ValidationError("embedding '" + key + "' has a non-finite value");
    if (dim_ == 0) dim_ = values.size();
    if (values.size() != dim_)
      throw DimensionError("embedding '" + key + "' has dim " + std::to_string(values.size()) + ", expected " +
                           std::to_string(dim_));
    if (index_.contains(key)) throw ValidationError("duplicate embedding key '" + key + "'");
    index_.emplace(key, keys_.size());
    keys_.push_back(std::move(key));
    values_.push_back(std::move(values));
  }

  bool contains(const std::string& key) const { return index_.contains(key); }

  std::span<const double> at(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw NotFoundError("missing embedding for key '" + key + "'");
    return values_[it->second];
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }
  const std::vector<double>& values(std::size_t i) const { return values_[i]; }

private:
  std::size_t dim_ = 0;
  std::vector<std::string> keys_;
  std::vector<std::vector<double>> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline EmbeddingSet load_embeddings(const std::filesystem::path& path, Strictness mode = Strictness::strict) {
  EmbeddingSet set;
  for_each_jsonl(path, [&](const json& j, std::size_t) {
    if (mode == Strictness::strict) field::only(j, {"key", "values"});
    const auto& vals = field::require(j, "values");
    if (!vals.is_array()) throw ParseError("field 'values' must be an array");
    std::vector<double> v;
    v.reserve(vals.size());
    for (const auto& x : vals) {
      if (!x.is_number()) throw ParseError("embedding values must be numbers");
      v.push_back(x.get<double>());
    }
    set.add(field::string(j, "key"), std::move(v));
  });
  return set;
}

inline std::string embeddings_to_jsonl(const EmbeddingSet& set) {
  std::string out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    out += canonical(json{{"key", set.keys()[i]}, {"values", set.values(i)}});
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pairs

/// Loads and validates a pair file; input order is kept.
inline std::vector<ParallelPair> load_pairs(const std::filesystem::path& path,
                                            const FeatureRegistry& registry = default_registry(),
                                            Strictness mode = Strictness::strict) {
  std::vector<ParallelPair> pairs;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](const json& j, std::size_t) {
    auto p = pair_from_json(j, mode);
    if (!registry.contains(p.feature_id)) throw ParseError("unknown feature_id '" + p.feature_id + "'");
    if (!seen.insert(p.pair_id).second) throw ParseError("duplicate pair_id '" + p.pair_id + "'");
    pairs.push_back(std::move(p));
  });
  return pairs;
}

inline std::string pairs_to_jsonl(const std::vector<ParallelPair>& pairs) {
  return to_jsonl(pairs, [](const ParallelPair& p) { return to_json(p); });
}

inline std::vector<ParallelPair> filter_split(const std::vector<ParallelPair>& pairs, Split split) {
  std::vector<ParallelPair> out;
  std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(out),
               [&](const ParallelPair& p) { return p.split == split; });
  return out;
}

/// Indices of pairs grouped by feature, features in lexicographic order,
/// pairs within a feature in input order.
inline std::map<std::string, std::vector<std::size_t>> group_by_feature(const std::vector<ParallelPair>& pairs) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) groups[pairs[i].feature_id].push_back(i);
  return groups;
}

struct SplitResult {
  std::vector<ParallelPair> train;
  std::vector<ParallelPair> test;
};

/// Stratified split: per feature, round-half-up(train_fraction * count) pairs
/// go to train, chosen by a seeded shuffle. Both outputs keep input order and
/// carry the matching split tag.
inline SplitResult split_pairs(const std::vector<ParallelPair>& pairs, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw PreconditionError("train_fraction must be in (0, 1)");
  std::vector<bool> in_train(pairs.size(), false);
  for (const auto& [feature, idx] : group_by_feature(pairs)) {
    const std::size_t n = idx.size();
    if (n < 2) throw PreconditionError("feature '" + feature + "' has fewer than 2 pairs");
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 0.5 + 1e-9));
    auto order = idx;
    Rng::derive(seed, "split/" + feature).shuffle(order);
    for (std::size_t k = 0; k < n_train && k < n; ++k) in_train[order[k]] = true;

    // Both sides must be nonempty: move the lexicographically last pair_id
    // across when rounding emptied one side.
    if (n_train == 0 || n_train >= n) {
      const bool from_train = n_train >= n;
      std::size_t last = idx.front();
      for (std::size_t i : idx)
        if (pairs[i].pair_id > pairs[last].pair_id) last = i;
      in_train[last] = !from_train;
    }
  }
  SplitResult out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto p = pairs[i];
    p.split = in_train[i] ? Split::train : Split::test;
    (in_train[i] ? out.train : out.test).push_back(std::move(p));
  }
  return out;
}

/// Pair lookup by id.
class PairIndex {
public:
  explicit PairIndex(const std::vector<ParallelPair>& pairs) : pairs_(&pairs) {
    for (std::size_t i = 0; i < pairs.size(); ++i) index_.emplace(pairs[i].pair_id, i);
  }

  const ParallelPair* find(const std::string& pair_id) const {
    auto it = index_.find(pair_id);
    return it == index_.end() ? nullptr : &(*pairs_)[it->second];
  }

  const ParallelPair& at(const std::string& pair_id) const {
    if (auto* p = find(pair_id)) return *p;
    throw NotFoundError("dangling reference to pair_id '" + pair_id + "'");
  }

  const std::string& text(const SideRef& r) const { return at(r.pair_id).text(r.side); }

private:
  const std::vector<ParallelPair>* pairs_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace stylekit
