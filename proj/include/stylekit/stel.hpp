#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stylekit/core_data.hpp"
#include "stylekit/error.hpp"
#include "stylekit/random.hpp"
#include "stylekit/vector_math.hpp"

namespace stylekit {

enum class StelMode { stel, stel_or_content };

inline StelMode parse_stel_mode(const std::string& s) {
  if (s == "stel") return StelMode::stel;
  if (s == "stel_or_content") return StelMode::stel_or_content;
  throw PreconditionError("unknown STEL mode '" + s + "'");
}

inline std::string to_string(StelMode m) { return m == StelMode::stel ? "stel" : "stel_or_content"; }

/// One forced-choice instance over sentence keys.
///
/// stel: anchors A1, A2 and candidates S1, S2; `correct` is 0 when the
/// parallel alignment (A1-S1, A2-S2) is right and 1 when the crossed one is.
/// stel_or_content: one anchor; `correct` is the index of the candidate that
/// shares the anchor's style. The other candidate paraphrases the anchor.
struct StelInstance {
  std::string instance_id;
  StelMode mode = StelMode::stel;
  std::string feature_id;
  std::vector<std::string> anchors;
  std::array<std::string, 2> candidates;
  int correct = 0;

  friend bool operator==(const StelInstance&, const StelInstance&) = default;

  void validate() const {
    const std::size_t want = mode == StelMode::stel ? 2 : 1;
    if (anchors.size() != want)
      throw ValidationError("instance '" + instance_id + "': " + to_string(mode) + " needs " + std::to_string(want) +
                            " anchors");
    if (candidates[0] == candidates[1]) throw ValidationError("instance '" + instance_id + "': candidates are equal");
    if (correct != 0 && correct != 1) throw ValidationError("instance '" + instance_id + "': bad correct label");
  }
};

inline json to_json(const StelInstance& s) {
  json correct = s.mode == StelMode::stel ? json(s.correct == 0 ? "parallel" : "crossed") : json(s.correct);
  return {{"instance_id", s.instance_id}, {"mode", to_string(s.mode)}, {"feature_id", s.feature_id},
          {"anchors", s.anchors},         {"candidates", s.candidates}, {"correct", correct}};
}

inline StelInstance stel_instance_from_json(const json& j) {
  field::only(j, {"instance_id", "mode", "feature_id", "anchors", "candidates", "correct"});
  StelInstance s;
  s.instance_id = field::string(j, "instance_id");
  s.mode = parse_stel_mode(field::string(j, "mode"));
  s.feature_id = field::string(j, "feature_id");
  s.anchors = field::require(j, "anchors").get<std::vector<std::string>>();
  const auto cands = field::require(j, "candidates").get<std::vector<std::string>>();
  if (cands.size() != 2) throw ParseError("candidates must have exactly 2 entries");
  s.candidates = {cands[0], cands[1]};
  const auto& c = field::require(j, "correct");
  if (s.mode == StelMode::stel) {
    const auto label = c.get<std::string>();
    if (label != "parallel" && label != "crossed") throw ParseError("stel correct must be parallel|crossed");
    s.correct = label == "parallel" ? 0 : 1;
  } else {
    s.correct = c.get<int>();
  }
  s.validate();
  return s;
}

struct StelBuildConfig {
  StelMode mode = StelMode::stel;
  std::size_t cap = 0;  // per-feature instance cap, 0 = no cap
  bool symmetric = true;
  std::uint64_t seed = 0;
};

/// Builds instances within each feature from pairs (typically the test
/// split). Per feature, every ordered pair (i, j), i != j, is visited once in
/// a seeded order with a seeded orientation; with `symmetric` a second pass
/// emits each instance with its candidates swapped. The cap truncates that
/// list, so a cap of n(n-1) uses every ordered pair exactly once.
inline std::vector<StelInstance> build_stel_tasks(const std::vector<ParallelPair>& pairs,
                                                  const StelBuildConfig& config) {
  std::vector<StelInstance> out;
  const std::string mode_tag = to_string(config.mode);
  for (const auto& [feature, idx] : group_by_feature(pairs)) {
    const std::size_t n = idx.size();
    if (n < 2) throw PreconditionError("feature '" + feature + "' has fewer than 2 pairs");
    std::vector<std::pair<std::size_t, std::size_t>> ordered;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) ordered.emplace_back(i, j);
    Rng rng = Rng::derive(config.seed, "stel/" + mode_tag + "/" + feature);
    rng.shuffle(ordered);
    std::vector<bool> flipped(ordered.size());
    for (std::size_t k = 0; k < ordered.size(); ++k) flipped[k] = rng.coin();

    auto make = [&](std::size_t i, std::size_t j, bool swap) {
      const auto& pi = pairs[idx[i]];
      const auto& pj = pairs[idx[j]];
      StelInstance s;
      s.mode = config.mode;
      s.feature_id = feature;
      s.instance_id = feature + ":" + mode_tag + ":" + pi.pair_id + ":" + pj.pair_id + (swap ? ":x" : ":o");
      if (config.mode == StelMode::stel) {
        s.anchors = {SideRef::sentence_key(pi.pair_id, Side::positive),
                     SideRef::sentence_key(pi.pair_id, Side::negative)};
        s.candidates = {SideRef::sentence_key(pj.pair_id, Side::positive),
                        SideRef::sentence_key(pj.pair_id, Side::negative)};
      } else {
        s.anchors = {SideRef::sentence_key(pi.pair_id, Side::positive)};
        s.candidates = {SideRef::sentence_key(pj.pair_id, Side::positive),
                        SideRef::sentence_key(pi.pair_id, Side::negative)};
      }
      s.correct = 0;
      if (swap) {
        std::swap(s.candidates[0], s.candidates[1]);
        s.correct = 1;
      }
      return s;
    };

    std::vector<StelInstance> feature_out;
    for (std::size_t k = 0; k < ordered.size(); ++k)
      feature_out.push_back(make(ordered[k].first, ordered[k].second, flipped[k]));
    if (config.symmetric)
      for (std::size_t k = 0; k < ordered.size(); ++k)
        feature_out.push_back(make(ordered[k].first, ordered[k].second, !flipped[k]));
    if (config.cap > 0 && feature_out.size() > config.cap) feature_out.resize(config.cap);
    for (auto& s : feature_out) out.push_back(std::move(s));
  }
  return out;
}

struct StelReport {
  std::size_t n = 0;
  double overall_accuracy = 0.0;
  std::map<std::string, double> per_feature_accuracy;
  std::map<std::string, std::size_t> per_feature_n;
  std::vector<double> instance_scores;
};

/// 1 for a win, 0.5 for an exact tie, 0 for a loss.
inline double stel_instance_score(const StelInstance& s, const EmbeddingSet& emb) {
  s.validate();
  auto cos = [&](const std::string& x, const std::string& y) { return cosine(emb.at(x), emb.at(y)); };
  double right, wrong;
  if (s.mode == StelMode::stel) {
    const double parallel = cos(s.anchors[0], s.candidates[0]) + cos(s.anchors[1], s.candidates[1]);
    const double crossed = cos(s.anchors[0], s.candidates[1]) + cos(s.anchors[1], s.candidates[0]);
    right = s.correct == 0 ? parallel : crossed;
    wrong = s.correct == 0 ? crossed : parallel;
  } else {
    right = cos(s.anchors[0], s.candidates[s.correct]);
    wrong = cos(s.anchors[0], s.candidates[1 - s.correct]);
  }
  return right > wrong ? 1.0 : (right == wrong ? 0.5 : 0.0);
}

inline StelReport score_stel(const std::vector<StelInstance>& instances, const EmbeddingSet& embeddings) {
  StelReport r;
  r.n = instances.size();
  std::map<std::string, double> sums;
  double total = 0.0;
  for (const auto& s : instances) {
    const double v = stel_instance_score(s, embeddings);
    r.instance_scores.push_back(v);
    total += v;
    sums[s.feature_id] += v;
    ++r.per_feature_n[s.feature_id];
  }
  r.overall_accuracy = r.n ? total / static_cast<double>(r.n) : 0.0;
  for (const auto& [f, s] : sums) r.per_feature_accuracy[f] = s / static_cast<double>(r.per_feature_n[f]);
  return r;
}

inline json to_json(const StelReport& r) {
  return {{"n", r.n},
          {"overall_accuracy", r.overall_accuracy},
          {"per_feature_accuracy", r.per_feature_accuracy},
          {"per_feature_n", r.per_feature_n}};
}

/// Mean squared difference of per-feature scores over the shared keys.
inline double probe_mse(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  if (a.empty()) throw PreconditionError("probe_mse: empty score lists");
  if (a.size() != b.size()) throw PreconditionError("probe_mse: feature key sets differ");
  double s = 0.0;
  for (const auto& [k, va] : a) {
    auto it = b.find(k);
    if (it == b.end()) throw PreconditionError("probe_mse: feature '" + k + "' missing from second list");
    s += (va - it->second) * (va - it->second);
  }
  return s / static_cast<double>(a.size());
}

inline std::vector<StelInstance> load_stel_instances(const std::filesystem::path& path) {
  std::vector<StelInstance> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(stel_instance_from_json(j)); });
  return out;
}

}  // namespace stylekit
