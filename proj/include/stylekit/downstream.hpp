#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stylekit/core_data.hpp"
#include "stylekit/error.hpp"
#include "stylekit/vector_math.hpp"

namespace stylekit {

// ---------------------------------------------------------------------------
// Authorship verification

struct AvInstance {
  std::string doc1_key;
  std::string doc2_key;
  bool label = false;  // same author
  /// Optional grouping (e.g. a shared-task year) for macro averaging.
  std::optional<std::string> group;
};

inline AvInstance av_instance_from_json(const json& j) {
  field::only(j, {"doc1_key", "doc2_key", "label", "group"});
  AvInstance a{field::string(j, "doc1_key"), field::string(j, "doc2_key"), field::boolean(j, "label"), std::nullopt};
  if (j.contains("group")) a.group = field::string(j, "group");
  if (a.doc1_key == a.doc2_key) throw ParseError("AV instance keys must differ");
  return a;
}

struct ScoredLabel {
  double score;
  bool label;
};

inline std::vector<ScoredLabel> av_similarities(const std::vector<AvInstance>& instances,
                                                const EmbeddingSet& embeddings) {
  std::vector<ScoredLabel> out;
  out.reserve(instances.size());
  for (const auto& a : instances) out.push_back({cosine(embeddings.at(a.doc1_key), embeddings.at(a.doc2_key)), a.label});
  return out;
}

/// Mann-Whitney ROC-AUC with average ranks for ties:
/// P(score_pos > score_neg) + 0.5 P(score_pos == score_neg).
inline double roc_auc(std::vector<ScoredLabel> scored) {
  std::size_t n_pos = 0;
  for (const auto& s : scored) n_pos += s.label ? 1 : 0;
  const std::size_t n_neg = scored.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw PreconditionError("roc_auc needs both positive and negative labels");

  std::sort(scored.begin(), scored.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
  // Ranks are 1-based; a tie block [i, j) shares rank (i + 1 + j) / 2. Sums
  // are kept doubled so every quantity stays an exact integer.
  std::uint64_t twice_rank_sum_pos = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].score == scored[i].score) ++j;
    const std::uint64_t twice_rank = i + 1 + j;
    for (std::size_t k = i; k < j; ++k)
      if (scored[k].label) twice_rank_sum_pos += twice_rank;
    i = j;
  }
  const double u = (static_cast<double>(twice_rank_sum_pos) - static_cast<double>(n_pos * (n_pos + 1))) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct AvReport {
  std::size_t n = 0;
  double pooled_auc = 0.0;
  std::map<std::string, double> per_group_auc;
  std::optional<double> macro_auc;  // mean of per-group AUCs when groups are present
};

inline AvReport evaluate_av(const std::vector<AvInstance>& instances, const EmbeddingSet& embeddings) {
  const auto scored = av_similarities(instances, embeddings);
  AvReport r;
  r.n = scored.size();
  r.pooled_auc = roc_auc(scored);
  std::map<std::string, std::vector<ScoredLabel>> groups;
  for (std::size_t i = 0; i < instances.size(); ++i)
    if (instances[i].group) groups[*instances[i].group].push_back(scored[i]);
  if (!groups.empty()) {
    double sum = 0.0;
    for (const auto& [g, s] : groups) sum += r.per_group_auc[g] = roc_auc(s);
    r.macro_auc = sum / static_cast<double>(groups.size());
  }
  return r;
}

inline json to_json(const AvReport& r) {
  json j{{"metric", "roc_auc"}, {"n", r.n}, {"pooled_auc", r.pooled_auc}, {"per_group_auc", r.per_group_auc}};
  j["macro_auc"] = r.macro_auc ? json(*r.macro_auc) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Style-transfer output discrimination

enum class Candidate { a, b };

struct DiscriminationInstance {
  std::string anchor_key;
  std::string candidate_a_key;
  std::string candidate_b_key;
  Candidate correct = Candidate::a;
};

inline DiscriminationInstance discrimination_instance_from_json(const json& j) {
  field::only(j, {"anchor_key", "candidate_a_key", "candidate_b_key", "correct"});
  DiscriminationInstance d{field::string(j, "anchor_key"), field::string(j, "candidate_a_key"),
                           field::string(j, "candidate_b_key"), Candidate::a};
  const auto c = field::string(j, "correct");
  if (c != "a" && c != "b") throw ParseError("correct must be 'a' or 'b'");
  d.correct = c == "a" ? Candidate::a : Candidate::b;
  if (d.candidate_a_key == d.candidate_b_key) throw ParseError("candidates must differ");
  return d;
}

struct DiscriminationChoice {
  std::string choice;  // "a", "b" or "tie"
  double credit;
};

struct DiscriminationReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::vector<DiscriminationChoice> choices;
};

/// Picks the candidate closer in cosine to the anchor; ties earn half credit.
inline DiscriminationReport discriminate(const std::vector<DiscriminationInstance>& instances,
                                         const EmbeddingSet& embeddings) {
  DiscriminationReport r;
  r.n = instances.size();
  double total = 0.0;
  for (const auto& d : instances) {
    const auto anchor = embeddings.at(d.anchor_key);
    const double ca = cosine(anchor, embeddings.at(d.candidate_a_key));
    const double cb = cosine(anchor, embeddings.at(d.candidate_b_key));
    DiscriminationChoice c;
    if (ca == cb) {
      c = {"tie", 0.5};
    } else {
      const bool picked_a = ca > cb;
      c = {picked_a ? "a" : "b", picked_a == (d.correct == Candidate::a) ? 1.0 : 0.0};
    }
    total += c.credit;
    r.choices.push_back(c);
  }
  r.accuracy = r.n ? total / static_cast<double>(r.n) : 0.0;
  return r;
}

inline json to_json(const DiscriminationReport& r) {
  json choices = json::array();
  for (const auto& c : r.choices) choices.push_back({{"choice", c.choice}, {"credit", c.credit}});
  return {{"metric", "accuracy"}, {"n", r.n}, {"accuracy", r.accuracy}, {"choices", choices}};
}

template <class T, class Parse>
std::vector<T> load_records(const std::filesystem::path& path, Parse&& parse) {
  std::vector<T> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(parse(j)); });
  return out;
}

}  // namespace stylekit
