#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stylekit/core_data.hpp"
#include "stylekit/error.hpp"
#include "stylekit/vector_math.hpp"

namespace stylekit {

/// Mean cosine between the two sides of each pair.
inline double content_similarity(const std::vector<ParallelPair>& pairs, const EmbeddingSet& embeddings) {
  if (pairs.empty()) throw PreconditionError("content_similarity: no pairs");
  double s = 0.0;
  for (const auto& p : pairs)
    s += cosine(embeddings.at(SideRef::sentence_key(p.pair_id, Side::positive)),
                embeddings.at(SideRef::sentence_key(p.pair_id, Side::negative)));
  return s / static_cast<double>(pairs.size());
}

/// 1 - mean over items of the cosine to the item's nearest other item.
/// Identical directions give 0, mutually orthogonal sets give 1. O(n^2).
inline double diversity(const std::vector<std::span<const double>>& vectors) {
  const std::size_t n = vectors.size();
  if (n < 2) throw PreconditionError("diversity needs at least 2 embeddings");
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = norm(vectors[i]);
    if (norms[i] == 0.0) throw NumericError("diversity: zero vector");
  }
  std::vector<double> best(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = dot(vectors[i], vectors[j]) / (norms[i] * norms[j]);
      best[i] = std::max(best[i], c);
      best[j] = std::max(best[j], c);
    }
  double s = 0.0;
  for (double b : best) s += b;
  return 1.0 - s / static_cast<double>(n);
}

inline double diversity(const EmbeddingSet& set) {
  std::vector<std::span<const double>> v;
  for (std::size_t i = 0; i < set.size(); ++i) v.emplace_back(set.values(i));
  return diversity(v);
}

struct FluencyScore {
  std::string feature_id;
  double score;
};

/// Mean externally computed fluency score, skipping excluded features.
inline double fluency_summary(const std::vector<FluencyScore>& scores, const std::set<std::string>& exclude) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& f : scores) {
    if (exclude.contains(f.feature_id)) continue;
    if (!(f.score >= 0.0 && f.score <= 1.0)) throw ValidationError("fluency score outside [0, 1]");
    s += f.score;
    ++n;
  }
  if (n == 0) throw PreconditionError("fluency_summary: every score was excluded");
  return s / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Human annotation

struct AnnotationRecord {
  std::string item_id;
  std::string annotator_id;
  double response = 0.0;  // no = 0, possibly = 0.5, yes = 1
  bool intended_label = true;
};

inline double parse_response(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "no") return 0.0;
    if (s == "possibly") return 0.5;
    if (s == "yes") return 1.0;
    throw ParseError("response must be no|possibly|yes, got '" + s + "'");
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (x == 0.0 || x == 0.5 || x == 1.0) return x;
  }
  throw ParseError("response must be no|possibly|yes or 0|0.5|1");
}

inline AnnotationRecord annotation_from_json(const json& j) {
  field::only(j, {"item_id", "annotator_id", "response", "intended_label"});
  return {field::string(j, "item_id"), field::string(j, "annotator_id"), parse_response(field::require(j, "response")),
          field::boolean(j, "intended_label")};
}

struct AnnotationReport {
  std::map<std::string, double> per_item_mean;
  std::map<std::string, bool> per_item_agrees_intended;
  double overall_accuracy = 0.0;
  double mean_majority_size = 0.0;
};

namespace detail {

inline std::map<std::string, std::vector<const AnnotationRecord*>> group_items(
    const std::vector<AnnotationRecord>& records) {
  std::map<std::string, std::vector<const AnnotationRecord*>> items;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!seen.emplace(r.item_id, r.annotator_id).second)
      throw ValidationError("duplicate annotation for item '" + r.item_id + "' by '" + r.annotator_id + "'");
    items[r.item_id].push_back(&r);
  }
  return items;
}

}  // namespace detail

/// An item agrees with its intended label when its mean response is >= 0.5
/// for a positive example or < 0.5 for a negative one. Majority size counts
/// the larger of the yes and no camps; "possibly" joins neither.
inline AnnotationReport aggregate_annotations(const std::vector<AnnotationRecord>& records) {
  const auto items = detail::group_items(records);
  if (items.empty()) throw PreconditionError("aggregate_annotations: no records");
  AnnotationReport r;
  std::size_t agree = 0;
  double majority_total = 0.0;
  for (const auto& [item, recs] : items) {
    double sum = 0.0;
    std::size_t yes = 0, no = 0;
    const bool intended = recs.front()->intended_label;
    for (const auto* rec : recs) {
      if (rec->intended_label != intended)
        throw ValidationError("item '" + item + "' has conflicting intended labels");
      sum += rec->response;
      yes += rec->response == 1.0;
      no += rec->response == 0.0;
    }
    const double mean = sum / static_cast<double>(recs.size());
    const bool agrees = intended ? mean >= 0.5 : mean < 0.5;
    r.per_item_mean[item] = mean;
    r.per_item_agrees_intended[item] = agrees;
    agree += agrees;
    majority_total += static_cast<double>(std::max(yes, no));
  }
  r.overall_accuracy = static_cast<double>(agree) / static_cast<double>(items.size());
  r.mean_majority_size = majority_total / static_cast<double>(items.size());
  return r;
}

inline json to_json(const AnnotationReport& r) {
  return {{"per_item_mean", r.per_item_mean},
          {"per_item_agrees_intended", r.per_item_agrees_intended},
          {"overall_accuracy", r.overall_accuracy},
          {"mean_majority_size", r.mean_majority_size}};
}

enum class AlphaMetric { interval, nominal };

inline AlphaMetric parse_alpha_metric(const std::string& s) {
  if (s == "interval") return AlphaMetric::interval;
  if (s == "nominal") return AlphaMetric::nominal;
  throw PreconditionError("unknown alpha metric '" + s + "'");
}

/// Krippendorff's alpha from the coincidence matrix: alpha = 1 - D_o / D_e.
/// Items with a single annotation are unpairable and ignored.
inline double krippendorff_alpha(const std::vector<AnnotationRecord>& records,
                                 AlphaMetric metric = AlphaMetric::interval) {
  const auto items = detail::group_items(records);

  std::vector<double> values;
  for (const auto& r : records) values.push_back(r.response);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  auto value_index = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), v) - values.begin());
  };
  const std::size_t k = values.size();
  std::vector<double> coincidence(k * k, 0.0);

  std::size_t pairable_items = 0;
  for (const auto& [item, recs] : items) {
    const std::size_t m = recs.size();
    if (m < 2) continue;
    ++pairable_items;
    std::vector<std::size_t> counts(k, 0);
    for (const auto* rec : recs) ++counts[value_index(rec->response)];
    const double w = 1.0 / static_cast<double>(m - 1);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t d = 0; d < k; ++d) {
        const double pairs = c == d ? static_cast<double>(counts[c] * (counts[c] - (counts[c] ? 1 : 0)))
                                    : static_cast<double>(counts[c] * counts[d]);
        coincidence[c * k + d] += pairs * w;
      }
  }
  if (pairable_items < 2) throw PreconditionError("krippendorff_alpha needs >= 2 items with >= 2 annotations");

  auto delta2 = [&](std::size_t c, std::size_t d) {
    if (metric == AlphaMetric::nominal) return c == d ? 0.0 : 1.0;
    const double diff = values[c] - values[d];
    return diff * diff;
  };
  std::vector<double> marginals(k, 0.0);
  double n = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < k; ++d) {
      marginals[c] += coincidence[c * k + d];
      n += coincidence[c * k + d];
    }
  double observed = 0.0, expected = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < k; ++d) {
      observed += coincidence[c * k + d] * delta2(c, d);
      expected += marginals[c] * marginals[d] * delta2(c, d);
    }
  observed /= n;
  expected /= n * (n - 1.0);
  if (expected == 0.0) throw PreconditionError("krippendorff_alpha: expected disagreement is zero");
  return 1.0 - observed / expected;
}

}  // namespace stylekit
