#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stylekit/error.hpp"
#include "stylekit/features.hpp"
#include "stylekit/jsonl.hpp"
#include "stylekit/random.hpp"

namespace stylekit::genkit {

/// Sampled conditioning attributes for one generation. Topic is free text.
struct AttrChoice {
  std::string topic;
  std::string length;
  std::string point_of_view;
  std::string tense;
  std::string sentence_type;

  std::map<std::string, std::string> as_map() const {
    return {{"topic", topic},
            {"length", length},
            {"point_of_view", point_of_view},
            {"tense", tense},
            {"sentence_type", sentence_type}};
  }
};

struct AttributeValueSets {
  std::vector<std::string> length{"short (5-10 words)", "medium (11-20 words)", "long (21-30 words)"};
  std::vector<std::string> point_of_view{"first person", "second person", "third person"};
  std::vector<std::string> tense{"past", "present", "future"};
  std::vector<std::string> sentence_type{"declarative", "interrogative", "exclamatory", "imperative"};
};

inline AttrChoice sample_attributes(std::string topic, const AttributeValueSets& sets, Rng& rng) {
  auto pick = [&](const std::vector<std::string>& v) -> const std::string& {
    if (v.empty()) throw PreconditionError("empty attribute value set");
    return v[static_cast<std::size_t>(rng.below(v.size()))];
  };
  AttrChoice a;
  a.topic = std::move(topic);
  a.length = pick(sets.length);
  a.point_of_view = pick(sets.point_of_view);
  a.tense = pick(sets.tense);
  a.sentence_type = pick(sets.sentence_type);
  return a;
}

/// Zero-shot topic extraction prompt; the sentence is substituted verbatim.
inline std::string build_topic_prompt(std::string_view sentence) {
  if (sentence.empty()) throw PreconditionError("build_topic_prompt: sentence is empty");
  std::string out = "What is the fine-grained topic of the following text: ";
  out += sentence;
  out += " Only return the topic.";
  return out;
}

/// Attributed pair-generation prompt. The five attribute lines appear in a
/// seeded random order; numbering always runs 1..5.
inline std::string build_pair_prompt(const StyleFeature& feature, const AttrChoice& attrs,
                                     std::uint64_t permutation_seed) {
  if (feature.positive_prompt.empty() || feature.negative_prompt.empty())
    throw PreconditionError("feature '" + feature.id + "' has no prompt labels");
  std::vector<std::pair<std::string_view, const std::string*>> lines{{"Topic", &attrs.topic},
                                                                     {"Length", &attrs.length},
                                                                     {"Point of view", &attrs.point_of_view},
                                                                     {"Tense", &attrs.tense},
                                                                     {"Type of Sentence", &attrs.sentence_type}};
  Rng(permutation_seed).shuffle(lines);

  std::string out = "Generate a pair of " + feature.positive_prompt + " and " + feature.negative_prompt +
                    " sentences with the following attributes:\n";
  for (std::size_t i = 0; i < lines.size(); ++i)
    out += "    " + std::to_string(i + 1) + ". " + std::string(lines[i].first) + ": " + *lines[i].second + "\n";
  out += "\n";
  out += "Ensure that the generated sentences meet the following conditions:\n";
  out += "    1. There is no extra information in one sentence that is not in the other.\n";
  out += "    2. The difference between the two sentences is subtle.\n";
  out += "    3. The two sentences have the same length.\n";
  for (std::size_t i = 0; i < feature.special_conditions.size(); ++i)
    out += "    " + std::to_string(i + 4) + ". " + feature.special_conditions[i] + "\n";
  out += "Use Format:\n";
  out += "    " + prompt_label(feature.positive_prompt) + ": [sentence]\n";
  out += "    " + prompt_label(feature.negative_prompt) + ": [sentence]\n";
  out += "Your response should only consist of the two sentences, without quotation marks.";
  return out;
}

/// Response that could not be parsed; keeps the raw text for retries.
class ResponseParseError : public ParseError {
public:
  ResponseParseError(const std::string& what, std::string raw) : ParseError(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

private:
  std::string raw_;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

/// Removes one layer of matching ASCII or curly quotes.
inline std::string strip_quotes(std::string s) {
  static const std::array<std::pair<std::string_view, std::string_view>, 3> kQuotes{
      {{"\"", "\""}, {"'", "'"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}}};
  s = trim(s);
  for (const auto& [open, close] : kQuotes)
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close))
      return trim(std::string_view(s).substr(open.size(), s.size() - open.size() - close.size()));
  return s;
}

}  // namespace detail

struct ParsedPair {
  std::string positive_text;
  std::string negative_text;
};

/// Extracts "<Positive label>: ..." and "<Negative label>: ..." lines in
/// either order. Labels match case-insensitively after optional list
/// markers or bold markup.
inline ParsedPair parse_pair_response(const std::string& text, const StyleFeature& feature) {
  const std::string pos_label = detail::lower(feature.positive_prompt) + ":";
  const std::string neg_label = detail::lower(feature.negative_prompt) + ":";
  std::optional<std::string> pos, neg;

  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string line = detail::trim(std::string_view(text).substr(start, end == std::string::npos ? std::string::npos : end - start));
    start = end == std::string::npos ? text.size() + 1 : end + 1;
    while (!line.empty() && (line[0] == '-' || line[0] == '*' || line[0] == '#')) line = detail::trim(line.substr(1));
    const std::string low = detail::lower(line);
    for (auto [label, slot] : {std::pair{&pos_label, &pos}, std::pair{&neg_label, &neg}}) {
      if (!low.starts_with(*label)) continue;
      if (*slot) throw ResponseParseError("duplicate label '" + label->substr(0, label->size() - 1) + "'", text);
      std::string body = line.substr(label->size());
      if (body.starts_with("**")) body = body.substr(2);
      *slot = detail::strip_quotes(body);
      if (slot->value().empty()) throw ResponseParseError("empty sentence after '" + *label + "'", text);
    }
  }
  if (!pos) throw ResponseParseError("missing label '" + prompt_label(feature.positive_prompt) + ":'", text);
  if (!neg) throw ResponseParseError("missing label '" + prompt_label(feature.negative_prompt) + ":'", text);
  return {*pos, *neg};
}

}  // namespace stylekit::genkit
