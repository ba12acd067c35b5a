#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stylekit/error.hpp"

namespace stylekit {

enum class FeatureCategory {
  tone,
  syntax,
  lexical,
  orthography,
  punctuation,
  pronouns,
  social_media,
};

inline constexpr std::string_view to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::tone: return "tone";
    case FeatureCategory::syntax: return "syntax";
    case FeatureCategory::lexical: return "lexical";
    case FeatureCategory::orthography: return "orthography";
    case FeatureCategory::punctuation: return "punctuation";
    case FeatureCategory::pronouns: return "pronouns";
    case FeatureCategory::social_media: return "social_media";
  }
  return "?";
}

/// A named style attribute with the adjective pair used to prompt for its
/// presence and absence. Prompt words double as response labels
/// ("active" -> "Active:").
struct StyleFeature {
  std::string id;
  std::string name;
  FeatureCategory category;
  std::string positive_prompt;
  std::string negative_prompt;
  std::string definition;
  bool fully_removable = true;
  std::vector<std::string> special_conditions;
};

/// Capitalized prompt word, as it appears in the response format block.
inline std::string prompt_label(std::string_view prompt) {
  std::string s(prompt);
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

class FeatureRegistry {
public:
  FeatureRegistry() = default;

  explicit FeatureRegistry(std::vector<StyleFeature> features) {
    for (auto& f : features) add(std::move(f));
  }

  void add(StyleFeature f) {
    if (f.id.empty()) throw ValidationError("feature id is empty");
    if (index_.contains(f.id)) throw ValidationError("duplicate feature id '" + f.id + "'");
    if (f.positive_prompt == f.negative_prompt)
      throw ValidationError("feature '" + f.id + "': positive and negative prompt are identical");
    index_.emplace(f.id, features_.size());
    features_.push_back(std::move(f));
  }

  bool contains(std::string_view id) const { return index_.contains(std::string(id)); }

  const StyleFeature& at(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw NotFoundError("unknown feature_id '" + std::string(id) + "'");
    return features_[it->second];
  }

  const std::vector<StyleFeature>& all() const { return features_; }
  std::size_t size() const { return features_.size(); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(features_.size());
    for (const auto& f : features_) out.push_back(f.id);
    return out;
  }

private:
  std::vector<StyleFeature> features_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::vector<StyleFeature> builtin_features() {
  using C = FeatureCategory;
  // clang-format off
  return {
    // Named in the generalization ablation lists.
    {"formal_tone", "Usage of Formal Tone", C::tone, "formal", "informal",
     "The text uses a formal, professional register.", true, {}},
    {"polite_tone", "Usage of Polite Tone", C::tone, "polite", "impolite",
     "The text is courteous and considerate toward the reader.", true, {}},
    {"fluency", "Fluency in Sentence Construction", C::syntax, "fluent", "disfluent",
     "The sentence reads smoothly and is grammatically well formed.", true,
     {"The disfluent sentence should contain awkward phrasing or grammatical slips but keep its meaning."}},
    {"only_uppercase", "Usage of Only Uppercase Letters", C::orthography, "uppercase", "mixed-case",
     "Every letter in the text is uppercase.", true, {}},
    {"only_lowercase", "Usage of Only Lowercase Letters", C::orthography, "lowercase", "standard-case",
     "Every letter in the text is lowercase.", true, {}},
    {"humor", "Incorporation of Humor", C::tone, "humorous", "serious",
     "The text is intended to amuse.", true, {}},
    {"sarcasm", "Usage of Sarcasm", C::tone, "sarcastic", "sincere",
     "The text says the opposite of what it means, usually to mock.", true, {}},
    {"contractions", "Usage of Contractions", C::lexical, "contracted", "uncontracted",
     "The text shortens word pairs with apostrophes (don't, it's).", true, {}},
    {"numerical_substitution", "Usage of Numerical Substitution", C::orthography, "leetspeak", "plain-letter",
     "Digits replace similar-looking letters or sounds (gr8, l8r, 2day).", true, {}},
    {"numerical_digits", "Usage of Numerical Digits", C::orthography, "digit-numeral", "spelled-numeral",
     "Numbers are written with digits instead of words.", true,
     {"Both sentences must mention the same quantity."}},
    {"complex_sentence", "Complex Sentence Structure", C::syntax, "complex", "simple",
     "The sentence has subordinate clauses or layered structure.", true, {}},
    {"long_words", "Usage of Long Words", C::lexical, "long-worded", "short-worded",
     "The text prefers long, multi-syllable words.", false, {}},
    {"text_emojis", "Usage of Text Emojis", C::social_media, "emoticon", "emoticon-free",
     "The text contains text emoticons such as :-) or :D.", true, {}},
    {"emojis", "Usage of Emojis", C::social_media, "emoji", "emoji-free",
     "The text contains pictographic emoji characters.", true, {}},
    {"misspelled_words", "Presence of Misspelled Words", C::orthography, "misspelled", "correctly-spelled",
     "The text contains spelling mistakes.", true, {}},
    // Remaining features.
    {"active_voice", "Usage of Active Voice", C::syntax, "active", "passive",
     "The subject performs the action of the verb.", true, {}},
    {"articles", "Usage of Articles", C::lexical, "article-rich", "article-sparse",
     "The text uses articles (a, an, the).", false,
     {"The article-rich sentence must contain more articles than the article-sparse sentence."}},
    {"nominalizations", "Usage of Nominalizations", C::syntax, "nominalized", "verbal",
     "Actions are expressed as nouns (the decision) rather than verbs (decide).", false, {}},
    {"first_person", "Usage of First-Person Pronouns", C::pronouns, "first-person", "impersonal",
     "The text refers to the writer with I, me, we or us.", true, {}},
    {"second_person", "Usage of Second-Person Pronouns", C::pronouns, "second-person", "non-addressing",
     "The text addresses the reader as you.", true, {}},
    {"hedging", "Usage of Hedging Language", C::lexical, "hedged", "assertive",
     "The text softens claims with words like perhaps or might.", true, {}},
    {"intensifiers", "Usage of Intensifiers", C::lexical, "intensified", "unintensified",
     "The text amplifies words with very, extremely, totally.", true, {}},
    {"exclamation_marks", "Usage of Exclamation Marks", C::punctuation, "exclamatory", "calm",
     "The text ends statements with exclamation marks.", true, {}},
    {"ellipses", "Usage of Ellipses", C::punctuation, "trailing", "complete",
     "The text uses ellipses to trail off.", true, {}},
    {"rhetorical_questions", "Usage of Rhetorical Questions", C::syntax, "rhetorical", "declarative",
     "The text poses questions that expect no answer.", true, {}},
    {"slang", "Usage of Slang", C::lexical, "slangy", "standard",
     "The text uses informal slang expressions.", true, {}},
    {"profanity", "Usage of Profanity", C::tone, "profane", "clean",
     "The text contains swear words.", true, {}},
    {"interjections", "Usage of Interjections", C::pronouns, "interjecting", "restrained",
     "The text contains interjections such as wow or oh.", true, {}},
    {"technical_jargon", "Usage of Technical Jargon", C::lexical, "jargon-heavy", "plain-language",
     "The text relies on domain-specific technical terms.", true, {}},
    {"abbreviations", "Usage of Abbreviations", C::orthography, "abbreviated", "unabbreviated",
     "The text shortens words or phrases (approx., ASAP).", true, {}},
    {"archaic_language", "Usage of Archaic Language", C::lexical, "archaic", "modern",
     "The text uses old-fashioned words (thee, whilst).", true, {}},
    {"figurative_language", "Usage of Figurative Language", C::lexical, "figurative", "literal",
     "The text uses metaphors or similes.", true, {}},
    {"alliteration", "Usage of Alliteration", C::lexical, "alliterative", "non-alliterative",
     "Neighboring words start with the same sound.", true, {}},
    {"repetition", "Usage of Repetition", C::syntax, "repetitive", "non-repetitive",
     "The text repeats words or phrases for emphasis.", true, {}},
    {"parentheticals", "Usage of Parenthetical Remarks", C::punctuation, "parenthetical", "unbracketed",
     "The text inserts asides in parentheses or dashes.", true, {}},
    {"descriptive_adjectives", "Usage of Descriptive Adjectives", C::lexical, "descriptive", "unadorned",
     "Nouns are modified by vivid adjectives.", false, {}},
    {"adverbs", "Usage of Adverbs", C::lexical, "adverb-rich", "adverb-free",
     "Verbs are modified by adverbs.", false, {}},
    {"hashtags", "Usage of Hashtags", C::social_media, "hashtagged", "hashtag-free",
     "The text contains #hashtags.", true, {}},
    {"sentence_initial_conjunctions", "Usage of Sentence-Initial Conjunctions", C::syntax, "conjunction-initial",
     "conventionally-initial", "The sentence begins with and, but or so.", true, {}},
    {"enthusiastic_tone", "Usage of Enthusiastic Tone", C::tone, "enthusiastic", "neutral",
     "The text expresses excitement.", true, {}},
  };
  // clang-format on
}

}  // namespace detail

/// The shipped 40-feature registry.
inline const FeatureRegistry& default_registry() {
  static const FeatureRegistry registry(detail::builtin_features());
  return registry;
}

/// Features whose negative side is deliberately disfluent; fluency scoring
/// skips them.
inline std::set<std::string> disfluency_features() { return {"fluency", "misspelled_words"}; }

}  // namespace stylekit
