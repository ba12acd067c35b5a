#pragma once

#include <cctype>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace stylekit::genkit {

/// Thresholds for picking natural English sentences out of web documents.
struct C4FilterConfig {
  std::size_t min_words_exclusive = 32;   // keep only sentences with more words than this
  double min_alpha_token_ratio = 0.7;     // tokens made of letters (plus ' and -)
  std::size_t max_separator_run = 2;      // longest run of consecutive separator characters
  double min_function_word_ratio = 0.08;  // crude English check
  std::vector<std::string> formatting_markers{"|", "http://", "https://", "www.", "{", "}", "[", "]",
                                              "\xC2\xA9", "&nbsp;", "\xE2\x80\xA2", "lorem ipsum", "javascript"};
};

namespace detail {

inline std::vector<std::string> whitespace_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

/// Token with its edge punctuation removed is nonempty and all letters,
/// apostrophes or hyphens.
inline bool is_alpha_token(const std::string& t) {
  std::size_t b = 0, e = t.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(t[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(t[e - 1]))) --e;
  if (b == e) return false;
  bool letter = false;
  for (std::size_t i = b; i < e; ++i) {
    const auto c = static_cast<unsigned char>(t[i]);
    if (std::isalpha(c)) letter = true;
    else if (c != '\'' && c != '-') return false;
  }
  return letter;
}

inline bool is_separator_char(char c) {
  switch (c) {
    case '|': case '/': case '\\': case '>': case '<': case '=': case '_': case '#':
    case '*': case '~': case '+': case '^': case '-': case ':': case ';':
      return true;
    default:
      return false;
  }
}

inline std::size_t longest_separator_run(std::string_view s) {
  std::size_t best = 0, run = 0;
  for (char c : s) {
    run = is_separator_char(c) ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

inline const std::set<std::string>& english_function_words() {
  static const std::set<std::string> words{
      "the", "a", "an", "and", "or", "but", "of", "to", "in", "on", "at", "for", "with", "by", "from", "is",
      "are", "was", "were", "be", "been", "it", "this", "that", "these", "those", "as", "not", "have", "has",
      "had", "he", "she", "they", "we", "you", "i", "his", "her", "their", "our", "your", "its", "will",
      "would", "can", "could", "there", "which", "who", "what", "when", "if", "so", "than", "then", "into",
      "about", "all", "more", "some", "do", "does", "did", "my", "me", "us", "them"};
  return words;
}

inline std::string lower_letters(const std::string& t) {
  std::string out;
  for (char c : t)
    if (std::isalpha(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace detail

/// Splits on terminal punctuation (. ! ?) followed by whitespace or end.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    cur.push_back(c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
    const bool terminal = c == '.' || c == '!' || c == '?';
    if (terminal && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
      auto b = cur.find_first_not_of(' ');
      if (b != std::string::npos) out.push_back(cur.substr(b));
      cur.clear();
    }
  }
  auto b = cur.find_first_not_of(' ');
  if (b != std::string::npos) {
    auto e = cur.find_last_not_of(' ');
    out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

inline std::size_t word_count(std::string_view s) { return detail::whitespace_tokens(s).size(); }

/// True when a sentence passes every gate: length, alphabetic-token ratio,
/// no HTML tags or formatting markers, short separator runs, and enough
/// English function words.
inline bool is_natural_sentence(const std::string& sentence, const C4FilterConfig& cfg = {}) {
  const auto tokens = detail::whitespace_tokens(sentence);
  if (tokens.size() <= cfg.min_words_exclusive) return false;

  static const std::regex html_tag(R"(<\s*/?\s*[A-Za-z][^>]*>)");
  if (std::regex_search(sentence, html_tag)) return false;
  std::string low = sentence;
  for (auto& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto& m : cfg.formatting_markers)
    if (low.find(m) != std::string::npos) return false;
  if (detail::longest_separator_run(sentence) > cfg.max_separator_run) return false;

  std::size_t alpha = 0, function = 0;
  for (const auto& t : tokens) {
    alpha += detail::is_alpha_token(t);
    function += detail::english_function_words().contains(detail::lower_letters(t));
  }
  const double n = static_cast<double>(tokens.size());
  if (static_cast<double>(alpha) / n < cfg.min_alpha_token_ratio) return false;
  if (static_cast<double>(function) / n < cfg.min_function_word_ratio) return false;
  return true;
}

inline std::vector<std::string> filter_c4_sentences(std::string_view document_text, const C4FilterConfig& cfg = {}) {
  std::vector<std::string> out;
  for (auto& s : split_sentences(document_text))
    if (is_natural_sentence(s, cfg)) out.push_back(std::move(s));
  return out;
}

}  // namespace stylekit::genkit
