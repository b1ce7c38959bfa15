#ifndef JOINTKPE_TEXT_H_
#define JOINTKPE_TEXT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace jointkpe {

// Half-open character range [begin, end) into a source string.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const CharSpan&) const = default;
};

// One lowercased lexical token and where it came from.
struct Lexeme {
  std::string text;
  CharSpan span;
};

std::string to_lower(std::string_view s);

bool is_space(char c);
bool is_punct(char c);

// True for single-character ASCII punctuation tokens.
bool is_punct_token(std::string_view token);

// Splits on whitespace, then breaks every ASCII punctuation character out
// into its own single-character token. Output is lowercased.
std::vector<Lexeme> lex(std::string_view text);

// Lowercase, collapse whitespace runs to a single space, trim.
std::string normalize_phrase(std::string_view s);

// Number of whitespace-delimited tokens.
std::size_t count_words(std::string_view text);

// Lowercased, whitespace-collapsed rendering of text[span].
std::string render_span(std::string_view text, CharSpan span);

}  // namespace jointkpe

#endif  // JOINTKPE_TEXT_H_
