#include "jointkpe/text.h"

#include <cctype>

namespace jointkpe {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

bool is_punct_token(std::string_view token) {
  return token.size() == 1 && is_punct(token[0]);
}

std::vector<Lexeme> lex(std::string_view text) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (is_punct(text[i])) {
      out.push_back({to_lower(text.substr(i, 1)), {i, i + 1}});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !is_space(text[j]) && !is_punct(text[j])) ++j;
    out.push_back({to_lower(text.substr(i, j - i)), {i, j}});
    i = j;
  }
  return out;
}

std::string normalize_phrase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::string render_span(std::string_view text, CharSpan span) {
  return normalize_phrase(text.substr(span.begin, span.size()));
}

}  // namespace jointkpe
