#pragma once

// Tokenization and phrase segmentation.
//
// A token is a maximal run of non-space characters with leading and trailing
// punctuation split off one character at a time. Punctuation inside a run
// ("404,500", "don't", "U.S") stays part of the word. Offsets are byte
// offsets into the original text, half-open.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "keysig/error.hpp"
#include "keysig/stopwords.hpp"
#include "keysig/utf8.hpp"

namespace keysig {

enum class TokenKind { word, punctuation, stopword };

struct Token {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
  TokenKind kind = TokenKind::word;

  friend bool operator==(const Token&, const Token&) = default;
};

enum class Granularity { word, phrase, sentence };

inline std::string to_string(Granularity g) {
  switch (g) {
    case Granularity::word: return "word";
    case Granularity::phrase: return "phrase";
    case Granularity::sentence: return "sentence";
  }
  return "phrase";
}

inline Granularity parse_granularity(std::string_view s) {
  if (s == "word") return Granularity::word;
  if (s == "phrase") return Granularity::phrase;
  if (s == "sentence") return Granularity::sentence;
  throw UsageError("unknown granularity \"" + std::string(s) + "\"");
}

// A contiguous run of tokens. For word/phrase granularity every token is
// word-kind; sentence spans keep stopwords and punctuation.
struct PhraseSpan {
  std::vector<Token> tokens;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;     // lowercased, whitespace-collapsed; used for matching
  std::string surface;  // original casing, whitespace-collapsed; used in prompts
};

namespace detail {

inline bool is_split_punct(char32_t c) noexcept {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?': case '"':
    case '\'': case '(': case ')': case '[': case ']': case '{': case '}':
    case '<': case '>': case '/': case '\\': case '-': case '_': case '*':
    case '`': case '~': case '|': case '^': case '=': case '+':
      return true;
    // quotes, dashes, ellipsis, guillemets
    case 0x2018: case 0x2019: case 0x201C: case 0x201D: case 0x2013:
    case 0x2014: case 0x2026: case 0x00AB: case 0x00BB:
      return true;
    default:
      return false;
  }
}

// True when the character can anchor a word: letters, digits, and any
// non-ASCII code point not treated as punctuation.
inline bool is_word_anchor(char32_t c) noexcept {
  if (c >= 0x80) return !is_split_punct(c);
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

struct CodePoint {
  char32_t value;
  std::size_t start;
  std::size_t end;
};

}  // namespace detail

inline std::vector<Token> tokenize(std::string_view text, const StopwordSet& stopwords) {
  std::vector<Token> tokens;
  auto push = [&](std::size_t b, std::size_t e, TokenKind kind) {
    Token t{std::string(text.substr(b, e - b)), b, e, kind};
    if (kind == TokenKind::word && stopwords.contains(t.text)) t.kind = TokenKind::stopword;
    tokens.push_back(std::move(t));
  };

  std::vector<detail::CodePoint> run;
  auto flush_run = [&] {
    if (run.empty()) return;
    std::size_t lo = 0;
    std::size_t hi = run.size();
    bool has_anchor = false;
    for (const auto& cp : run) has_anchor = has_anchor || detail::is_word_anchor(cp.value);
    if (!has_anchor) {
      for (const auto& cp : run) push(cp.start, cp.end, TokenKind::punctuation);
      run.clear();
      return;
    }
    while (lo < hi && detail::is_split_punct(run[lo].value)) ++lo;
    while (hi > lo && detail::is_split_punct(run[hi - 1].value)) --hi;
    for (std::size_t i = 0; i < lo; ++i) push(run[i].start, run[i].end, TokenKind::punctuation);
    push(run[lo].start, run[hi - 1].end, TokenKind::word);
    for (std::size_t i = hi; i < run.size(); ++i)
      push(run[i].start, run[i].end, TokenKind::punctuation);
    run.clear();
  };

  for (std::size_t pos = 0; pos < text.size();) {
    if (utf8::is_space(text[pos])) {
      flush_run();
      ++pos;
      continue;
    }
    const std::size_t begin = pos;
    const char32_t c = utf8::next(text, pos);
    run.push_back({c, begin, pos});
  }
  flush_run();
  return tokens;
}

inline std::vector<Token> tokenize(std::string_view text) {
  return tokenize(text, StopwordSet{});
}

// Builds a span over tokens[first, last] (inclusive) of `text`.
inline PhraseSpan make_span(std::string_view text, std::span<const Token> tokens,
                            std::size_t first, std::size_t last) {
  PhraseSpan span;
  span.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(first),
                     tokens.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  span.start = tokens[first].start;
  span.end = tokens[last].end;
  span.surface = utf8::collapse_whitespace(text.substr(span.start, span.end - span.start));
  span.text = utf8::to_lower(span.surface);
  return span;
}

namespace detail {

inline bool is_terminal(const Token& t) {
  return t.kind == TokenKind::punctuation &&
         (t.text == "." || t.text == "!" || t.text == "?" || t.text == "\xE2\x80\xA6");
}

inline bool opens_sentence(const Token& t) {
  std::size_t pos = 0;
  const char32_t c = utf8::next(t.text, pos);
  return (c >= 'A' && c <= 'Z') || c == '"' || c == '\'' || c == 0x201C || c == 0x2018 ||
         c == 0x00AB;
}

// Sentence boundary between tokens[i] and tokens[i + 1].
inline bool sentence_break(std::string_view text, std::span<const Token> tokens,
                           std::size_t i) {
  const std::string_view gap =
      text.substr(tokens[i].end, tokens[i + 1].start - tokens[i].end);
  if (gap.find('\n') != std::string_view::npos) return true;
  return !gap.empty() && is_terminal(tokens[i]) && opens_sentence(tokens[i + 1]);
}

}  // namespace detail

inline std::vector<PhraseSpan> segment_tokens(std::string_view text,
                                              std::span<const Token> tokens,
                                              Granularity g) {
  std::vector<PhraseSpan> spans;
  const std::size_t n = tokens.size();
  switch (g) {
    case Granularity::word:
      for (std::size_t i = 0; i < n; ++i)
        if (tokens[i].kind == TokenKind::word) spans.push_back(make_span(text, tokens, i, i));
      break;
    case Granularity::phrase:
      for (std::size_t i = 0; i < n;) {
        if (tokens[i].kind != TokenKind::word) {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j + 1 < n && tokens[j + 1].kind == TokenKind::word) ++j;
        spans.push_back(make_span(text, tokens, i, j));
        i = j + 1;
      }
      break;
    case Granularity::sentence: {
      std::size_t first = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i + 1 < n && !detail::sentence_break(text, tokens, i)) continue;
        bool has_content = false;
        for (std::size_t k = first; k <= i; ++k)
          has_content = has_content || tokens[k].kind != TokenKind::punctuation;
        if (has_content) spans.push_back(make_span(text, tokens, first, i));
        first = i + 1;
      }
      break;
    }
  }
  return spans;
}

inline std::vector<PhraseSpan> segment(std::string_view text, Granularity g,
                                       const StopwordSet& stopwords) {
  const auto tokens = tokenize(text, stopwords);
  return segment_tokens(text, tokens, g);
}

}  // namespace keysig
