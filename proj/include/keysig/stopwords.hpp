#pragma once

// Stopword sets. The default English list is the NLTK "english" list
// (179 entries); data/stopwords_en.txt holds the same list, one per line.

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>

#include "keysig/error.hpp"
#include "keysig/jsonl.hpp"
#include "keysig/utf8.hpp"

namespace keysig {

inline constexpr std::string_view kStopwordListVersion = "nltk-english-179";

inline constexpr std::array<std::string_view, 179> kEnglishStopwords = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're",
    "you've", "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he",
    "him", "his", "himself", "she", "she's", "her", "hers", "herself", "it",
    "it's", "its", "itself", "they", "them", "their", "theirs", "themselves",
    "what", "which", "who", "whom", "this", "that", "that'll", "these", "those",
    "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
    "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if",
    "or", "because", "as", "until", "while", "of", "at", "by", "for", "with",
    "about", "against", "between", "into", "through", "during", "before", "after",
    "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
    "under", "again", "further", "then", "once", "here", "there", "when", "where",
    "why", "how", "all", "any", "both", "each", "few", "more", "most", "other",
    "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than", "too",
    "very", "s", "t", "can", "will", "just", "don", "don't", "should", "should've",
    "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn",
    "couldn't", "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn",
    "hasn't", "haven", "haven't", "isn", "isn't", "ma", "mightn", "mightn't",
    "mustn", "mustn't", "needn", "needn't", "shan", "shan't", "shouldn",
    "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn",
    "wouldn't",
};

// Case-insensitive membership over ASCII letters.
class StopwordSet {
 public:
  StopwordSet() = default;

  template <typename Range>
  explicit StopwordSet(const Range& words) {
    for (const auto& w : words) add(w);
  }

  static StopwordSet english() { return StopwordSet(kEnglishStopwords); }

  // One token per line; blank lines ignored, entries lowercased.
  static StopwordSet from_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
    StopwordSet set;
    const std::string content = read_file(path);
    for (auto line : split_lines(content)) {
      std::string w = utf8::collapse_whitespace(line);
      if (!w.empty()) set.add(w);
    }
    return set;
  }

  void add(std::string_view w) { words_.insert(utf8::to_lower(w)); }

  bool contains(std::string_view w) const {
    return words_.count(utf8::to_lower(w)) != 0;
  }

  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

}  // namespace keysig
