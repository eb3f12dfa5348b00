#pragma once

// Seeded generators for property tests and the planted-phrase corpus.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "keysig/keysig.hpp"

namespace synth {

inline std::size_t below(std::mt19937_64& gen, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen);
}

inline std::string random_string(std::mt19937_64& gen, std::string_view alphabet,
                                 std::size_t max_len) {
  const std::size_t len = below(gen, max_len + 1);
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += alphabet[below(gen, alphabet.size())];
  return s;
}

// Pronounceable lowercase pseudo-word of `syllables` consonant-vowel pairs,
// never a stopword.
inline std::string pseudo_word(std::mt19937_64& gen, std::size_t syllables = 3) {
  static constexpr std::string_view kCons = "bcdfghjklmnprstvwz";
  static constexpr std::string_view kVow = "aeiou";
  static const keysig::StopwordSet stopwords = keysig::StopwordSet::english();
  for (;;) {
    std::string w;
    for (std::size_t i = 0; i < syllables; ++i) {
      w += kCons[below(gen, kCons.size())];
      w += kVow[below(gen, kVow.size())];
    }
    if (!stopwords.contains(w)) return w;
  }
}

inline constexpr std::string_view kJoiners[] = {"the", "of",   "and", "in",  "for",
                                                "with", "on", "to",  "by",  "from"};

// Sentence-like text: word runs of 1-3 pseudo-words from a small vocabulary
// separated by stopwords and occasional punctuation.
inline std::string random_text(std::mt19937_64& gen, std::size_t phrases,
                               const std::vector<std::string>& vocab) {
  std::string out;
  for (std::size_t i = 0; i < phrases; ++i) {
    if (i) out += below(gen, 5) == 0 ? ". The " : std::string(" ") +
                                                     std::string(kJoiners[below(gen, 10)]) + " ";
    const std::size_t n = 1 + below(gen, 3);
    for (std::size_t j = 0; j < n; ++j) {
      if (j) out += ' ';
      out += vocab[below(gen, vocab.size())];
    }
  }
  return out + ".";
}

inline std::vector<std::string> vocabulary(std::mt19937_64& gen, std::size_t n) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < n) {
    auto w = pseudo_word(gen, 2 + below(gen, 2));
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

// A document whose reference summary is built from known source phrases.
//   planted      salient two-word phrases, 3 occurrences each, in the summary
//   incidental   one-off phrases that the summary also mentions
//   distractors  phrases repeated 4 times that the summary ignores
//   filler       one-off phrases the summary ignores
struct PlantedDoc {
  keysig::DocumentPair doc;
  std::vector<std::string> planted;
  std::vector<std::string> incidental;
  std::vector<std::string> distractors;
};

struct PlantedShape {
  std::size_t planted = 5;
  std::size_t incidental = 3;
  std::size_t distractors = 10;
  std::size_t filler = 30;
};

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

inline std::string phrase_text(std::mt19937_64& gen, std::set<std::string>& used) {
  for (;;) {
    std::string a = pseudo_word(gen), b = pseudo_word(gen);
    if (used.count(a) || used.count(b) || a == b) continue;
    used.insert(a);
    used.insert(b);
    return a + " " + b;
  }
}

inline std::string sentences_from(std::mt19937_64& gen, const std::vector<std::string>& phrases,
                                  std::size_t per_sentence) {
  std::string out;
  for (std::size_t i = 0; i < phrases.size(); i += per_sentence) {
    std::string s = "the " + phrases[i];
    for (std::size_t j = i + 1; j < std::min(phrases.size(), i + per_sentence); ++j)
      s += " " + std::string(kJoiners[1 + below(gen, 9)]) + " the " + phrases[j];
    if (!out.empty()) out += ' ';
    out += capitalize(s) + ".";
  }
  return out;
}

inline std::vector<PlantedDoc> planted_corpus(std::size_t n, std::uint64_t seed,
                                              PlantedShape shape = {}) {
  std::mt19937_64 gen(seed);
  std::vector<PlantedDoc> out;
  for (std::size_t d = 0; d < n; ++d) {
    PlantedDoc pd;
    std::set<std::string> used;
    std::vector<std::string> occurrences, filler;
    for (std::size_t i = 0; i < shape.planted; ++i) pd.planted.push_back(phrase_text(gen, used));
    for (std::size_t i = 0; i < shape.incidental; ++i)
      pd.incidental.push_back(phrase_text(gen, used));
    for (std::size_t i = 0; i < shape.distractors; ++i)
      pd.distractors.push_back(phrase_text(gen, used));
    for (std::size_t i = 0; i < shape.filler; ++i) filler.push_back(phrase_text(gen, used));
    for (const auto& p : pd.planted) occurrences.insert(occurrences.end(), 3, p);
    for (const auto& p : pd.distractors) occurrences.insert(occurrences.end(), 4, p);
    occurrences.insert(occurrences.end(), pd.incidental.begin(), pd.incidental.end());
    occurrences.insert(occurrences.end(), filler.begin(), filler.end());
    std::shuffle(occurrences.begin(), occurrences.end(), gen);

    std::vector<std::string> mentioned = pd.planted;
    mentioned.insert(mentioned.end(), pd.incidental.begin(), pd.incidental.end());
    std::shuffle(mentioned.begin(), mentioned.end(), gen);

    pd.doc.id = "doc" + std::to_string(d);
    pd.doc.source = sentences_from(gen, occurrences, 4);
    pd.doc.summary = sentences_from(gen, mentioned, 3);
    out.push_back(std::move(pd));
  }
  return out;
}

inline keysig::Dataset to_dataset(const std::vector<PlantedDoc>& docs, std::string name = "planted") {
  keysig::Dataset ds;
  ds.name = std::move(name);
  for (const auto& d : docs) ds.records.push_back(d.doc);
  return ds;
}

// Logits that know the planted phrases: their tokens score in [2, 2.5),
// every other word token in [0, 1). Offsets are code points.
inline keysig::TokenScoreMap planted_logits(const PlantedDoc& pd, std::mt19937_64& gen) {
  std::set<std::string> salient;
  for (const auto& p : pd.planted) {
    salient.insert(p.substr(0, p.find(' ')));
    salient.insert(p.substr(p.find(' ') + 1));
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  keysig::TokenScoreMap wire;
  wire.doc_id = pd.doc.id;
  const keysig::utf8::OffsetIndex index(pd.doc.source);
  for (const auto& t : keysig::tokenize(pd.doc.source, keysig::StopwordSet::english())) {
    if (t.kind != keysig::TokenKind::word) continue;
    const double s = salient.count(keysig::utf8::to_lower(t.text)) ? 2.0 + 0.5 * u(gen) : u(gen);
    wire.scores.push_back({index.to_codepoint(t.start), index.to_codepoint(t.end), s});
  }
  return wire;
}

}  // namespace synth
