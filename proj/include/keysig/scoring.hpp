#pragma once

// Per-token salience scores from pluggable sources, and their aggregation
// into phrase scores.
//
// Every ScoreSource emits exactly one entry per word-kind token of the
// document it is given (stopwords and punctuation carry no score).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "keysig/corpus.hpp"
#include "keysig/error.hpp"
#include "keysig/jsonl.hpp"
#include "keysig/phrasing.hpp"
#include "keysig/stopwords.hpp"
#include "keysig/utf8.hpp"

namespace keysig {

struct TokenScore {
  std::size_t start = 0;
  std::size_t end = 0;
  double score = 0.0;

  friend bool operator==(const TokenScore&, const TokenScore&) = default;
};

// Scores for one document, sorted by start and non-overlapping. Offsets are
// byte offsets into the document source, except for maps freshly loaded
// from a logits file, which carry the file's code point offsets until
// aligned to a document with align_external_scores().
struct TokenScoreMap {
  std::string doc_id;
  std::vector<TokenScore> scores;
  // Word tokens with no score in the input, defaulted to 0.
  std::size_t missing = 0;

  const TokenScore* find(std::size_t start, std::size_t end) const {
    auto it = std::lower_bound(scores.begin(), scores.end(), start,
                               [](const TokenScore& s, std::size_t v) { return s.start < v; });
    if (it == scores.end() || it->start != start || it->end != end) return nullptr;
    return &*it;
  }
};

class ScoreSource {
 public:
  virtual ~ScoreSource() = default;
  virtual TokenScoreMap score(const DocumentPair& doc) const = 0;
  virtual std::string_view name() const noexcept = 0;
};

// ---------------------------------------------------------------------------
// External logits
//
// Logits JSONL: {"id":str,"tokens":[{"start":int,"end":int,"logit":float}]}
// with code point offsets into the (truncated) source text.

using ExternalScores = std::map<std::string, TokenScoreMap>;

inline TokenScoreMap external_scores_from_json(const Json& j, std::size_t line) {
  TokenScoreMap m;
  m.doc_id = require_string(j, "id", line);
  const Json& tokens = require(j, "tokens", line);
  if (!tokens.is_array()) throw SchemaError(line, "\"tokens\" must be an array");
  for (const auto& t : tokens) {
    TokenScore s;
    try {
      s.start = t.at("start").get<std::size_t>();
      s.end = t.at("end").get<std::size_t>();
      s.score = t.at("logit").get<double>();
    } catch (const Json::exception& e) {
      throw SchemaError(line, "doc \"" + m.doc_id + "\": bad token entry: " + e.what());
    }
    if (!std::isfinite(s.score))
      throw SchemaError(line, "doc \"" + m.doc_id + "\": non-finite logit");
    if (s.start >= s.end)
      throw SchemaError(line, "doc \"" + m.doc_id + "\": empty token span");
    if (!m.scores.empty() && s.start < m.scores.back().end)
      throw SchemaError(line, "doc \"" + m.doc_id + "\": token spans overlap or are unsorted");
    m.scores.push_back(s);
  }
  return m;
}

inline Json to_json_wire(const TokenScoreMap& m) {
  Json tokens = Json::array();
  for (const auto& s : m.scores)
    tokens.push_back(Json{{"start", s.start}, {"end", s.end}, {"logit", s.score}});
  Json j;
  j["id"] = m.doc_id;
  j["tokens"] = std::move(tokens);
  return j;
}

inline ExternalScores parse_external_scores(std::string_view content,
                                            const std::string& source_label = {}) {
  ExternalScores out;
  for_each_jsonl(
      content,
      [&](const Json& j, std::size_t line) {
        TokenScoreMap m = external_scores_from_json(j, line);
        const std::string id = m.doc_id;
        if (!out.emplace(id, std::move(m)).second)
          throw SchemaError(line, "duplicate doc id \"" + id + "\"");
      },
      source_label);
  return out;
}

inline ExternalScores load_external_scores(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
  return parse_external_scores(read_file(path), path.string());
}

// Maps a wire-format score map onto the document's tokens. A span that does
// not hit a token boundary exactly snaps to the closest token whose start
// and end both lie within one character; otherwise it is an error. Spans
// landing on stopword or punctuation tokens are dropped. Word tokens left
// without a score get 0 and are counted in `missing`.
inline TokenScoreMap align_external_scores(const TokenScoreMap& wire, std::string_view text,
                                           std::span<const Token> tokens) {
  const utf8::OffsetIndex index(text);
  struct CpToken {
    std::size_t start, end;
    const Token* token;
  };
  std::vector<CpToken> cp_tokens;
  cp_tokens.reserve(tokens.size());
  for (const auto& t : tokens)
    cp_tokens.push_back({index.to_codepoint(t.start), index.to_codepoint(t.end), &t});

  std::vector<std::optional<double>> assigned(tokens.size());
  auto dist = [](std::size_t a, std::size_t b) { return a > b ? a - b : b - a; };
  for (const auto& s : wire.scores) {
    auto it = std::lower_bound(cp_tokens.begin(), cp_tokens.end(), s.start,
                               [](const CpToken& t, std::size_t v) { return t.start < v; });
    std::optional<std::size_t> best;
    std::size_t best_cost = 3;
    // Candidates with start in [s.start - 1, s.start + 1] sit around `it`.
    const auto lo = it == cp_tokens.begin() ? it : std::prev(it);
    for (auto c = lo; c != cp_tokens.end() && c->start <= s.start + 1; ++c) {
      const std::size_t ds = dist(c->start, s.start), de = dist(c->end, s.end);
      if (ds > 1 || de > 1) continue;
      if (ds + de < best_cost) {
        best_cost = ds + de;
        best = static_cast<std::size_t>(c - cp_tokens.begin());
      }
    }
    if (!best)
      throw DataError("doc \"" + wire.doc_id + "\": score span [" + std::to_string(s.start) +
                      ", " + std::to_string(s.end) + ") matches no token within 1 character");
    if (tokens[*best].kind == TokenKind::word && !assigned[*best]) assigned[*best] = s.score;
  }

  TokenScoreMap out;
  out.doc_id = wire.doc_id;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind != TokenKind::word) continue;
    if (!assigned[i]) ++out.missing;
    out.scores.push_back({tokens[i].start, tokens[i].end, assigned[i].value_or(0.0)});
  }
  return out;
}

class ExternalScoreSource final : public ScoreSource {
 public:
  ExternalScoreSource(ExternalScores scores, StopwordSet stopwords)
      : scores_(std::move(scores)), stopwords_(std::move(stopwords)) {}

  TokenScoreMap score(const DocumentPair& doc) const override {
    auto it = scores_.find(doc.id);
    if (it == scores_.end())
      throw DataError("no external scores for document \"" + doc.id + "\"");
    const auto tokens = tokenize(doc.source, stopwords_);
    return align_external_scores(it->second, doc.source, tokens);
  }
  std::string_view name() const noexcept override { return "external"; }

 private:
  ExternalScores scores_;
  StopwordSet stopwords_;
};

// ---------------------------------------------------------------------------
// TextRank
//
// Nodes are the distinct lowercased word-kind tokens. Two nodes share an
// (unweighted) edge when they occur within `window` positions of each other
// in the sequence of word-kind tokens. Scores follow
//
//   S(v) = (1 - d) + d * ( sum_{u in N(v)} S(u) / deg(u) + D / N )
//
// where D is the total score of isolated nodes, spread uniformly. Starting
// from S = 1 this keeps sum(S) = N at every iteration.

struct TextRankParams {
  std::size_t window = 4;
  double damping = 0.85;
  std::size_t iters = 100;
  double tol = 1e-6;

  void validate() const {
    if (window < 2) throw UsageError("textrank window must be >= 2");
    if (!(damping > 0.0 && damping < 1.0)) throw UsageError("textrank damping must be in (0, 1)");
  }
};

struct WordGraph {
  std::vector<std::string> nodes;                 // first-occurrence order
  std::vector<std::vector<std::size_t>> adjacency;  // sorted, no self loops
};

inline WordGraph build_cooccurrence_graph(std::span<const std::string> words,
                                          std::size_t window) {
  WordGraph g;
  std::unordered_map<std::string, std::size_t> id_of;
  std::vector<std::size_t> seq;
  seq.reserve(words.size());
  for (const auto& w : words) {
    auto [it, inserted] = id_of.emplace(w, g.nodes.size());
    if (inserted) g.nodes.push_back(w);
    seq.push_back(it->second);
  }
  g.adjacency.resize(g.nodes.size());
  for (std::size_t p = 0; p < seq.size(); ++p) {
    for (std::size_t q = p + 1; q < seq.size() && q - p < window; ++q) {
      if (seq[p] == seq[q]) continue;
      g.adjacency[seq[p]].push_back(seq[q]);
      g.adjacency[seq[q]].push_back(seq[p]);
    }
  }
  for (auto& adj : g.adjacency) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
  return g;
}

inline std::vector<double> rank_graph(const WordGraph& g, double damping, std::size_t iters,
                                      double tol) {
  const std::size_t n = g.nodes.size();
  std::vector<double> s(n, 1.0), next(n);
  for (std::size_t it = 0; it < iters; ++it) {
    double dangling = 0.0;
    for (std::size_t u = 0; u < n; ++u)
      if (g.adjacency[u].empty()) dangling += s[u];
    const double base = (1.0 - damping) + damping * dangling / static_cast<double>(n);
    double delta = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0.0;
      for (std::size_t u : g.adjacency[v]) acc += s[u] / static_cast<double>(g.adjacency[u].size());
      next[v] = base + damping * acc;
      delta = std::max(delta, std::abs(next[v] - s[v]));
    }
    std::swap(s, next);
    if (delta < tol) break;
  }
  return s;
}

inline TokenScoreMap textrank_score(const DocumentPair& doc, const TextRankParams& params,
                                    const StopwordSet& stopwords) {
  params.validate();
  TokenScoreMap out;
  out.doc_id = doc.id;
  const auto tokens = tokenize(doc.source, stopwords);
  std::vector<const Token*> words;
  std::vector<std::string> keys;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::word) continue;
    words.push_back(&t);
    keys.push_back(utf8::to_lower(t.text));
  }
  if (words.empty()) return out;
  const WordGraph g = build_cooccurrence_graph(keys, params.window);
  const auto rank = rank_graph(g, params.damping, params.iters, params.tol);
  std::unordered_map<std::string_view, double> by_word;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) by_word.emplace(g.nodes[i], rank[i]);
  for (std::size_t i = 0; i < words.size(); ++i)
    out.scores.push_back({words[i]->start, words[i]->end, by_word.at(keys[i])});
  return out;
}

class TextRankSource final : public ScoreSource {
 public:
  TextRankSource(TextRankParams params, StopwordSet stopwords)
      : params_(params), stopwords_(std::move(stopwords)) {
    params_.validate();
  }
  TokenScoreMap score(const DocumentPair& doc) const override {
    return textrank_score(doc, params_, stopwords_);
  }
  std::string_view name() const noexcept override { return "textrank"; }

 private:
  TextRankParams params_;
  StopwordSet stopwords_;
};

// ---------------------------------------------------------------------------
// RAKE: candidates are runs of word tokens between stopwords/punctuation.
// word score = degree / frequency, where degree sums the lengths of the
// candidate phrases containing each occurrence.

inline TokenScoreMap rake_score(const DocumentPair& doc, const StopwordSet& stopwords) {
  TokenScoreMap out;
  out.doc_id = doc.id;
  const auto tokens = tokenize(doc.source, stopwords);
  const auto phrases = segment_tokens(doc.source, tokens, Granularity::phrase);
  std::unordered_map<std::string, double> degree, freq;
  for (const auto& p : phrases) {
    for (const auto& t : p.tokens) {
      const std::string w = utf8::to_lower(t.text);
      degree[w] += static_cast<double>(p.tokens.size());
      freq[w] += 1.0;
    }
  }
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::word) continue;
    const std::string w = utf8::to_lower(t.text);
    out.scores.push_back({t.start, t.end, degree.at(w) / freq.at(w)});
  }
  return out;
}

class RakeSource final : public ScoreSource {
 public:
  explicit RakeSource(StopwordSet stopwords) : stopwords_(std::move(stopwords)) {}
  TokenScoreMap score(const DocumentPair& doc) const override {
    return rake_score(doc, stopwords_);
  }
  std::string_view name() const noexcept override { return "rake"; }

 private:
  StopwordSet stopwords_;
};

// ---------------------------------------------------------------------------
// Uniform random scores; a floor baseline for extractor comparisons.

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class RandomSource final : public ScoreSource {
 public:
  RandomSource(std::uint64_t seed, StopwordSet stopwords)
      : seed_(seed), stopwords_(std::move(stopwords)) {}

  TokenScoreMap score(const DocumentPair& doc) const override {
    TokenScoreMap out;
    out.doc_id = doc.id;
    std::mt19937_64 gen(seed_ ^ fnv1a(doc.id));
    for (const auto& t : tokenize(doc.source, stopwords_)) {
      if (t.kind != TokenKind::word) continue;
      out.scores.push_back({t.start, t.end, static_cast<double>(gen() >> 11) * 0x1.0p-53});
    }
    return out;
  }
  std::string_view name() const noexcept override { return "random"; }

 private:
  std::uint64_t seed_;
  StopwordSet stopwords_;
};

// ---------------------------------------------------------------------------
// Phrase aggregation

enum class Aggregation { mean, sum };

// Mean (or sum) of the scores of the span's word tokens. Tokens without an
// entry contribute 0 and are counted in *missing when provided.
inline double phrase_score(const PhraseSpan& span, const TokenScoreMap& scores,
                           Aggregation agg = Aggregation::mean,
                           std::size_t* missing = nullptr) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& t : span.tokens) {
    if (t.kind != TokenKind::word) continue;
    ++n;
    if (const TokenScore* s = scores.find(t.start, t.end))
      total += s->score;
    else if (missing)
      ++*missing;
  }
  if (n == 0) return 0.0;
  return agg == Aggregation::mean ? total / static_cast<double>(n) : total;
}

}  // namespace keysig
