#pragma once

// Top-K keyphrase selection with fuzzy de-duplication.
//
// Candidates are visited by score (descending; earlier document position
// first on ties). A candidate that fuzz-matches (>= epsilon) exactly one
// retained phrase replaces that phrase's surface form when it is strictly
// longer, keeping the retained score; any other match drops it. A candidate
// with no match is appended while fewer than K phrases are retained.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keysig/error.hpp"
#include "keysig/jsonl.hpp"
#include "keysig/matching.hpp"
#include "keysig/phrasing.hpp"
#include "keysig/scoring.hpp"

namespace keysig {

inline constexpr std::size_t kDefaultK = 15;
inline constexpr std::size_t kDefaultLongDocumentK = 35;

struct Keyphrase {
  std::string text;  // surface form inserted into prompts
  double score = 0.0;
  std::size_t start = 0;
};

struct KeyphraseSet {
  std::vector<Keyphrase> phrases;  // score order
  std::size_t k_requested = 0;

  std::size_t size() const noexcept { return phrases.size(); }
  bool empty() const noexcept { return phrases.empty(); }
};

enum class PhraseOrder { score, position };

inline PhraseOrder parse_phrase_order(std::string_view s) {
  if (s == "score") return PhraseOrder::score;
  if (s == "position") return PhraseOrder::position;
  throw UsageError("unknown order \"" + std::string(s) + "\"");
}

inline std::vector<Keyphrase> ordered(const KeyphraseSet& set, PhraseOrder order) {
  std::vector<Keyphrase> out = set.phrases;
  if (order == PhraseOrder::position)
    std::stable_sort(out.begin(), out.end(),
                     [](const Keyphrase& a, const Keyphrase& b) { return a.start < b.start; });
  return out;
}

struct Candidate {
  std::string text;
  double score = 0.0;
  std::size_t start = 0;
};

inline KeyphraseSet select_top_k(std::vector<Candidate> candidates, std::size_t k,
                                 const MatchConfig& cfg) {
  if (k == 0) throw UsageError("k must be at least 1");
  cfg.validate();
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.start < b.start;
                   });
  KeyphraseSet out;
  out.k_requested = k;
  std::vector<MatchKey> keys;
  std::vector<std::size_t> hits;
  for (auto& c : candidates) {
    MatchKey key(c.text);
    if (key.empty()) continue;
    hits.clear();
    for (std::size_t r = 0; r < keys.size(); ++r)
      if (fuzz(key, keys[r]) >= cfg.epsilon) hits.push_back(r);
    if (hits.empty()) {
      if (out.phrases.size() < k) {
        out.phrases.push_back({std::move(c.text), c.score, c.start});
        keys.push_back(std::move(key));
      }
      continue;
    }
    if (hits.size() == 1 && key.size() > keys[hits[0]].size()) {
      Keyphrase& kept = out.phrases[hits[0]];
      kept.text = std::move(c.text);
      kept.start = c.start;
      keys[hits[0]] = std::move(key);
    }
  }
  return out;
}

inline KeyphraseSet select_keyphrases(std::span<const PhraseSpan> spans,
                                      const TokenScoreMap& scores, std::size_t k,
                                      const MatchConfig& cfg,
                                      Aggregation agg = Aggregation::mean,
                                      std::size_t* missing = nullptr) {
  std::vector<Candidate> candidates;
  candidates.reserve(spans.size());
  for (const auto& s : spans)
    candidates.push_back({s.surface, phrase_score(s, scores, agg, missing), s.start});
  return select_top_k(std::move(candidates), k, cfg);
}

// Keyphrase JSONL: {"id":str,"keyphrases":[str],"scores":[float]}
struct KeyphraseRecord {
  std::string id;
  std::vector<std::string> keyphrases;
  std::vector<double> scores;

  friend bool operator==(const KeyphraseRecord&, const KeyphraseRecord&) = default;
};

inline KeyphraseRecord to_record(std::string id, const KeyphraseSet& set,
                                 PhraseOrder order = PhraseOrder::score) {
  KeyphraseRecord rec{std::move(id), {}, {}};
  for (const auto& p : ordered(set, order)) {
    rec.keyphrases.push_back(p.text);
    rec.scores.push_back(p.score);
  }
  return rec;
}

inline Json to_json(const KeyphraseRecord& rec) {
  Json j;
  j["id"] = rec.id;
  j["keyphrases"] = rec.keyphrases;
  j["scores"] = rec.scores;
  return j;
}

inline KeyphraseRecord keyphrase_record_from_json(const Json& j, std::size_t line) {
  KeyphraseRecord rec;
  rec.id = require_string(j, "id", line);
  try {
    rec.keyphrases = require(j, "keyphrases", line).get<std::vector<std::string>>();
    if (auto it = j.find("scores"); it != j.end())
      rec.scores = it->get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw SchemaError(line, std::string("bad keyphrase record: ") + e.what());
  }
  if (!rec.scores.empty() && rec.scores.size() != rec.keyphrases.size())
    throw SchemaError(line, "\"scores\" and \"keyphrases\" differ in length");
  return rec;
}

inline KeyphraseSet to_keyphrase_set(const KeyphraseRecord& rec) {
  KeyphraseSet set;
  set.k_requested = rec.keyphrases.size();
  for (std::size_t i = 0; i < rec.keyphrases.size(); ++i)
    set.phrases.push_back({rec.keyphrases[i], rec.scores.empty() ? 0.0 : rec.scores[i], i});
  return set;
}

inline std::vector<KeyphraseRecord> load_keyphrases(const std::filesystem::path& path) {
  std::vector<KeyphraseRecord> out;
  for_each_jsonl_file(path, [&](const Json& j, std::size_t line) {
    out.push_back(keyphrase_record_from_json(j, line));
  });
  return out;
}

inline void write_keyphrases(std::span<const KeyphraseRecord> records,
                             const std::filesystem::path& path) {
  std::string content;
  for (const auto& r : records) content += dump_line(to_json(r));
  write_file(path, content);
}

}  // namespace keysig
