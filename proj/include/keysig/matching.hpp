#pragma once

// Character-level fuzzy matching and everything built on it: salience
// labels for training, training-record emission, and oracle keyphrases.
//
//   fuzz(a, b) = |LCS(a, b)| / max(|a|, |b|)
//
// LCS is the longest common *subsequence* over Unicode code points of the
// normalized (lowercased, whitespace-collapsed) strings.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "keysig/corpus.hpp"
#include "keysig/error.hpp"
#include "keysig/jsonl.hpp"
#include "keysig/parallel.hpp"
#include "keysig/phrasing.hpp"
#include "keysig/stopwords.hpp"
#include "keysig/utf8.hpp"

namespace keysig {

// Strings longer than this are truncated before scoring to bound the DP.
inline constexpr std::size_t kMaxScoredChars = 256;

inline constexpr double kDefaultEpsilon = 0.7;

struct MatchConfig {
  double epsilon = kDefaultEpsilon;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
      throw UsageError("epsilon must be in (0, 1], got " + std::to_string(epsilon));
  }
};

// Length of the longest common subsequence of two code point sequences.
inline std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (char32_t ca : a) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = (ca == b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::size_t lcs_length(std::string_view a, std::string_view b) {
  return lcs_length(utf8::decode(a), utf8::decode(b));
}

// Normalized text decoded and capped, ready for repeated fuzz calls.
class MatchKey {
 public:
  MatchKey() = default;
  explicit MatchKey(std::string_view text) : chars_(utf8::decode(utf8::normalize(text))) {
    if (chars_.size() > kMaxScoredChars) chars_.resize(kMaxScoredChars);
  }
  std::u32string_view chars() const noexcept { return chars_; }
  std::size_t size() const noexcept { return chars_.size(); }
  bool empty() const noexcept { return chars_.empty(); }

 private:
  std::u32string chars_;
};

inline double fuzz(const MatchKey& a, const MatchKey& b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) throw UndefinedInputError("fuzz is undefined for two empty strings");
  return static_cast<double>(lcs_length(a.chars(), b.chars())) /
         static_cast<double>(longest);
}

inline double fuzz(std::string_view a, std::string_view b) {
  return fuzz(MatchKey(a), MatchKey(b));
}

inline std::vector<MatchKey> match_keys(std::span<const PhraseSpan> spans) {
  std::vector<MatchKey> keys;
  keys.reserve(spans.size());
  for (const auto& s : spans) keys.emplace_back(s.text);
  return keys;
}

struct LabeledPhrase {
  PhraseSpan span;
  int label = 0;
  double best_match_score = 0.0;
  std::optional<std::size_t> best_match_index;
};

// Labels each source phrase 1 when its best fuzz against any summary phrase
// reaches epsilon. The first summary phrase attaining the maximum wins.
inline std::vector<LabeledPhrase> label_phrases(std::span<const PhraseSpan> source_phrases,
                                                std::span<const PhraseSpan> summary_phrases,
                                                const MatchConfig& cfg) {
  cfg.validate();
  const auto summary_keys = match_keys(summary_phrases);
  std::vector<LabeledPhrase> out;
  out.reserve(source_phrases.size());
  for (const auto& sp : source_phrases) {
    LabeledPhrase lp{sp, 0, 0.0, std::nullopt};
    const MatchKey key(sp.text);
    for (std::size_t j = 0; j < summary_keys.size(); ++j) {
      if (key.empty() && summary_keys[j].empty()) continue;
      const double f = fuzz(key, summary_keys[j]);
      if (!lp.best_match_index || f > lp.best_match_score) {
        lp.best_match_score = f;
        lp.best_match_index = j;
      }
    }
    lp.label = lp.best_match_index && lp.best_match_score >= cfg.epsilon ? 1 : 0;
    out.push_back(std::move(lp));
  }
  return out;
}

struct LabeledSpan {
  std::size_t start = 0;  // code point offsets in the record text
  std::size_t end = 0;
  int label = 0;

  friend bool operator==(const LabeledSpan&, const LabeledSpan&) = default;
};

// One line of the training-record JSONL consumed by the trainer:
//   {"id":str,"text":str,"phrases":[{"start":int,"end":int,"label":0|1}]}
struct TrainingRecord {
  std::string doc_id;
  std::string text;
  std::vector<LabeledSpan> phrases;

  friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

inline Json to_json(const TrainingRecord& rec) {
  Json phrases = Json::array();
  for (const auto& p : rec.phrases)
    phrases.push_back(Json{{"start", p.start}, {"end", p.end}, {"label", p.label}});
  Json j;
  j["id"] = rec.doc_id;
  j["text"] = rec.text;
  j["phrases"] = std::move(phrases);
  return j;
}

inline TrainingRecord training_record_from_json(const Json& j, std::size_t line) {
  TrainingRecord rec;
  rec.doc_id = require_string(j, "id", line);
  rec.text = require_string(j, "text", line);
  const Json& phrases = require(j, "phrases", line);
  if (!phrases.is_array()) throw SchemaError(line, "\"phrases\" must be an array");
  for (const auto& p : phrases) {
    LabeledSpan s;
    try {
      s.start = p.at("start").get<std::size_t>();
      s.end = p.at("end").get<std::size_t>();
      s.label = p.at("label").get<int>();
    } catch (const Json::exception& e) {
      throw SchemaError(line, std::string("bad phrase entry: ") + e.what());
    }
    if (s.label != 0 && s.label != 1) throw SchemaError(line, "label must be 0 or 1");
    if (s.start >= s.end) throw SchemaError(line, "phrase span is empty");
    if (!rec.phrases.empty() && s.start < rec.phrases.back().end)
      throw SchemaError(line, "phrase spans overlap or are unsorted");
    rec.phrases.push_back(s);
  }
  return rec;
}

inline TrainingRecord make_training_record(const DocumentPair& doc, Granularity g,
                                           const MatchConfig& cfg,
                                           const StopwordSet& stopwords) {
  const auto source = segment(doc.source, g, stopwords);
  const auto summary = segment(doc.summary, g, stopwords);
  const auto labeled = label_phrases(source, summary, cfg);
  const utf8::OffsetIndex index(doc.source);
  TrainingRecord rec{doc.id, doc.source, {}};
  rec.phrases.reserve(labeled.size());
  for (const auto& lp : labeled)
    rec.phrases.push_back({index.to_codepoint(lp.span.start),
                           index.to_codepoint(lp.span.end), lp.label});
  return rec;
}

struct EmitReport {
  std::size_t written = 0;
  std::size_t skipped_empty_summary = 0;
};

// Writes one training record per document with a non-empty summary.
inline EmitReport emit_training_records(const Dataset& ds, Granularity g,
                                        const MatchConfig& cfg, const StopwordSet& stopwords,
                                        const std::filesystem::path& out,
                                        std::size_t jobs = 1) {
  cfg.validate();
  auto lines = parallel_map(ds.size(), jobs, [&](std::size_t i) -> std::string {
    const auto& doc = ds[i];
    if (utf8::collapse_whitespace(doc.summary).empty()) return {};
    return dump_line(to_json(make_training_record(doc, g, cfg, stopwords)));
  });
  EmitReport report;
  std::string content;
  for (auto& line : lines) {
    if (line.empty()) {
      ++report.skipped_empty_summary;
      continue;
    }
    content += line;
    ++report.written;
  }
  write_file(out, content);
  return report;
}

struct OracleMatch {
  std::size_t source_index = 0;
  double score = 0.0;  // best fuzz over the summary phrases mapped here
};

// For each summary phrase, the source phrase with the highest fuzz (earliest
// on ties). A source phrase chosen by several summary phrases appears once,
// at its first selection, with the maximum score.
inline std::vector<OracleMatch> oracle_matches(std::span<const PhraseSpan> source,
                                               std::span<const PhraseSpan> summary) {
  std::vector<OracleMatch> out;
  if (source.empty()) return out;
  const auto source_keys = match_keys(source);
  for (const auto& q : summary) {
    const MatchKey qk(q.text);
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < source_keys.size(); ++i) {
      const double f = fuzz(source_keys[i], qk);
      if (f > best_score) {
        best_score = f;
        best = i;
      }
    }
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const OracleMatch& m) { return m.source_index == best; });
    if (it == out.end())
      out.push_back({best, best_score});
    else
      it->score = std::max(it->score, best_score);
  }
  return out;
}

inline std::vector<PhraseSpan> oracle_keyphrases(const DocumentPair& doc, Granularity g,
                                                 const StopwordSet& stopwords) {
  const auto source = segment(doc.source, g, stopwords);
  const auto summary = segment(doc.summary, g, stopwords);
  std::vector<PhraseSpan> out;
  for (const auto& m : oracle_matches(source, summary)) out.push_back(source[m.source_index]);
  return out;
}

struct ExternalOracleMatch {
  std::size_t summary_index = 0;
  double score = 0.0;  // best fuzz against any source phrase, below epsilon
};

// Summary phrases with no epsilon-level match anywhere in the source.
// Repeated phrases with identical normalized text are kept once.
inline std::vector<ExternalOracleMatch> external_oracle_matches(
    std::span<const PhraseSpan> source, std::span<const PhraseSpan> summary,
    const MatchConfig& cfg) {
  cfg.validate();
  const auto source_keys = match_keys(source);
  std::vector<ExternalOracleMatch> out;
  std::unordered_set<std::string> seen;
  for (std::size_t j = 0; j < summary.size(); ++j) {
    const MatchKey qk(summary[j].text);
    double best = 0.0;
    for (const auto& sk : source_keys) best = std::max(best, fuzz(sk, qk));
    if (best < cfg.epsilon && seen.insert(summary[j].text).second) out.push_back({j, best});
  }
  return out;
}

inline std::vector<PhraseSpan> external_oracle_keyphrases(const DocumentPair& doc,
                                                          Granularity g,
                                                          const MatchConfig& cfg,
                                                          const StopwordSet& stopwords) {
  const auto source = segment(doc.source, g, stopwords);
  const auto summary = segment(doc.summary, g, stopwords);
  std::vector<PhraseSpan> out;
  for (const auto& m : external_oracle_matches(source, summary, cfg))
    out.push_back(summary[m.summary_index]);
  return out;
}

}  // namespace keysig
