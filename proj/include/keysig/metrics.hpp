#pragma once

// ROUGE-1 / ROUGE-L, keyphrase recall@K, and corpus-level run evaluation.
//
// ROUGE tokenization: ASCII-lowercase, split on anything that is not an
// ASCII letter or digit (bytes of multi-byte UTF-8 characters count as
// letters), no stemming, no stopword removal.

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "keysig/corpus.hpp"
#include "keysig/error.hpp"
#include "keysig/jsonl.hpp"
#include "keysig/matching.hpp"
#include "keysig/selection.hpp"

namespace keysig {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const RougeScore&, const RougeScore&) = default;
};

inline RougeScore make_rouge(double p, double r) {
  return {p, r, (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0};
}

inline std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool alnum = c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                       (c >= 'A' && c <= 'Z');
    if (alnum) {
      cur.push_back(utf8::ascii_lower(ch));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline RougeScore rouge1(std::string_view candidate, std::string_view reference) {
  const auto cand = rouge_tokens(candidate);
  const auto ref = rouge_tokens(reference);
  if (cand.empty() || ref.empty()) return {};
  std::unordered_map<std::string_view, std::size_t> ref_counts;
  for (const auto& w : ref) ++ref_counts[w];
  std::size_t overlap = 0;
  for (const auto& w : cand) {
    auto it = ref_counts.find(w);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return make_rouge(static_cast<double>(overlap) / static_cast<double>(cand.size()),
                    static_cast<double>(overlap) / static_cast<double>(ref.size()));
}

inline RougeScore rougeL(std::string_view candidate, std::string_view reference) {
  const auto cand = rouge_tokens(candidate);
  const auto ref = rouge_tokens(reference);
  if (cand.empty() || ref.empty()) return {};
  std::vector<std::size_t> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
  for (const auto& c : cand) {
    for (std::size_t j = 1; j <= ref.size(); ++j)
      cur[j] = c == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  const auto lcs = static_cast<double>(prev[ref.size()]);
  return make_rouge(lcs / static_cast<double>(cand.size()),
                    lcs / static_cast<double>(ref.size()));
}

inline constexpr std::size_t kAllPhrases = std::numeric_limits<std::size_t>::max();

struct RecallAtK {
  std::size_t k = 0;
  double recall = 0.0;
  std::size_t matched = 0;
  std::size_t total = 0;
  // Set when the oracle is empty; recall is then reported as 1.0.
  bool empty_oracle = false;
};

// Fraction of oracle phrases fuzz-matched (>= epsilon) by any of the first
// min(k, |predicted|) predicted phrases. Each oracle phrase counts once.
inline RecallAtK recall_at_k(const KeyphraseSet& predicted,
                             std::span<const std::string> oracle, std::size_t k,
                             const MatchConfig& cfg) {
  cfg.validate();
  RecallAtK r;
  r.k = k;
  r.total = oracle.size();
  if (oracle.empty()) {
    r.recall = 1.0;
    r.empty_oracle = true;
    return r;
  }
  const std::size_t top = std::min(k, predicted.size());
  std::vector<MatchKey> pred;
  pred.reserve(top);
  for (std::size_t i = 0; i < top; ++i) pred.emplace_back(predicted.phrases[i].text);
  for (const auto& o : oracle) {
    const MatchKey ok(o);
    if (ok.empty()) continue;
    for (const auto& p : pred) {
      if (!p.empty() && fuzz(p, ok) >= cfg.epsilon) {
        ++r.matched;
        break;
      }
    }
  }
  r.recall = static_cast<double>(r.matched) / static_cast<double>(r.total);
  return r;
}

inline RecallAtK recall_at_k(const KeyphraseSet& predicted,
                             std::span<const PhraseSpan> oracle, std::size_t k,
                             const MatchConfig& cfg) {
  std::vector<std::string> texts;
  texts.reserve(oracle.size());
  for (const auto& s : oracle) texts.push_back(s.text);
  return recall_at_k(predicted, std::span<const std::string>(texts), k, cfg);
}

inline std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = utf8::is_space(c);
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Run evaluation

struct DocEvaluation {
  std::string id;
  RougeScore r1;
  RougeScore rl;
  std::size_t len_words = 0;
};

struct RecallSummary {
  std::size_t k = 0;
  std::size_t n = 0;
  double mean_recall = 0.0;
  std::size_t matched = 0;
  std::size_t total = 0;
};

struct EvalReport {
  std::size_t n = 0;
  RougeScore r1;
  RougeScore rl;
  double mean_len_words = 0.0;
  std::vector<RecallSummary> recall;
  std::vector<std::string> flags;
  std::vector<DocEvaluation> per_doc;
};

struct EvalOptions {
  std::optional<std::filesystem::path> keyphrases;
  std::optional<std::filesystem::path> oracle;
  std::vector<std::size_t> ks;
  MatchConfig match;
};

struct RunOutputRecord {
  std::string id;
  std::string summary;
};

inline std::vector<RunOutputRecord> load_run_output(const std::filesystem::path& path) {
  std::vector<RunOutputRecord> out;
  for_each_jsonl_file(path, [&](const Json& j, std::size_t line) {
    out.push_back({require_string(j, "id", line), require_string(j, "summary", line)});
  });
  return out;
}

namespace detail {

inline std::string join_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
  return s;
}

inline RougeScore mean_of(const std::vector<DocEvaluation>& docs, RougeScore DocEvaluation::*m) {
  RougeScore acc;
  for (const auto& d : docs) {
    acc.precision += (d.*m).precision;
    acc.recall += (d.*m).recall;
    acc.f1 += (d.*m).f1;
  }
  const auto n = static_cast<double>(docs.size());
  if (!docs.empty()) acc = {acc.precision / n, acc.recall / n, acc.f1 / n};
  return acc;
}

}  // namespace detail

// Scores run outputs against dataset references. Means are taken in run
// file order. When both keyphrase and oracle files are given, recall@K is
// averaged over the documents in the keyphrase file.
inline EvalReport evaluate_run(std::span<const RunOutputRecord> outputs, const Dataset& ds,
                               const EvalOptions& opts = {}) {
  std::unordered_map<std::string_view, const DocumentPair*> by_id;
  for (const auto& d : ds) by_id.emplace(d.id, &d);

  EvalReport report;
  std::vector<std::string> missing;
  for (const auto& o : outputs)
    if (!by_id.count(o.id)) missing.push_back(o.id);
  if (!missing.empty())
    throw DataError("run output ids not in dataset: " + detail::join_ids(missing));

  double len_total = 0.0;
  for (const auto& o : outputs) {
    const DocumentPair& doc = *by_id.at(o.id);
    if (rouge_tokens(doc.summary).empty()) report.flags.push_back("empty_reference:" + o.id);
    DocEvaluation e{o.id, rouge1(o.summary, doc.summary), rougeL(o.summary, doc.summary),
                    word_count(o.summary)};
    len_total += static_cast<double>(e.len_words);
    report.per_doc.push_back(std::move(e));
  }
  report.n = report.per_doc.size();
  report.r1 = detail::mean_of(report.per_doc, &DocEvaluation::r1);
  report.rl = detail::mean_of(report.per_doc, &DocEvaluation::rl);
  report.mean_len_words = report.n ? len_total / static_cast<double>(report.n) : 0.0;

  if (opts.keyphrases.has_value() != opts.oracle.has_value())
    throw UsageError("recall@K needs both a keyphrase file and an oracle file");
  if (opts.keyphrases) {
    const auto predicted = load_keyphrases(*opts.keyphrases);
    std::unordered_map<std::string, KeyphraseRecord> oracle;
    for (auto& r : load_keyphrases(*opts.oracle)) oracle.emplace(r.id, std::move(r));
    missing.clear();
    for (const auto& p : predicted)
      if (!oracle.count(p.id)) missing.push_back(p.id);
    if (!missing.empty())
      throw DataError("keyphrase ids not in oracle file: " + detail::join_ids(missing));
    for (const auto& p : predicted)
      if (oracle.at(p.id).keyphrases.empty()) report.flags.push_back("empty_oracle:" + p.id);
    for (std::size_t k : opts.ks) {
      RecallSummary s{k, predicted.size(), 0.0, 0, 0};
      for (const auto& p : predicted) {
        const auto r = recall_at_k(to_keyphrase_set(p),
                                   std::span<const std::string>(oracle.at(p.id).keyphrases),
                                   k, opts.match);
        s.mean_recall += r.recall;
        s.matched += r.matched;
        s.total += r.total;
      }
      if (s.n) s.mean_recall /= static_cast<double>(s.n);
      report.recall.push_back(s);
    }
  }
  return report;
}

inline EvalReport evaluate_run(const std::filesystem::path& run_output, const Dataset& ds,
                               const EvalOptions& opts = {}) {
  const auto outputs = load_run_output(run_output);
  return evaluate_run(std::span<const RunOutputRecord>(outputs), ds, opts);
}

inline Json to_json(const RougeScore& s) {
  return Json{{"p", s.precision}, {"r", s.recall}, {"f", s.f1}};
}

inline Json to_json(const EvalReport& r) {
  Json recall = Json::object();
  for (const auto& s : r.recall)
    recall[std::to_string(s.k)] = Json{{"recall", s.mean_recall}, {"matched", s.matched},
                                      {"total", s.total}, {"n", s.n}};
  Json per_doc = Json::array();
  for (const auto& d : r.per_doc)
    per_doc.push_back(Json{{"id", d.id}, {"r1", to_json(d.r1)}, {"rl", to_json(d.rl)},
                           {"len_words", d.len_words}});
  Json j;
  j["n"] = r.n;
  j["r1"] = to_json(r.r1);
  j["rl"] = to_json(r.rl);
  j["mean_len_words"] = r.mean_len_words;
  j["recall_at_k"] = std::move(recall);
  j["flags"] = r.flags;
  j["per_doc"] = std::move(per_doc);
  return j;
}

inline std::string format_table(const EvalReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %8s\n", "metric", "P", "R", "F1");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-10s %8.4f %8.4f %8.4f\n", "ROUGE-1", r.r1.precision,
                r.r1.recall, r.r1.f1);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-10s %8.4f %8.4f %8.4f\n", "ROUGE-L", r.rl.precision,
                r.rl.recall, r.rl.f1);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-10s %8zu\n%-10s %8.2f\n", "docs", r.n, "len_words",
                r.mean_len_words);
  out += buf;
  for (const auto& s : r.recall) {
    std::snprintf(buf, sizeof buf, "R@%-8zu %8.4f  (%zu/%zu oracle phrases, %zu docs)\n", s.k,
                  s.mean_recall, s.matched, s.total, s.n);
    out += buf;
  }
  return out;
}

}  // namespace keysig
