#pragma once

// Prompt templates and the summarization run drivers.
//
// A template is UTF-8 text containing `<text>` exactly once and at most one
// keyphrase placeholder, spelled either `<key_phrases>` or `<keywords>`.
// Keyphrases are inserted joined by ", ".

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "keysig/corpus.hpp"
#include "keysig/error.hpp"
#include "keysig/jsonl.hpp"
#include "keysig/llm_client.hpp"
#include "keysig/matching.hpp"
#include "keysig/metrics.hpp"
#include "keysig/parallel.hpp"
#include "keysig/phrasing.hpp"
#include "keysig/scoring.hpp"
#include "keysig/selection.hpp"

namespace keysig {

inline constexpr std::string_view kTextPlaceholder = "<text>";
inline constexpr std::string_view kKeyphrasePlaceholders[] = {"<key_phrases>", "<keywords>"};

namespace detail {

inline std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

}  // namespace detail

class PromptTemplate {
 public:
  PromptTemplate(std::string name, std::string body, std::string target_model_hint = {})
      : name_(std::move(name)), body_(std::move(body)), hint_(std::move(target_model_hint)) {
    const auto texts = detail::count_occurrences(body_, kTextPlaceholder);
    if (texts != 1)
      throw TemplateError("template \"" + name_ + "\": <text> must appear exactly once, found " +
                          std::to_string(texts));
    std::size_t kps = 0;
    for (auto p : kKeyphrasePlaceholders) kps += detail::count_occurrences(body_, p);
    if (kps > 1)
      throw TemplateError("template \"" + name_ + "\": keyphrase placeholder appears " +
                          std::to_string(kps) + " times");
    expects_keyphrases_ = kps == 1;
  }

  const std::string& name() const noexcept { return name_; }
  const std::string& body() const noexcept { return body_; }
  const std::string& target_model_hint() const noexcept { return hint_; }
  bool expects_keyphrases() const noexcept { return expects_keyphrases_; }

  // Template files are stored verbatim; serialization is the body itself.
  const std::string& serialize() const noexcept { return body_; }

 private:
  std::string name_;
  std::string body_;
  std::string hint_;
  bool expects_keyphrases_ = false;
};

// Name is the file stem, the model hint its parent directory name.
inline PromptTemplate load_template(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
  return PromptTemplate(path.stem().string(), read_file(path),
                        path.parent_path().filename().string());
}

inline std::string join_keyphrases(std::span<const std::string> phrases) {
  std::string out;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (i) out += ", ";
    out += phrases[i];
  }
  return out;
}

// Substitutes placeholders in one left-to-right pass, so placeholder-like
// strings inside the document are never expanded.
inline std::string render_prompt(const PromptTemplate& tpl, const DocumentPair& doc,
                                 const std::optional<std::vector<std::string>>& keyphrases) {
  if (tpl.expects_keyphrases() && !keyphrases)
    throw TemplateError("template \"" + tpl.name() + "\" expects keyphrases but none were given");
  if (!tpl.expects_keyphrases() && keyphrases)
    throw TemplateError("template \"" + tpl.name() + "\" has no keyphrase placeholder");
  const std::string_view body = tpl.body();
  std::string out;
  out.reserve(body.size() + doc.source.size());
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t next = body.size();
    std::string_view hit;
    auto consider = [&](std::string_view p) {
      const auto at = body.find(p, pos);
      if (at != std::string_view::npos && at < next) {
        next = at;
        hit = p;
      }
    };
    consider(kTextPlaceholder);
    for (auto p : kKeyphrasePlaceholders) consider(p);
    out.append(body.substr(pos, next - pos));
    if (hit.empty()) break;
    if (hit == kTextPlaceholder)
      out += doc.source;
    else
      out += join_keyphrases(*keyphrases);
    pos = next + hit.size();
  }
  return out;
}

inline std::string render_prompt(const PromptTemplate& tpl, const DocumentPair& doc,
                                 const KeyphraseSet* kps,
                                 PhraseOrder order = PhraseOrder::score) {
  std::optional<std::vector<std::string>> texts;
  if (kps) {
    texts.emplace();
    for (const auto& p : ordered(*kps, order)) texts->push_back(p.text);
  }
  return render_prompt(tpl, doc, texts);
}

// Supplies the keyphrase list for a (truncated) document.
using KeyphraseProvider = std::function<std::vector<std::string>(const DocumentPair&)>;

struct SelectionOptions {
  std::size_t k = kDefaultK;
  MatchConfig match;
  Granularity granularity = Granularity::phrase;
  Aggregation aggregation = Aggregation::mean;
  PhraseOrder order = PhraseOrder::score;
};

inline KeyphraseSet extract_keyphrases(const DocumentPair& doc, const ScoreSource& source,
                                       const SelectionOptions& opts,
                                       const StopwordSet& stopwords,
                                       std::size_t* missing = nullptr) {
  const auto tokens = tokenize(doc.source, stopwords);
  const auto spans = segment_tokens(doc.source, tokens, opts.granularity);
  const TokenScoreMap scores = source.score(doc);
  if (missing) *missing += scores.missing;
  return select_keyphrases(spans, scores, opts.k, opts.match, opts.aggregation, missing);
}

inline KeyphraseProvider scorer_provider(const ScoreSource& source, SelectionOptions opts,
                                         StopwordSet stopwords) {
  return [&source, opts, stopwords = std::move(stopwords)](const DocumentPair& doc) {
    const auto set = extract_keyphrases(doc, source, opts, stopwords);
    std::vector<std::string> out;
    for (const auto& p : ordered(set, opts.order)) out.push_back(p.text);
    return out;
  };
}

// Keyphrases from a precomputed keyphrase JSONL (e.g. an oracle file),
// truncated to the first k entries.
inline KeyphraseProvider file_provider(std::span<const KeyphraseRecord> records,
                                       std::size_t k = kAllPhrases) {
  std::unordered_map<std::string, std::vector<std::string>> by_id;
  for (const auto& r : records) {
    auto list = r.keyphrases;
    if (list.size() > k) list.resize(k);
    by_id.emplace(r.id, std::move(list));
  }
  return [by_id = std::move(by_id)](const DocumentPair& doc) {
    auto it = by_id.find(doc.id);
    if (it == by_id.end()) throw DataError("no keyphrases for document \"" + doc.id + "\"");
    return it->second;
  };
}

struct RunOptions {
  std::size_t max_tokens = 4000;  // source truncation, whitespace tokens
  double failure_cap = 0.1;       // tolerated fraction of failed documents
  std::size_t jobs = 1;
  CompletionRequest request_defaults{};
};

struct RunFailure {
  std::string id;
  std::string message;
};

struct RunReport {
  std::size_t documents = 0;
  std::size_t written = 0;
  std::size_t completion_calls = 0;
  std::vector<RunFailure> failures;
  double mean_summary_words = 0.0;

  double failure_ratio() const noexcept {
    return documents ? static_cast<double>(failures.size()) / static_cast<double>(documents)
                     : 0.0;
  }
};

class RunFailedError : public Error {
 public:
  RunFailedError(const RunReport& report, double cap)
      : Error(std::to_string(report.failures.size()) + " of " +
              std::to_string(report.documents) + " documents failed (cap " +
              std::to_string(cap) + ")" +
              (report.failures.empty() ? "" : "; first: " + report.failures.front().id + ": " +
                                                  report.failures.front().message)),
        report_(report) {}
  const RunReport& report() const noexcept { return report_; }
  ExitCode exit_code() const noexcept override { return ExitCode::transport; }

 private:
  RunReport report_;
};

namespace detail {

struct DocOutcome {
  std::optional<Json> record;
  std::optional<RunFailure> failure;
  std::size_t calls = 0;
  std::size_t summary_words = 0;
};

inline RunReport finish_run(const Dataset& ds, std::vector<DocOutcome>& outcomes,
                            const RunOptions& opts, const std::filesystem::path& out) {
  RunReport report;
  report.documents = ds.size();
  std::string content;
  double words = 0.0;
  for (auto& o : outcomes) {
    report.completion_calls += o.calls;
    if (o.failure) {
      report.failures.push_back(std::move(*o.failure));
      continue;
    }
    content += dump_line(*o.record);
    words += static_cast<double>(o.summary_words);
    ++report.written;
  }
  report.mean_summary_words = report.written ? words / static_cast<double>(report.written) : 0.0;
  write_file(out, content);
  if (report.failure_ratio() > opts.failure_cap) throw RunFailedError(report, opts.failure_cap);
  return report;
}

}  // namespace detail

// Summarizes every document, writing {"id","prompt","summary","keyphrases"}
// JSONL in dataset order. Per-document failures are recorded and skipped;
// the run throws RunFailedError when their share exceeds failure_cap.
inline RunReport run_summarization(const Dataset& ds, const PromptTemplate& tpl,
                                   const std::optional<KeyphraseProvider>& keyphrases,
                                   CompletionClient& client, const RunOptions& opts,
                                   const std::filesystem::path& out) {
  if (tpl.expects_keyphrases() && !keyphrases)
    throw UsageError("template \"" + tpl.name() + "\" expects keyphrases; give a keyphrase source");
  if (!tpl.expects_keyphrases() && keyphrases)
    throw UsageError("template \"" + tpl.name() + "\" has no keyphrase placeholder");

  auto outcomes = parallel_map(ds.size(), opts.jobs, [&](std::size_t i) {
    detail::DocOutcome o;
    const DocumentPair doc = truncate_document(ds[i], opts.max_tokens);
    try {
      std::optional<std::vector<std::string>> kps;
      if (keyphrases) kps = (*keyphrases)(doc);
      CompletionRequest req = opts.request_defaults;
      req.prompt = render_prompt(tpl, doc, kps);
      ++o.calls;
      const auto resp = client.complete(req);
      Json j;
      j["id"] = doc.id;
      j["prompt"] = req.prompt;
      j["summary"] = resp.text;
      j["keyphrases"] = kps.value_or(std::vector<std::string>{});
      o.summary_words = word_count(resp.text);
      o.record = std::move(j);
    } catch (const Error& e) {
      o.failure = RunFailure{doc.id, e.what()};
    }
    return o;
  });
  return detail::finish_run(ds, outcomes, opts, out);
}

// Extract-then-abstract baseline: pass 1 renders `extract_tpl` over the
// source, pass 2 renders `abstract_tpl` over the pass-1 output. Writes
// {"id","extract_prompt","intermediate","prompt","summary","keyphrases"}.
// An empty pass-1 output fails the document and skips pass 2.
inline RunReport two_stage_summarize(const Dataset& ds, const PromptTemplate& extract_tpl,
                                     const PromptTemplate& abstract_tpl,
                                     CompletionClient& client, const RunOptions& opts,
                                     const std::filesystem::path& out) {
  for (const auto* t : {&extract_tpl, &abstract_tpl})
    if (t->expects_keyphrases())
      throw UsageError("two-stage template \"" + t->name() + "\" must not take keyphrases");

  auto outcomes = parallel_map(ds.size(), opts.jobs, [&](std::size_t i) {
    detail::DocOutcome o;
    const DocumentPair doc = truncate_document(ds[i], opts.max_tokens);
    try {
      CompletionRequest first = opts.request_defaults;
      first.prompt = render_prompt(extract_tpl, doc, std::nullopt);
      ++o.calls;
      const auto extracted = client.complete(first);
      if (utf8::collapse_whitespace(extracted.text).empty()) {
        o.failure = RunFailure{doc.id, "pass 1 returned empty output"};
        return o;
      }
      DocumentPair intermediate = doc;
      intermediate.source = extracted.text;
      CompletionRequest second = opts.request_defaults;
      second.prompt = render_prompt(abstract_tpl, intermediate, std::nullopt);
      ++o.calls;
      const auto final_resp = client.complete(second);
      Json j;
      j["id"] = doc.id;
      j["extract_prompt"] = first.prompt;
      j["intermediate"] = extracted.text;
      j["prompt"] = second.prompt;
      j["summary"] = final_resp.text;
      j["keyphrases"] = Json::array();
      o.summary_words = word_count(final_resp.text);
      o.record = std::move(j);
    } catch (const Error& e) {
      o.failure = RunFailure{doc.id, e.what()};
    }
    return o;
  });
  return detail::finish_run(ds, outcomes, opts, out);
}

}  // namespace keysig
