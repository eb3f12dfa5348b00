#pragma once

// Dataset ingestion, truncation, and sampling.
//
// Canonical JSONL record layout (one per line, UTF-8, LF):
//   {"id":"...","source":"...","summary":"...","meta":{...}}
// Files written by write_dataset() are in this form, and loading then
// re-serializing such a file reproduces it byte for byte.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "keysig/error.hpp"
#include "keysig/jsonl.hpp"
#include "keysig/utf8.hpp"

namespace keysig {

struct DocumentPair {
  std::string id;
  std::string source;
  std::string summary;
  std::map<std::string, std::string> meta;

  friend bool operator==(const DocumentPair&, const DocumentPair&) = default;
};

struct Dataset {
  std::string name;
  std::vector<DocumentPair> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  auto begin() const noexcept { return records.begin(); }
  auto end() const noexcept { return records.end(); }
  const DocumentPair& operator[](std::size_t i) const { return records[i]; }
};

inline Json to_json(const DocumentPair& doc) {
  Json meta = Json::object();
  for (const auto& [k, v] : doc.meta) meta[k] = v;
  Json j;
  j["id"] = doc.id;
  j["source"] = doc.source;
  j["summary"] = doc.summary;
  j["meta"] = std::move(meta);
  return j;
}

inline DocumentPair document_from_json(const Json& j, std::size_t line) {
  DocumentPair doc;
  doc.id = require_string(j, "id", line);
  doc.source = require_string(j, "source", line);
  doc.summary = require_string(j, "summary", line);
  if (doc.source.empty()) throw SchemaError(line, "field \"source\" is empty");
  if (auto it = j.find("meta"); it != j.end()) {
    if (!it->is_object()) throw SchemaError(line, "field \"meta\" must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string())
        throw SchemaError(line, "meta value \"" + k + "\" must be a string");
      doc.meta.emplace(k, v.get<std::string>());
    }
  }
  return doc;
}

inline Dataset parse_dataset(std::string_view content, std::string name = {},
                             const std::string& source_label = {}) {
  Dataset ds;
  ds.name = std::move(name);
  std::unordered_set<std::string> seen;
  for_each_jsonl(
      content,
      [&](const Json& j, std::size_t line) {
        DocumentPair doc = document_from_json(j, line);
        if (!seen.insert(doc.id).second)
          throw SchemaError(line, "duplicate id \"" + doc.id + "\"");
        ds.records.push_back(std::move(doc));
      },
      source_label);
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
  return parse_dataset(read_file(path), path.stem().string(), path.string());
}

inline std::string serialize_dataset(const Dataset& ds) {
  std::string out;
  for (const auto& doc : ds.records) out += dump_line(to_json(doc));
  return out;
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file(path, serialize_dataset(ds));
}

// Keeps the first `max_tokens` whitespace-delimited tokens of the source.
// The result is a byte prefix of the original; shorter sources are returned
// unchanged.
inline DocumentPair truncate_document(DocumentPair doc, std::size_t max_tokens) {
  if (max_tokens == 0) throw UsageError("max_tokens must be positive");
  const std::string& s = doc.source;
  std::size_t tokens = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && utf8::is_space(s[i])) ++i;
    if (i == s.size()) break;
    while (i < s.size() && !utf8::is_space(s[i])) ++i;
    if (++tokens == max_tokens) {
      doc.source.resize(i);
      break;
    }
  }
  return doc;
}

inline Dataset truncate_dataset(Dataset ds, std::size_t max_tokens) {
  for (auto& doc : ds.records) doc = truncate_document(std::move(doc), max_tokens);
  return ds;
}

// Unbiased integer in [0, bound) from a 64-bit generator by rejection.
// std::mt19937_64's output sequence is fixed by the standard, and unlike
// std::uniform_int_distribution this reduction is identical everywhere.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = gen();
    if (r >= threshold) return r % bound;
  }
}

// Deterministic subset of n records for a given seed, in original order.
// Partial Fisher-Yates over record indices driven by mt19937_64(seed).
inline Dataset sample_subset(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  if (n > ds.size())
    throw SizeError("cannot sample " + std::to_string(n) + " records from a dataset of " +
                    std::to_string(ds.size()));
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(gen, idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  Dataset out;
  out.name = ds.name;
  out.records.reserve(n);
  for (auto i : idx) out.records.push_back(ds.records[i]);
  return out;
}

}  // namespace keysig
