#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "keysig/error.hpp"

namespace keysig {

using Json = nlohmann::ordered_json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

// Splits JSONL content into lines. A final LF is a terminator, not an extra
// empty record; an empty file has zero lines.
inline std::vector<std::string_view> split_lines(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    lines.push_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

// Parses each line as a JSON object and hands it to `fn` with its 1-based
// line number. Blank lines are skipped. Parse failures become SchemaError
// naming the line.
inline void for_each_jsonl(std::string_view content,
                           const std::function<void(const Json&, std::size_t)>& fn,
                           const std::string& source = {}) {
  const auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string_view::npos) continue;
    Json obj;
    try {
      obj = Json::parse(lines[i]);
    } catch (const Json::parse_error& e) {
      throw SchemaError(i + 1, std::string("malformed JSON: ") + e.what(), source);
    }
    if (!obj.is_object())
      throw SchemaError(i + 1, "record is not a JSON object", source);
    try {
      fn(obj, i + 1);
    } catch (const SchemaError& e) {
      if (source.empty() || !e.source().empty()) throw;
      throw SchemaError(e.line(), e.detail(), source);
    }
  }
}

inline void for_each_jsonl_file(const std::filesystem::path& path,
                                const std::function<void(const Json&, std::size_t)>& fn) {
  if (!std::filesystem::exists(path))
    throw DataError("no such file: " + path.string());
  for_each_jsonl(read_file(path), fn, path.string());
}

// Compact one-line encoding; non-ASCII is emitted as raw UTF-8.
inline std::string dump_line(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::replace) + "\n";
}

// Field accessors that turn type mismatches into line-numbered schema errors.
inline const Json& require(const Json& obj, std::string_view key, std::size_t line) {
  auto it = obj.find(std::string(key));
  if (it == obj.end())
    throw SchemaError(line, "missing required field \"" + std::string(key) + "\"");
  return *it;
}

inline std::string require_string(const Json& obj, std::string_view key,
                                  std::size_t line) {
  const Json& v = require(obj, key, line);
  if (!v.is_string())
    throw SchemaError(line, "field \"" + std::string(key) + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace keysig
