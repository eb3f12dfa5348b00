#pragma once

// Minimal UTF-8 helpers. Internally all offsets are byte offsets into the
// original text; files exchanged with other tools use code point offsets.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "keysig/error.hpp"

namespace keysig::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

// Length in bytes of the sequence starting with lead byte `b`; invalid lead
// bytes count as a single byte.
inline std::size_t sequence_length(unsigned char b) noexcept {
  if (b < 0x80) return 1;
  if ((b >> 5) == 0x6) return 2;
  if ((b >> 4) == 0xE) return 3;
  if ((b >> 3) == 0x1E) return 4;
  return 1;
}

// Decodes one code point at `pos`, advancing it. Malformed input decodes to
// U+FFFD and consumes one byte, so decoding always makes progress.
inline char32_t next(std::string_view s, std::size_t& pos) noexcept {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  const std::size_t len = sequence_length(b0);
  if (len == 1) {
    ++pos;
    return b0 < 0x80 ? char32_t{b0} : kReplacement;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kReplacement;
  }
  char32_t cp = b0 & (0x7F >> len);
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += len;
  return cp;
}

inline std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) out.push_back(next(s, pos));
  return out;
}

inline std::size_t length(std::string_view s) noexcept {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size(); ++n) next(s, pos);
  return n;
}

inline char ascii_lower(char c) noexcept {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

// Collapses every whitespace run to one space and trims both ends.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

// Lowercased, whitespace-collapsed form used for all fuzzy comparisons.
inline std::string normalize(std::string_view s) {
  return to_lower(collapse_whitespace(s));
}

// Bidirectional byte <-> code point offset mapping for one text.
class OffsetIndex {
 public:
  explicit OffsetIndex(std::string_view text) {
    byte_of_cp_.reserve(text.size() + 1);
    for (std::size_t pos = 0; pos < text.size();) {
      byte_of_cp_.push_back(pos);
      next(text, pos);
    }
    byte_of_cp_.push_back(text.size());
  }

  std::size_t codepoints() const noexcept { return byte_of_cp_.size() - 1; }

  std::size_t to_byte(std::size_t cp) const {
    if (cp >= byte_of_cp_.size())
      throw DataError("code point offset " + std::to_string(cp) +
                      " beyond end of text");
    return byte_of_cp_[cp];
  }

  // Byte offsets that do not start a code point map to the code point that
  // contains them.
  std::size_t to_codepoint(std::size_t byte) const {
    auto it = std::upper_bound(byte_of_cp_.begin(), byte_of_cp_.end(), byte);
    return static_cast<std::size_t>(it - byte_of_cp_.begin()) - 1;
  }

 private:
  std::vector<std::size_t> byte_of_cp_;
};

}  // namespace keysig::utf8
