#pragma once

// Corpus normalization: punctuation/symbol removal, digit-run collapsing and
// lowercasing, applied in that order, followed by whitespace collapsing.
//
//   "Take 250 mg TWICE!"  ->  "take 0 mg twice"
//   "p53, BRCA-1"         ->  "p0 brca 0"
//   "2.5"                 ->  "0 0"     (the '.' is punctuation, removed first)
//
// A "number" is a maximal run of ASCII digits. The punctuation class is
// Unicode general categories P* and S*, approximated by a range table (no
// ICU dependency); lowercasing covers ASCII, Latin-1, Latin Extended-A,
// Greek, basic Cyrillic and fullwidth Latin. Invalid UTF-8 bytes pass
// through unchanged.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sparsembed {

struct NormalizationRules {
  bool strip_punctuation = true;
  bool collapse_numbers = true;
  bool lowercase = true;
};

namespace textprep_detail {

// Invalid bytes decode to 0xDC00 + byte (a lone low surrogate, never produced
// by valid UTF-8) and are re-emitted verbatim.
inline constexpr char32_t kRawByteBase = 0xDC00;

inline std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len != 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (ok) {
      static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
      ok = cp >= kMin[len] && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
    }
    if (!ok) {
      out.push_back(kRawByteBase + b0);
      ++i;
    } else {
      out.push_back(cp);
      i += len;
    }
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp >= kRawByteBase && cp < kRawByteBase + 0x100) {
    out.push_back(static_cast<char>(cp - kRawByteBase));
  } else if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

struct Range {
  char32_t lo, hi;
};

// P* and S* blocks, inclusive. Digits-like symbols (No) inside these blocks
// are carved out below.
inline constexpr Range kPunctSymbolRanges[] = {
    {0x0021, 0x002F}, {0x003A, 0x0040}, {0x005B, 0x0060}, {0x007B, 0x007E},
    {0x00A1, 0x00A9}, {0x00AB, 0x00B1}, {0x00B4, 0x00B4}, {0x00B6, 0x00B8},
    {0x00BB, 0x00BB}, {0x00BF, 0x00BF}, {0x00D7, 0x00D7}, {0x00F7, 0x00F7},
    {0x02C2, 0x02C5}, {0x02D2, 0x02DF}, {0x037E, 0x037E}, {0x0387, 0x0387},
    {0x055A, 0x055F}, {0x0589, 0x058A}, {0x05BE, 0x05BE}, {0x05C0, 0x05C0},
    {0x05F3, 0x05F4}, {0x060C, 0x060D}, {0x061B, 0x061F}, {0x066A, 0x066D},
    {0x06D4, 0x06D4}, {0x0964, 0x0965}, {0x0E3F, 0x0E3F}, {0x0E4F, 0x0E4F},
    {0x2010, 0x2027}, {0x2030, 0x205E}, {0x207A, 0x207E}, {0x208A, 0x208E},
    {0x20A0, 0x20C0}, {0x2100, 0x2101}, {0x2103, 0x2106}, {0x2108, 0x2109},
    {0x2114, 0x2114}, {0x2116, 0x2118}, {0x211E, 0x2123}, {0x2125, 0x2125},
    {0x2127, 0x2127}, {0x2129, 0x2129}, {0x212E, 0x212E}, {0x2140, 0x2144},
    {0x214A, 0x214D}, {0x214F, 0x214F}, {0x2190, 0x245F}, {0x249C, 0x24E9},
    {0x2500, 0x2775}, {0x2794, 0x2BFF}, {0x2E00, 0x2E5D}, {0x3001, 0x3004},
    {0x3008, 0x3020}, {0x3030, 0x3030}, {0x303D, 0x303F}, {0xFE10, 0xFE19},
    {0xFE30, 0xFE52}, {0xFE54, 0xFE66}, {0xFE68, 0xFE6B}, {0xFF01, 0xFF0F},
    {0xFF1A, 0xFF20}, {0xFF3B, 0xFF40}, {0xFF5B, 0xFF65}, {0xFFE0, 0xFFEE},
    {0x1F000, 0x1F0FF}, {0x1F300, 0x1FAFF},
};

inline bool is_punct_or_symbol(char32_t cp) {
  // Enclosed/circled numerals (No) sit inside symbol blocks.
  if (cp >= 0x2460 && cp <= 0x249B) return false;
  if (cp >= 0x24EA && cp <= 0x24FF) return false;
  for (const auto& r : kPunctSymbolRanges) {
    if (cp < r.lo) return false;
    if (cp <= r.hi) return true;
  }
  return false;
}

inline bool is_space(char32_t cp) {
  switch (cp) {
    case ' ': case '\t': case '\n': case '\r': case '\v': case '\f':
    case 0x0085: case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 0x20 : cp;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x0100 && cp <= 0x017F) {
    if (cp == 0x0130) return 'i';
    if (cp == 0x0178) return 0xFF;
    if (cp == 0x0138 || cp == 0x0149 || cp == 0x017F) return cp;
    const bool odd_upper = (cp >= 0x0139 && cp <= 0x0148) || (cp >= 0x0179 && cp <= 0x017E);
    if (odd_upper) return (cp % 2 == 1) ? cp + 1 : cp;
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x0391 && cp <= 0x03AB && cp != 0x03A2) return cp + 0x20;
  if (cp == 0x0386) return 0x03AC;
  if (cp >= 0x0388 && cp <= 0x038A) return cp + 0x25;
  if (cp == 0x038C) return 0x03CC;
  if (cp == 0x038E || cp == 0x038F) return cp + 0x3F;
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;
  if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;
  if (cp >= 0xFF21 && cp <= 0xFF3A) return cp + 0x20;
  return cp;
}

inline bool is_ascii_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

}  // namespace textprep_detail

inline std::string normalize_text(std::string_view raw, const NormalizationRules& rules = {}) {
  using namespace textprep_detail;
  auto cps = decode_utf8(raw);

  if (rules.strip_punctuation) {
    for (auto& cp : cps)
      if (is_punct_or_symbol(cp)) cp = U' ';
  }

  std::vector<char32_t> staged;
  staged.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (rules.collapse_numbers && is_ascii_digit(cps[i])) {
      staged.push_back(U'0');
      while (i + 1 < cps.size() && is_ascii_digit(cps[i + 1])) ++i;
      continue;
    }
    staged.push_back(rules.lowercase ? to_lower(cps[i]) : cps[i]);
  }

  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char32_t cp : staged) {
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    append_utf8(out, cp);
  }
  return out;
}

/// Lowercase only (no punctuation or digit rules); used to match vocabulary
/// entries against category lexicons.
inline std::string lowercase_utf8(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : textprep_detail::decode_utf8(s)) textprep_detail::append_utf8(out, textprep_detail::to_lower(cp));
  return out;
}

/// Whitespace tokenization of already-normalized text.
inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' || s[i] == '\n')) ++i;
    std::size_t j = i;
    while (j < s.size() && !(s[j] == ' ' || s[j] == '\t' || s[j] == '\r' || s[j] == '\n')) ++j;
    if (j > i) tokens.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return tokens;
}

}  // namespace sparsembed
