#pragma once

// Canonical phoneme text and transliteration between SLP1, IAST and
// Devanagari. Internally every phoneme is exactly one SLP1 character, so a
// PhonemeString is a validated std::string and slicing it never splits a
// phoneme.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sanskritshala/error.hpp"

namespace sshala {

enum class Script { kSlp1, kIast, kDevanagari };

inline std::string_view to_string(Script s) {
  switch (s) {
    case Script::kSlp1: return "SLP1";
    case Script::kIast: return "IAST";
    case Script::kDevanagari: return "DEVANAGARI";
  }
  return "SLP1";
}

inline Script parse_script(std::string_view name) {
  if (name == "SLP1") return Script::kSlp1;
  if (name == "IAST") return Script::kIast;
  if (name == "DEVANAGARI") return Script::kDevanagari;
  throw Error(ErrorCode::kInvalidArgument, "unknown script '" + std::string(name) + "'");
}

class PhonemeString {
 public:
  PhonemeString() = default;

  // No inventory check; callers that take outside input go through
  // Transliterator::to_phonemes instead.
  static PhonemeString unchecked(std::string slp1) {
    PhonemeString p;
    p.s_ = std::move(slp1);
    return p;
  }

  const std::string& slp1() const noexcept { return s_; }
  std::size_t size() const noexcept { return s_.size(); }
  bool empty() const noexcept { return s_.empty(); }
  char operator[](std::size_t i) const { return s_[i]; }

  PhonemeString substr(std::size_t pos, std::size_t n = std::string::npos) const {
    return unchecked(s_.substr(pos, n));
  }
  bool starts_with(const PhonemeString& p) const { return s_.starts_with(p.s_); }
  bool ends_with(const PhonemeString& p) const { return s_.ends_with(p.s_); }

  PhonemeString& operator+=(const PhonemeString& o) {
    s_ += o.s_;
    return *this;
  }
  friend PhonemeString operator+(PhonemeString a, const PhonemeString& b) {
    a += b;
    return a;
  }

  auto operator<=>(const PhonemeString&) const = default;

 private:
  std::string s_;
};

namespace utf8 {

// Decodes UTF-8 into code points; malformed bytes raise InvalidCharacter at
// the code point index where decoding failed.
inline std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    char32_t cp;
    std::size_t len;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c >> 4) == 0xE) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c >> 3) == 0x1E) {
      cp = c & 0x07;
      len = 4;
    } else {
      throw Error(ErrorCode::kInvalidCharacter, "malformed UTF-8", out.size());
    }
    if (i + len > s.size()) throw Error(ErrorCode::kInvalidCharacter, "truncated UTF-8", out.size());
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) throw Error(ErrorCode::kInvalidCharacter, "malformed UTF-8", out.size());
      cp = (cp << 6) | (cc & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

inline std::u32string to_u32(std::string_view s) {
  auto v = decode(s);
  return std::u32string(v.begin(), v.end());
}

inline std::string from_u32(std::u32string_view s) {
  std::string out;
  for (char32_t c : s) append(out, c);
  return out;
}

}  // namespace utf8

enum class PhonemeKind { kVowel, kConsonant, kMark };

// Loaded from the correspondence table (data/translit.tsv). Immutable after
// construction.
class Transliterator {
 public:
  // IAST disambiguation mark, inserted only where greedy reading of the
  // rendered text would otherwise merge two phonemes (a+i vs ai, k+h vs kh).
  static constexpr char32_t kSeparator = U':';
  static constexpr char32_t kVirama = 0x094D;

  static Transliterator load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
    return parse(in);
  }

  static Transliterator parse(std::istream& in) {
    Transliterator t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') {
        constexpr std::string_view kVersion = "# version:";
        if (line.starts_with(kVersion)) {
          t.version_ = line.substr(kVersion.size());
          t.version_.erase(0, t.version_.find_first_not_of(' '));
        }
        continue;
      }
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
      if (cols.size() != 3 || cols[0].size() != 1) {
        throw Error(ErrorCode::kParseError, "bad transliteration row", lineno);
      }
      char p = cols[0][0];
      if (t.index_[static_cast<unsigned char>(p)] >= 0) {
        throw Error(ErrorCode::kParseError, "duplicate phoneme", lineno);
      }
      Entry e;
      e.slp1 = p;
      e.iast = utf8::to_u32(cols[1]);
      auto bar = cols[2].find('|');
      if (bar != std::string::npos) {
        e.kind = PhonemeKind::kVowel;
        e.deva = utf8::to_u32(cols[2].substr(0, bar));
        e.deva_sign = utf8::to_u32(cols[2].substr(bar + 1));
      } else {
        e.deva = utf8::to_u32(cols[2]);
        e.kind = PhonemeKind::kConsonant;
      }
      if (e.iast.empty() || e.deva.size() != 1) {
        throw Error(ErrorCode::kParseError, "bad transliteration row", lineno);
      }
      t.index_[static_cast<unsigned char>(p)] = static_cast<int>(t.entries_.size());
      t.entries_.push_back(std::move(e));
    }
    // Anusvara and visarga are the non-vowel rows whose Devanagari form is a
    // combining sign rather than a letter.
    for (auto& e : t.entries_) {
      if (e.kind == PhonemeKind::kConsonant && (e.deva[0] == 0x0902 || e.deva[0] == 0x0903)) {
        e.kind = PhonemeKind::kMark;
      }
    }
    for (std::size_t i = 0; i < t.entries_.size(); ++i) {
      const auto& e = t.entries_[i];
      t.iast_lookup_[e.iast] = i;
      t.deva_letter_[e.deva[0]] = i;
      if (e.kind == PhonemeKind::kVowel) {
        if (e.deva_sign.empty()) {
          t.inherent_ = static_cast<int>(i);
        } else {
          t.deva_sign_[e.deva_sign[0]] = i;
        }
      }
      t.max_iast_len_ = std::max(t.max_iast_len_, e.iast.size());
    }
    if (t.entries_.empty()) throw Error(ErrorCode::kParseError, "empty transliteration table");
    return t;
  }

  const std::string& version() const noexcept { return version_; }
  std::size_t inventory_size() const noexcept { return entries_.size(); }

  // Inventory symbols in table order.
  std::string symbols() const {
    std::string s;
    for (const auto& e : entries_) s += e.slp1;
    return s;
  }
  // Position of a phoneme in table order, or -1.
  int index_of(char p) const noexcept { return index_[static_cast<unsigned char>(p)]; }
  bool contains(char p) const noexcept { return index_of(p) >= 0; }
  PhonemeKind kind(char p) const { return entry(p).kind; }
  bool is_vowel(char p) const { return contains(p) && entry(p).kind == PhonemeKind::kVowel; }

  PhonemeString to_phonemes(std::string_view text, Script script) const {
    switch (script) {
      case Script::kSlp1: return from_slp1(text);
      case Script::kIast: return from_iast(text);
      case Script::kDevanagari: return from_devanagari(text);
    }
    return {};
  }

  std::string render(const PhonemeString& p, Script script) const {
    switch (script) {
      case Script::kSlp1: return p.slp1();
      case Script::kIast: return render_iast(p);
      case Script::kDevanagari: return render_devanagari(p);
    }
    return {};
  }

  // Word separators (ASCII space and hyphen) are kept as-is; everything else
  // must belong to the source script. Reported positions index code points
  // of the whole input.
  std::string transliterate(std::string_view text, Script from, Script to) const {
    std::string out;
    std::size_t cp_offset = 0;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
      auto piece = text.substr(start, end - start);
      try {
        out += render(to_phonemes(piece, from), to);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kInvalidCharacter && e.where()) {
          throw Error(ErrorCode::kInvalidCharacter, e.detail(), cp_offset + *e.where());
        }
        throw;
      }
      cp_offset += utf8::decode(piece).size();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == ' ' || text[i] == '-') {
        flush(i);
        out += text[i];
        ++cp_offset;
        start = i + 1;
      }
    }
    flush(text.size());
    return out;
  }

 private:
  struct Entry {
    char slp1 = 0;
    std::u32string iast;
    std::u32string deva;       // letter or independent vowel
    std::u32string deva_sign;  // dependent vowel sign (vowels only)
    PhonemeKind kind = PhonemeKind::kConsonant;
  };

  Transliterator() { index_.fill(-1); }

  const Entry& entry(char p) const {
    int i = index_of(p);
    if (i < 0) throw Error(ErrorCode::kInvalidCharacter, std::string("not a phoneme: ") + p);
    return entries_[static_cast<std::size_t>(i)];
  }

  PhonemeString from_slp1(std::string_view text) const {
    auto cps = utf8::decode(text);
    std::string s;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      if (cps[i] >= 0x80 || !contains(static_cast<char>(cps[i]))) {
        throw Error(ErrorCode::kInvalidCharacter, "not an SLP1 phoneme", i);
      }
      s += static_cast<char>(cps[i]);
    }
    return PhonemeString::unchecked(std::move(s));
  }

  PhonemeString from_iast(std::string_view text) const {
    auto cps = utf8::to_u32(text);
    std::string s;
    std::size_t i = 0;
    while (i < cps.size()) {
      if (cps[i] == kSeparator && i > 0 && i + 1 < cps.size()) {
        ++i;
        continue;
      }
      std::size_t best = 0;
      std::size_t best_entry = 0;
      for (std::size_t len = std::min(max_iast_len_, cps.size() - i); len > 0; --len) {
        auto it = iast_lookup_.find(cps.substr(i, len));
        if (it != iast_lookup_.end()) {
          best = len;
          best_entry = it->second;
          break;
        }
      }
      if (best == 0) throw Error(ErrorCode::kInvalidCharacter, "not an IAST phoneme", i);
      s += entries_[best_entry].slp1;
      i += best;
    }
    return PhonemeString::unchecked(std::move(s));
  }

  PhonemeString from_devanagari(std::string_view text) const {
    auto cps = utf8::decode(text);
    std::string s;
    std::size_t i = 0;
    while (i < cps.size()) {
      auto letter = deva_letter_.find(cps[i]);
      if (letter == deva_letter_.end()) {
        throw Error(ErrorCode::kInvalidCharacter, "not a Devanagari phoneme", i);
      }
      const Entry& e = entries_[letter->second];
      s += e.slp1;
      ++i;
      if (e.kind != PhonemeKind::kConsonant) continue;
      if (i < cps.size() && cps[i] == kVirama) {
        ++i;
      } else if (i < cps.size() && deva_sign_.count(cps[i])) {
        s += entries_[deva_sign_.at(cps[i])].slp1;
        ++i;
      } else if (inherent_ >= 0) {
        s += entries_[static_cast<std::size_t>(inherent_)].slp1;
      }
    }
    return PhonemeString::unchecked(std::move(s));
  }

  std::string render_iast(const PhonemeString& p) const {
    std::u32string out;
    const auto& s = p.slp1();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto& tok = entry(s[i]).iast;
      out += tok;
      if (i + 1 < s.size()) {
        std::u32string ahead = tok + entry(s[i + 1]).iast;
        if (i + 2 < s.size()) ahead += entry(s[i + 2]).iast;
        if (merges(tok, ahead)) out += kSeparator;
      }
    }
    return utf8::from_u32(out);
  }

  // True when greedy longest-match reading of `ahead` would take a token
  // longer than `tok`.
  bool merges(const std::u32string& tok, const std::u32string& ahead) const {
    for (std::size_t len = std::min(max_iast_len_, ahead.size()); len > tok.size(); --len) {
      if (iast_lookup_.count(ahead.substr(0, len))) return true;
    }
    return false;
  }

  std::string render_devanagari(const PhonemeString& p) const {
    std::u32string out;
    const auto& s = p.slp1();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Entry& e = entry(s[i]);
      out += e.deva;
      if (e.kind != PhonemeKind::kConsonant) continue;
      if (i + 1 < s.size() && entry(s[i + 1]).kind == PhonemeKind::kVowel) {
        out += entry(s[i + 1]).deva_sign;
        ++i;
      } else {
        out += kVirama;
      }
    }
    return utf8::from_u32(out);
  }

  std::vector<Entry> entries_;
  std::array<int, 256> index_{};
  std::unordered_map<std::u32string, std::size_t> iast_lookup_;
  std::unordered_map<char32_t, std::size_t> deva_letter_;
  std::unordered_map<char32_t, std::size_t> deva_sign_;
  int inherent_ = -1;
  std::size_t max_iast_len_ = 0;
  std::string version_;
};

}  // namespace sshala

template <>
struct std::hash<sshala::PhonemeString> {
  std::size_t operator()(const sshala::PhonemeString& p) const noexcept {
    return std::hash<std::string>{}(p.slp1());
  }
};
