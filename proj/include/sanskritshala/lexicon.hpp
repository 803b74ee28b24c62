#pragma once

// Morphological tags and the inflected-form lexicon that stands in for a
// generative analyzer: every form the system can recognize is listed.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sanskritshala/error.hpp"
#include "sanskritshala/text.hpp"

namespace sshala {

enum class Pos : std::uint8_t { kNoun, kVerb, kAdj, kPron, kIndecl };
enum class Case : std::uint8_t { kNom, kAcc, kIns, kDat, kAbl, kGen, kLoc, kVoc };
enum class Number : std::uint8_t { kSg, kDu, kPl };
enum class Gender : std::uint8_t { kM, kF, kN };
enum class Person : std::uint8_t { k1, k2, k3 };
enum class TenseMood : std::uint8_t { kPres, kImpv, kImpf, kOpt, kPerf, kFut, kAor };

namespace tagnames {
inline constexpr std::array<std::string_view, 5> kPos{"NOUN", "VERB", "ADJ", "PRON", "INDECL"};
inline constexpr std::array<std::string_view, 8> kCase{"NOM", "ACC", "INS", "DAT", "ABL", "GEN", "LOC", "VOC"};
inline constexpr std::array<std::string_view, 3> kNumber{"SG", "DU", "PL"};
inline constexpr std::array<std::string_view, 3> kGender{"M", "F", "N"};
inline constexpr std::array<std::string_view, 3> kPerson{"1", "2", "3"};
inline constexpr std::array<std::string_view, 7> kTense{"PRES", "IMPV", "IMPF", "OPT", "PERF", "FUT", "AOR"};

template <std::size_t N>
std::optional<std::uint8_t> find(const std::array<std::string_view, N>& names, std::string_view v) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == v) return static_cast<std::uint8_t>(i);
  }
  return std::nullopt;
}
}  // namespace tagnames

struct MorphTag {
  Pos pos = Pos::kIndecl;
  std::optional<Case> case_;
  std::optional<Number> number;
  std::optional<Gender> gender;
  std::optional<Person> person;
  std::optional<TenseMood> tense_mood;

  auto operator<=>(const MorphTag&) const = default;

  bool nominal() const { return pos == Pos::kNoun || pos == Pos::kAdj || pos == Pos::kPron; }

  // Empty when the field combination is legal, otherwise the reason.
  std::optional<std::string> violation() const {
    if ((case_ || gender) && !nominal()) return "case/gender only on NOUN, ADJ, PRON";
    if ((person || tense_mood) && pos != Pos::kVerb) return "person/tense only on VERB";
    if (pos == Pos::kIndecl && number) return "INDECL carries no features";
    return std::nullopt;
  }

  // Comma-joined field values in fixed order, NONE fields omitted.
  std::string spec() const {
    std::string s(tagnames::kPos[static_cast<std::size_t>(pos)]);
    auto add = [&](auto names, auto v) {
      if (v) {
        s += ',';
        s += names[static_cast<std::size_t>(*v)];
      }
    };
    add(tagnames::kCase, case_);
    add(tagnames::kNumber, number);
    add(tagnames::kGender, gender);
    add(tagnames::kPerson, person);
    add(tagnames::kTense, tense_mood);
    return s;
  }

  // Parses a tag-spec; structural problems raise ParseError, illegal field
  // combinations ConstraintViolation.
  static MorphTag parse(std::string_view spec) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
      auto comma = spec.find(',', start);
      parts.push_back(spec.substr(start, comma == std::string_view::npos ? spec.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    MorphTag t;
    auto pos = tagnames::find(tagnames::kPos, parts[0]);
    if (!pos) throw Error(ErrorCode::kParseError, "unknown POS '" + std::string(parts[0]) + "'");
    t.pos = static_cast<Pos>(*pos);
    int last_field = 0;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      auto v = parts[i];
      int field = 0;
      if (auto c = tagnames::find(tagnames::kCase, v)) {
        field = 1;
        t.case_ = static_cast<Case>(*c);
      } else if (auto n = tagnames::find(tagnames::kNumber, v)) {
        field = 2;
        t.number = static_cast<Number>(*n);
      } else if (auto g = tagnames::find(tagnames::kGender, v)) {
        field = 3;
        t.gender = static_cast<Gender>(*g);
      } else if (auto p = tagnames::find(tagnames::kPerson, v)) {
        field = 4;
        t.person = static_cast<Person>(*p);
      } else if (auto m = tagnames::find(tagnames::kTense, v)) {
        field = 5;
        t.tense_mood = static_cast<TenseMood>(*m);
      } else {
        throw Error(ErrorCode::kParseError, "unknown tag value '" + std::string(v) + "'");
      }
      if (field <= last_field) throw Error(ErrorCode::kParseError, "tag fields out of order in '" + std::string(spec) + "'");
      last_field = field;
    }
    if (auto why = t.violation()) throw Error(ErrorCode::kConstraintViolation, *why + " in '" + std::string(spec) + "'");
    return t;
  }
};

struct LexEntry {
  PhonemeString surface;
  PhonemeString lemma;
  MorphTag tag;

  auto operator<=>(const LexEntry&) const = default;
};

class Lexicon {
 public:
  Lexicon() = default;

  // A `# script: IAST` (or DEVANAGARI) comment switches the encoding of the
  // following rows; the default is SLP1.
  static Lexicon load(const std::filesystem::path& path, const Transliterator& tr) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
    return parse(in, tr);
  }

  static Lexicon parse(std::istream& in, const Transliterator& tr) {
    Lexicon lex;
    Script script = Script::kSlp1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') {
        constexpr std::string_view kScript = "# script:";
        if (line.starts_with(kScript)) {
          std::string name = line.substr(kScript.size());
          name.erase(0, name.find_first_not_of(' '));
          script = parse_script(name);
        }
        continue;
      }
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
      if (cols.size() != 3) throw Error(ErrorCode::kParseError, "expected 3 columns", lineno);
      LexEntry e;
      try {
        e.surface = tr.to_phonemes(cols[0], script);
        e.lemma = tr.to_phonemes(cols[1], script);
      } catch (const Error&) {
        throw Error(ErrorCode::kParseError, "bad characters in entry", lineno);
      }
      if (e.surface.empty() || e.lemma.empty()) throw Error(ErrorCode::kParseError, "empty surface or lemma", lineno);
      try {
        e.tag = MorphTag::parse(cols[2]);
      } catch (const Error& err) {
        throw Error(err.code(), err.detail(), lineno);
      }
      lex.insert(std::move(e));
    }
    return lex;
  }

  static Lexicon from_entries(std::vector<LexEntry> entries) {
    Lexicon lex;
    for (auto& e : entries) {
      if (auto why = e.tag.violation()) throw Error(ErrorCode::kConstraintViolation, *why);
      lex.insert(std::move(e));
    }
    return lex;
  }

  // Number of distinct (surface, lemma, tag) entries.
  std::size_t size() const noexcept { return size_; }

  const std::vector<LexEntry>& lookup(const PhonemeString& form) const {
    static const std::vector<LexEntry> kEmpty;
    auto it = by_form_.find(form);
    return it == by_form_.end() ? kEmpty : it->second;
  }

  bool contains(const PhonemeString& form) const { return by_form_.count(form) > 0; }

  // Distinct surface forms in sorted order.
  std::vector<PhonemeString> forms() const {
    std::vector<PhonemeString> out;
    out.reserve(by_form_.size());
    for (const auto& [f, _] : by_form_) out.push_back(f);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::set<MorphTag> tags() const {
    std::set<MorphTag> out;
    for (const auto& [_, es] : by_form_) {
      for (const auto& e : es) out.insert(e.tag);
    }
    return out;
  }

  std::vector<LexEntry> entries() const {
    std::vector<LexEntry> out;
    for (const auto& [_, es] : by_form_) out.insert(out.end(), es.begin(), es.end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  void insert(LexEntry e) {
    auto& bucket = by_form_[e.surface];
    auto at = std::lower_bound(bucket.begin(), bucket.end(), e, [](const LexEntry& a, const LexEntry& b) {
      return std::tie(a.lemma, a.tag) < std::tie(b.lemma, b.tag);
    });
    if (at != bucket.end() && at->lemma == e.lemma && at->tag == e.tag) return;
    bucket.insert(at, std::move(e));
    ++size_;
  }

  std::unordered_map<PhonemeString, std::vector<LexEntry>> by_form_;
  std::size_t size_ = 0;
};

}  // namespace sshala
