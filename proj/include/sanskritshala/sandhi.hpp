#pragma once

// External sandhi: joining two padas at a junction, and enumerating the ways
// a surface string could have been produced by a join at a given position.
//
// A rule (L, R, S) fires on left+right when left ends with L and right starts
// with R; the junction window L|R is replaced by S. Rules are tried in file
// order and the first match wins. Joins with an empty operand never fire a
// rule.
//
// Multi-word joins are junction-local: the rule at junction k is selected
// from word k (minus whatever the previous junction consumed from its start)
// and word k+1. For two words this is exactly join().

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "sanskritshala/error.hpp"
#include "sanskritshala/text.hpp"

namespace sshala {

struct SandhiRule {
  std::string id;
  PhonemeString left_final;
  PhonemeString right_initial;
  PhonemeString surface;
};

// Index into RuleTable::rules(); std::nullopt is plain concatenation.
using RuleRef = std::optional<std::size_t>;

struct SplitCandidate {
  PhonemeString left;
  PhonemeString right;
  RuleRef rule;
  std::size_t junction = 0;

  auto operator<=>(const SplitCandidate&) const = default;
};

class RuleTable {
 public:
  static constexpr std::size_t kMaxWindow = 3;

  RuleTable() = default;

  static RuleTable load(const std::filesystem::path& path, const Transliterator& tr) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
    return parse(in, tr);
  }

  static RuleTable parse(std::istream& in, const Transliterator& tr) {
    RuleTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
      if (cols.size() != 4) throw Error(ErrorCode::kParseError, "expected 4 columns", lineno);
      auto field = [&](const std::string& s) {
        if (s == "-") return PhonemeString{};
        try {
          return tr.to_phonemes(s, Script::kSlp1);
        } catch (const Error&) {
          throw Error(ErrorCode::kParseError, "bad phoneme in rule", lineno);
        }
      };
      SandhiRule r{cols[0], field(cols[1]), field(cols[2]), field(cols[3])};
      t.add(std::move(r), lineno);
    }
    return t;
  }

  static RuleTable from_rules(std::vector<SandhiRule> rules) {
    RuleTable t;
    std::size_t n = 0;
    for (auto& r : rules) t.add(std::move(r), ++n);
    return t;
  }

  const std::vector<SandhiRule>& rules() const noexcept { return rules_; }
  std::size_t size() const noexcept { return rules_.size(); }
  const SandhiRule& operator[](std::size_t i) const { return rules_.at(i); }

  RuleRef find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  std::string id_of(RuleRef r) const { return r ? rules_[*r].id : "NONE"; }

  // Highest-priority rule firing on left|right.
  RuleRef select(const PhonemeString& left, const PhonemeString& right) const {
    if (left.empty() || right.empty()) return std::nullopt;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      const auto& r = rules_[i];
      if (left.ends_with(r.left_final) && right.starts_with(r.right_initial)) return i;
    }
    return std::nullopt;
  }

  PhonemeString join(const PhonemeString& left, const PhonemeString& right) const {
    return join_with(left, right, select(left, right));
  }

  PhonemeString join_with(const PhonemeString& left, const PhonemeString& right, RuleRef rule) const {
    if (!rule) return left + right;
    const auto& r = rules_[*rule];
    return left.substr(0, left.size() - r.left_final.size()) + r.surface +
           right.substr(r.right_initial.size());
  }

  // Junction-local join of a word sequence. When `analyzed` is given, a
  // junction touching an unanalyzed item (lattice fallback material) is plain
  // concatenation.
  PhonemeString join_words(std::span<const PhonemeString> words,
                           std::span<const bool> analyzed = {}) const {
    PhonemeString out;
    std::size_t consumed = 0;
    for (std::size_t k = 0; k < words.size(); ++k) {
      PhonemeString rest = words[k].substr(std::min(consumed, words[k].size()));
      if (k + 1 == words.size()) {
        out += rest;
        break;
      }
      bool opaque = !analyzed.empty() && (!analyzed[k] || !analyzed[k + 1]);
      RuleRef rule = opaque ? std::nullopt : select(rest, words[k + 1]);
      if (rule) {
        const auto& r = rules_[*rule];
        out += rest.substr(0, rest.size() - r.left_final.size()) + r.surface;
        consumed = r.right_initial.size();
      } else {
        out += rest;
        consumed = 0;
      }
    }
    return out;
  }

  // All (left, right, rule) analyses of `surface` with the junction window
  // starting at `junction`. Sorted canonically; every candidate satisfies
  // join(left, right) == surface.
  std::vector<SplitCandidate> split_candidates(const PhonemeString& surface, std::size_t junction) const {
    if (junction == 0 || junction > surface.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "junction outside surface", junction);
    }
    std::vector<SplitCandidate> out;
    PhonemeString prefix = surface.substr(0, junction);
    {
      PhonemeString right = surface.substr(junction);
      if (!select(prefix, right)) out.push_back({prefix, right, std::nullopt, junction});
    }
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      const auto& r = rules_[i];
      if (junction + r.surface.size() > surface.size()) continue;
      if (surface.slp1().compare(junction, r.surface.size(), r.surface.slp1()) != 0) continue;
      PhonemeString left = prefix + r.left_final;
      PhonemeString right = r.right_initial + surface.substr(junction + r.surface.size());
      if (select(left, right) == RuleRef(i)) out.push_back({left, right, i, junction});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  void add(SandhiRule r, std::size_t lineno) {
    if (r.id.empty()) throw Error(ErrorCode::kParseError, "empty rule id", lineno);
    if (r.left_final.empty() && r.right_initial.empty()) {
      throw Error(ErrorCode::kConstraintViolation, "rule " + r.id + " has empty window", lineno);
    }
    if (r.left_final.size() > kMaxWindow || r.right_initial.size() > kMaxWindow) {
      throw Error(ErrorCode::kConstraintViolation, "rule " + r.id + " window too wide", lineno);
    }
    // Lattice pieces must have positive width.
    if (r.surface.empty()) {
      throw Error(ErrorCode::kConstraintViolation, "rule " + r.id + " has empty surface", lineno);
    }
    if (!by_id_.emplace(r.id, rules_.size()).second) {
      throw Error(ErrorCode::kConstraintViolation, "duplicate rule id " + r.id, lineno);
    }
    rules_.push_back(std::move(r));
  }

  std::vector<SandhiRule> rules_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace sshala
