#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sanskritshala/conllu.hpp"
#include "sanskritshala/lexicon.hpp"
#include "sanskritshala/ml.hpp"
#include "sanskritshala/sandhi.hpp"
#include "sanskritshala/text.hpp"

namespace fixtures {

inline std::filesystem::path data(const std::string& rel) { return std::filesystem::path(SSHALA_DATA_DIR) / rel; }

inline const sshala::Transliterator& tr() {
  static const auto t = sshala::Transliterator::load(data("translit.tsv"));
  return t;
}

inline const sshala::RuleTable& rules() {
  static const auto r = sshala::RuleTable::load(data("sandhi_rules.tsv"), tr());
  return r;
}

inline const sshala::Lexicon& lexicon() {
  static const auto l = sshala::Lexicon::load(data("lexicon.tsv"), tr());
  return l;
}

inline const std::vector<std::string>& labels() {
  static const auto l = sshala::load_labels(data("labels.txt"));
  return l;
}

inline const std::vector<sshala::AnnotatedSentence>& treebank() {
  static const auto t = sshala::load_treebank(data("corpus/treebank_train.conllu"), tr());
  return t;
}

inline const std::vector<sshala::AnnotatedSentence>& fixture_treebank() {
  static const auto t = sshala::load_treebank(data("corpus/treebank_fixture.conllu"), tr());
  return t;
}

// Code of the sshala::Error thrown by f, or nothing when f returns.
template <class F>
std::optional<sshala::ErrorCode> thrown(F&& f) {
  try {
    f();
  } catch (const sshala::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline sshala::Tensor& param(sshala::ParamStore& ps, std::string_view name) {
  auto i = ps.find(name);
  if (!i) throw std::out_of_range(std::string(name));
  return ps[*i];
}

inline void zero_all(sshala::ParamStore& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i) std::fill(ps[i].data.begin(), ps[i].data.end(), 0.0);
}

inline sshala::PhonemeString slp(const std::string& s) { return tr().to_phonemes(s, sshala::Script::kSlp1); }
inline sshala::PhonemeString iast(const std::string& s) { return tr().to_phonemes(s, sshala::Script::kIast); }

// Per-test scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("sshala-" + tag + "-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace fixtures
