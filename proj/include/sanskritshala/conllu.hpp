#pragma once

// CoNLL-U reading and writing. Sentences keep their comment lines and raw
// column strings, so read followed by write reproduces the input bytes for
// any file in canonical layout (LF line ends, one blank line after each
// sentence).

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sanskritshala/error.hpp"
#include "sanskritshala/lexicon.hpp"
#include "sanskritshala/text.hpp"

namespace sshala {

namespace conllu {
enum Column : std::size_t { kId, kForm, kLemma, kUpos, kXpos, kFeats, kHead, kDeprel, kDeps, kMisc };
}

struct ConlluToken {
  std::array<std::string, 10> cols{"_", "_", "_", "_", "_", "_", "_", "_", "_", "_"};

  std::string& operator[](conllu::Column c) { return cols[c]; }
  const std::string& operator[](conllu::Column c) const { return cols[c]; }
  bool operator==(const ConlluToken&) const = default;
};

struct ConlluSentence {
  std::vector<std::string> comments;  // full lines including the leading '#'
  std::vector<ConlluToken> tokens;

  // Value of a `# key = value` comment.
  std::optional<std::string> comment(std::string_view key) const {
    for (const auto& c : comments) {
      std::string_view v(c);
      v.remove_prefix(1);
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      if (!v.starts_with(key)) continue;
      v.remove_prefix(key.size());
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      if (v.empty() || v.front() != '=') continue;
      v.remove_prefix(1);
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      return std::string(v);
    }
    return std::nullopt;
  }

  void set_comment(const std::string& key, const std::string& value) {
    const std::string line = "# " + key + " = " + value;
    for (auto& c : comments) {
      ConlluSentence probe{{c}, {}};
      if (probe.comment(key)) {
        c = line;
        return;
      }
    }
    comments.push_back(line);
  }

  bool operator==(const ConlluSentence&) const = default;
};

inline std::vector<ConlluSentence> read_conllu(std::istream& in) {
  std::vector<ConlluSentence> out;
  ConlluSentence cur;
  bool open = false;
  std::string line;
  std::size_t lineno = 0;
  auto close = [&] {
    if (open) {
      if (cur.tokens.empty()) throw Error(ErrorCode::kParseError, "sentence without tokens", lineno);
      out.push_back(std::move(cur));
      cur = {};
      open = false;
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      close();
      continue;
    }
    open = true;
    if (line[0] == '#') {
      if (!cur.tokens.empty()) throw Error(ErrorCode::kParseError, "comment inside token block", lineno);
      cur.comments.push_back(line);
      continue;
    }
    ConlluToken t;
    std::size_t c = 0, start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      if (c >= 10) throw Error(ErrorCode::kParseError, "more than 10 columns", lineno);
      t.cols[c++] = line.substr(start, tab == std::string::npos ? std::string::npos : tab - start);
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (c != 10) throw Error(ErrorCode::kParseError, "expected 10 columns", lineno);
    const std::string& id = t.cols[conllu::kId];
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(id.data(), id.data() + id.size(), v);
    if (ec != std::errc{} || p != id.data() + id.size() || v != cur.tokens.size() + 1) {
      throw Error(ErrorCode::kParseError, "token ids must be 1..n (ranges and empty nodes unsupported)", lineno);
    }
    cur.tokens.push_back(std::move(t));
  }
  close();
  return out;
}

inline std::vector<ConlluSentence> load_conllu(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_conllu(in);
}

inline void write_conllu(std::ostream& out, const std::vector<ConlluSentence>& sentences) {
  for (const auto& s : sentences) {
    for (const auto& c : s.comments) out << c << '\n';
    for (const auto& t : s.tokens) {
      for (std::size_t i = 0; i < 10; ++i) out << (i ? "\t" : "") << t.cols[i];
      out << '\n';
    }
    out << '\n';
  }
}

inline std::string to_conllu_string(const std::vector<ConlluSentence>& sentences) {
  std::ostringstream os;
  write_conllu(os, sentences);
  return os.str();
}

// Typed view of an annotated sentence. Missing annotation columns ('_')
// leave the corresponding vector empty.
struct AnnotatedSentence {
  std::vector<PhonemeString> tokens;
  std::vector<PhonemeString> lemmas;
  std::vector<MorphTag> tags;
  std::vector<std::size_t> heads;
  std::vector<std::string> labels;
};

// FORM and LEMMA are read in the script named by a `# script = ...` comment
// (SLP1 when absent); XPOS holds the tag-spec.
inline AnnotatedSentence annotated(const ConlluSentence& s, const Transliterator& tr) {
  const Script script = s.comment("script") ? parse_script(*s.comment("script")) : Script::kSlp1;
  AnnotatedSentence a;
  auto all_set = [&](conllu::Column c) {
    for (const auto& t : s.tokens) {
      if (t[c] == "_") return false;
    }
    return true;
  };
  const bool lemmas = all_set(conllu::kLemma), tags = all_set(conllu::kXpos), heads = all_set(conllu::kHead),
             labels = all_set(conllu::kDeprel);
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const auto& t = s.tokens[i];
    a.tokens.push_back(tr.to_phonemes(t[conllu::kForm], script));
    if (lemmas) a.lemmas.push_back(tr.to_phonemes(t[conllu::kLemma], script));
    if (tags) a.tags.push_back(MorphTag::parse(t[conllu::kXpos]));
    if (heads) {
      std::size_t h = 0;
      const auto& col = t[conllu::kHead];
      auto [p, ec] = std::from_chars(col.data(), col.data() + col.size(), h);
      if (ec != std::errc{} || p != col.data() + col.size() || h > s.tokens.size()) {
        throw Error(ErrorCode::kParseError, "bad HEAD '" + col + "'", i + 1);
      }
      a.heads.push_back(h);
    }
    if (labels) a.labels.push_back(t[conllu::kDeprel]);
  }
  return a;
}

inline std::vector<AnnotatedSentence> load_treebank(const std::filesystem::path& path, const Transliterator& tr) {
  std::vector<AnnotatedSentence> out;
  for (const auto& s : load_conllu(path)) out.push_back(annotated(s, tr));
  return out;
}

inline std::vector<std::string> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace sshala
