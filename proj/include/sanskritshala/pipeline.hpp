#pragma once

// Full analysis pipeline: segmentation feeds tagging feeds parsing feeds
// compound classification. Whitespace separates chunks; a hyphenated chunk
// is one compound token whose constituents are the hyphen parts, and its
// surface is their sandhi join.

#include <filesystem>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sanskritshala/compound.hpp"
#include "sanskritshala/conllu.hpp"
#include "sanskritshala/parser.hpp"
#include "sanskritshala/segmenter.hpp"
#include "sanskritshala/tagger.hpp"

namespace sshala {

enum class Task { kSegment, kMorph, kParse, kCompound };

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::kSegment: return "SEGMENT";
    case Task::kMorph: return "MORPH";
    case Task::kParse: return "PARSE";
    case Task::kCompound: return "COMPOUND";
  }
  return "?";
}

inline Task parse_task(std::string_view s) {
  for (auto t : {Task::kSegment, Task::kMorph, Task::kParse, Task::kCompound}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::kInvalidRequest, "unknown task '" + std::string(s) + "'");
}

struct Resources {
  Transliterator tr;
  RuleTable rules;
  Lexicon lexicon;
  std::vector<std::string> labels;
  std::vector<std::string> compound_classes = default_compound_classes();

  static Resources load(const std::filesystem::path& translit, const std::filesystem::path& rules,
                        const std::filesystem::path& lexicon, const std::filesystem::path& labels) {
    auto tr = Transliterator::load(translit);
    auto rt = RuleTable::load(rules, tr);
    auto lex = Lexicon::load(lexicon, tr);
    return {std::move(tr), std::move(rt), std::move(lex), load_labels(labels)};
  }
};

struct Models {
  std::shared_ptr<const SegModel> segmenter;
  std::shared_ptr<const TagModel> tagger;
  std::shared_ptr<const ParserModel> parser;
  std::shared_ptr<const CompoundModel> compound;
};

struct ModelPaths {
  std::filesystem::path segmenter, tagger, parser, compound;
};

// Missing paths leave the model unloaded.
inline Models load_models(const ModelPaths& p, const RuleTable& rules) {
  Models m;
  auto has = [](const std::filesystem::path& f) { return !f.empty() && std::filesystem::exists(f); };
  if (has(p.segmenter)) m.segmenter = std::make_shared<SegModel>(SegModel::load(p.segmenter, rules));
  if (has(p.tagger)) m.tagger = std::make_shared<TagModel>(TagModel::load(p.tagger));
  if (has(p.parser)) m.parser = std::make_shared<ParserModel>(ParserModel::load(p.parser));
  if (has(p.compound)) m.compound = std::make_shared<CompoundModel>(CompoundModel::load(p.compound));
  return m;
}

inline json lattice_json(const Lattice& lat, const Transliterator& tr, Script script) {
  json edges = json::array();
  for (std::size_t e = 0; e < lat.edges().size(); ++e) {
    const auto& x = lat.edge(e);
    edges.push_back({{"id", e},
                     {"start", x.start},
                     {"end", x.end},
                     {"word", tr.render(x.word, script)},
                     {"in_lexicon", x.in_lexicon},
                     {"initial", lat.initial(e)},
                     {"final", lat.final(e)},
                     {"successors", lat.successors(e)}});
  }
  return {{"surface", tr.render(lat.surface(), script)}, {"length", lat.size()}, {"edges", edges}};
}

class Analyzer {
 public:
  Analyzer(std::shared_ptr<const Resources> res, Models models) : res_(std::move(res)), models_(std::move(models)) {}

  const Resources& resources() const { return *res_; }
  const Models& models() const { return models_; }

  // Prediction bundle. Words are rendered in `script`.
  json analyze(const std::string& text, Script script, const std::set<Task>& tasks) const {
    if (tasks.empty()) throw Error(ErrorCode::kInvalidRequest, "empty task set");
    auto require = [&](Task t, bool loaded) {
      if (tasks.count(t) && !loaded) throw Error(ErrorCode::kModelMissing, std::string(to_string(t)));
    };
    require(Task::kSegment, models_.segmenter != nullptr);
    require(Task::kMorph, models_.tagger != nullptr);
    require(Task::kParse, models_.parser != nullptr);
    require(Task::kCompound, models_.compound != nullptr);
    const auto& tr = res_->tr;
    auto out = [&](const PhonemeString& p) { return tr.render(p, script); };

    struct Chunk {
      PhonemeString surface;
      std::vector<PhonemeString> constituents;  // non-empty for compounds
    };
    std::vector<Chunk> chunks;
    std::istringstream ws(text);
    for (std::string w; ws >> w;) {
      Chunk c;
      if (w.find('-') != std::string::npos) {
        std::stringstream hs(w);
        for (std::string part; std::getline(hs, part, '-');) {
          if (part.empty()) throw Error(ErrorCode::kInvalidRequest, "empty compound constituent in '" + w + "'");
          c.constituents.push_back(tr.to_phonemes(part, script));
        }
        c.surface = res_->rules.join_words(c.constituents);
      } else {
        c.surface = tr.to_phonemes(w, script);
      }
      chunks.push_back(std::move(c));
    }
    if (chunks.empty()) throw Error(ErrorCode::kInvalidRequest, "empty text");

    json bundle{{"text", text}, {"script", to_string(script)}};
    json tj = json::array();
    for (auto t : tasks) tj.push_back(to_string(t));
    bundle["tasks"] = tj;

    std::vector<PhonemeString> tokens;
    std::vector<std::optional<std::size_t>> compound_of;  // token -> chunk
    json seg = json::array();
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      const auto& ch = chunks[c];
      if (tasks.count(Task::kSegment) && ch.constituents.empty()) {
        const auto lat = Lattice::build(ch.surface, res_->lexicon, res_->rules,
                                        models_.segmenter->config().max_word_len);
        const auto s = models_.segmenter->segment(lat);
        json words = json::array();
        for (const auto& w : s.words) {
          words.push_back(out(w));
          tokens.push_back(w);
          compound_of.emplace_back();
        }
        seg.push_back({{"chunk", c}, {"surface", out(ch.surface)}, {"compound", false}, {"words", words},
                       {"path", s.path}, {"score", s.score}, {"lattice", lattice_json(lat, tr, script)}});
      } else {
        tokens.push_back(ch.surface);
        compound_of.push_back(ch.constituents.empty() ? std::nullopt : std::optional<std::size_t>(c));
        if (tasks.count(Task::kSegment)) {
          seg.push_back({{"chunk", c}, {"surface", out(ch.surface)}, {"compound", true},
                         {"words", json::array({out(ch.surface)})}});
        }
      }
    }
    if (tasks.count(Task::kSegment)) bundle["segment"] = seg;
    json tok = json::array();
    for (const auto& t : tokens) tok.push_back(out(t));
    bundle["tokens"] = tok;

    std::vector<MorphTag> tags;
    if (models_.tagger && (tasks.count(Task::kMorph) || tasks.count(Task::kParse) || tasks.count(Task::kCompound))) {
      const auto an = models_.tagger->tag_sentence(tokens, res_->lexicon);
      json morph = json::array();
      for (std::size_t i = 0; i < an.size(); ++i) {
        tags.push_back(an[i].tag);
        json cands = json::array();
        for (const auto& c : an[i].candidates) cands.push_back(c.spec());
        morph.push_back({{"token", i}, {"form", out(tokens[i])}, {"tag", an[i].tag.spec()},
                         {"lemma", out(an[i].lemma)}, {"candidates", cands}, {"in_candidates", an[i].in_candidates}});
      }
      if (tasks.count(Task::kMorph)) bundle["morph"] = morph;
    }

    DependencyTree tree;
    if (models_.parser && (tasks.count(Task::kParse) || tasks.count(Task::kCompound))) {
      tree = models_.parser->parse(tokens, tags);
      if (tasks.count(Task::kParse)) bundle["parse"] = {{"heads", tree.heads}, {"labels", tree.labels}};
    }

    if (tasks.count(Task::kCompound)) {
      json comps = json::array();
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!compound_of[i]) continue;
        CompoundInstance inst;
        inst.constituents = chunks[*compound_of[i]].constituents;
        inst.sentence = tokens;
        inst.span = i;
        const auto p = models_.compound->classify(
            inst, res_->rules, tags.empty() ? std::nullopt : std::optional<MorphTag>(tags[i]),
            tree.labels.empty() ? std::nullopt : std::optional<std::string>(tree.labels[i]));
        json cons = json::array();
        for (const auto& c : inst.constituents) cons.push_back(out(c));
        comps.push_back({{"token", i}, {"constituents", cons}, {"label", p.label},
                         {"distribution", p.distribution}, {"classes", models_.compound->classes()}});
      }
      bundle["compound"] = comps;
    }
    return bundle;
  }

  // Whether `path` is a full path of the lattice over `surface` whose words
  // re-join to it; returns the words.
  std::optional<std::vector<PhonemeString>> check_segment_path(const PhonemeString& surface,
                                                               const std::vector<std::size_t>& path) const {
    const std::size_t max_len = models_.segmenter ? models_.segmenter->config().max_word_len
                                                  : Lattice::kDefaultMaxWordLen;
    const auto lat = Lattice::build(surface, res_->lexicon, res_->rules, max_len);
    if (!lat.is_path(path) || lat.join(path) != surface) return std::nullopt;
    return lat.words(path);
  }

 private:
  std::shared_ptr<const Resources> res_;
  Models models_;
};

// ---------------------------------------------------------------------------
// Demo models trained on the bundled corpora

struct DemoCorpora {
  std::filesystem::path segmentation, treebank, compounds;

  static DemoCorpora in(const std::filesystem::path& data_dir) {
    return {data_dir / "corpus" / "seg_train.txt", data_dir / "corpus" / "treebank_train.conllu",
            data_dir / "corpus" / "compound_train.tsv"};
  }
};

inline SegModel train_demo_segmenter(const Resources& r, const DemoCorpora& c, std::uint64_t seed = 1) {
  const auto corpus = load_seg_corpus(c.segmentation, r.tr);
  std::vector<SegExample> data;
  for (const auto& s : corpus) data.push_back(SegExample::make(s, r.lexicon, r.rules));
  TrainConfig sc, rc;
  sc.epochs = 30;
  sc.learning_rate = 0.05;
  sc.seed = seed;
  rc.epochs = 20;
  rc.learning_rate = 0.1;
  rc.seed = seed;
  return train_segmenter(SegModel::create(r.tr, r.lexicon, r.rules, {}, seed, corpus), data, sc, rc).model;
}

inline TagModel train_demo_tagger(const Resources& r, const DemoCorpora& c, std::uint64_t seed = 1) {
  const auto tb = load_treebank(c.treebank, r.tr);
  auto m = TagModel::create(tb, r.lexicon, {}, seed);
  std::vector<TagExample> data;
  for (const auto& s : tb) data.push_back(m.example(s, r.lexicon));
  TrainConfig tc;
  tc.epochs = 15;
  tc.learning_rate = 0.05;
  tc.seed = seed;
  return sgd_train(std::move(m), data, tc).model;
}

inline ParserModel train_demo_parser(const Resources& r, const DemoCorpora& c, std::uint64_t seed = 1) {
  const auto tb = load_treebank(c.treebank, r.tr);
  auto m = ParserModel::create(tb, r.lexicon, r.labels, {}, seed);
  std::vector<ParseExample> data;
  for (const auto& s : tb) data.push_back(m.example(s));
  TrainConfig tc;
  tc.epochs = 30;
  tc.learning_rate = 0.05;
  tc.seed = seed;
  return sgd_train(std::move(m), data, tc).model;
}

inline CompoundModel train_demo_compound(const Resources& r, const DemoCorpora& c, std::uint64_t seed = 1) {
  const auto corpus = load_compound_corpus(c.compounds, r.tr, r.rules);
  TrainConfig tc;
  tc.epochs = 40;
  tc.learning_rate = 0.05;
  tc.seed = seed;
  return train_compound(CompoundModel::create(corpus, r.compound_classes, r.labels, {}, seed), corpus, tc).model;
}

}  // namespace sshala
