#pragma once

// Compound type identification.
//
// Input block: first and last constituent embeddings, a ±3 token context
// window around the compound, an embedding of the compound token's morph
// tag and one of its incoming dependency label (either block is zeros when
// that analysis is unavailable). One tanh layer feeds the class softmax and,
// during training, two auxiliary heads predicting the tag and the label.

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sanskritshala/lexicon.hpp"
#include "sanskritshala/nn.hpp"
#include "sanskritshala/sandhi.hpp"
#include "sanskritshala/tagger.hpp"

namespace sshala {

inline const std::vector<std::string>& default_compound_classes() {
  static const std::vector<std::string> k{"TATPURUSHA", "BAHUVRIHI", "DVANDVA", "AVYAYIBHAVA"};
  return k;
}

struct CompoundInstance {
  std::vector<PhonemeString> constituents;
  std::vector<PhonemeString> sentence;
  std::size_t span = 0;
  std::optional<std::string> label;
  std::optional<MorphTag> tag;         // gold for the auxiliary morph head
  std::optional<std::string> deprel;   // gold for the auxiliary dependency head

  const PhonemeString& token() const { return sentence.at(span); }
};

inline void validate(const CompoundInstance& c, const RuleTable& rules) {
  if (c.span >= c.sentence.size()) {
    throw Error(ErrorCode::kSpanOutOfRange,
                "span " + std::to_string(c.span) + " outside sentence of " + std::to_string(c.sentence.size()));
  }
  if (c.constituents.size() < 2) throw Error(ErrorCode::kInvalidArgument, "a compound has at least two constituents");
  const auto joined = rules.join_words(c.constituents);
  if (joined != c.sentence[c.span]) {
    throw Error(ErrorCode::kConstituentJoinMismatch,
                "constituents join to '" + joined.slp1() + "', token is '" + c.sentence[c.span].slp1() + "'");
  }
}

// sentence<TAB>span<TAB>c1+c2+...<TAB>label[<TAB>tag-spec<TAB>deprel], '_' for
// absent optional fields. Words are in `script`.
inline std::vector<CompoundInstance> read_compound_corpus(std::istream& in, const Transliterator& tr,
                                                          const RuleTable& rules, Script script = Script::kSlp1) {
  std::vector<CompoundInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, '\t');) f.push_back(x);
    if (f.size() != 4 && f.size() != 6) throw Error(ErrorCode::kParseError, "expected 4 or 6 columns", lineno);
    CompoundInstance c;
    std::stringstream ws(f[0]);
    for (std::string w; ws >> w;) c.sentence.push_back(tr.to_phonemes(w, script));
    try {
      c.span = std::stoul(f[1]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, "bad span '" + f[1] + "'", lineno);
    }
    std::stringstream cs(f[2]);
    for (std::string w; std::getline(cs, w, '+');) c.constituents.push_back(tr.to_phonemes(w, script));
    if (f[3] != "_") c.label = f[3];
    if (f.size() == 6) {
      if (f[4] != "_") c.tag = MorphTag::parse(f[4]);
      if (f[5] != "_") c.deprel = f[5];
    }
    try {
      validate(c, rules);
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), lineno);
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<CompoundInstance> load_compound_corpus(const std::filesystem::path& path, const Transliterator& tr,
                                                          const RuleTable& rules, Script script = Script::kSlp1) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_compound_corpus(in, tr, rules, script);
}

struct CompoundConfig {
  std::size_t word_dim = 16;
  std::size_t tag_dim = 8;
  std::size_t label_dim = 8;
  std::size_t hidden = 32;
  std::size_t radius = 3;
};

// Row ids feeding the classifier; tag and deprel are absent for a zero block.
struct CompoundFeatures {
  std::vector<std::size_t> words;  // first, last, then context offsets -r..-1, 1..r
  std::optional<std::size_t> tag, deprel;
};

struct CompoundPrediction {
  std::string label;
  std::vector<double> distribution;  // in inventory order
};

class CompoundModel {
 public:
  static constexpr std::string_view kModuleId = "compound";

  CompoundModel() = default;

  static CompoundModel create(std::span<const CompoundInstance> corpus, std::vector<std::string> classes,
                              const std::vector<std::string>& deprels, CompoundConfig cfg = {},
                              std::uint64_t seed = 1) {
    if (classes.empty()) throw Error(ErrorCode::kInvalidArgument, "empty class inventory");
    CompoundModel m;
    m.cfg_ = cfg;
    m.classes_ = std::move(classes);
    for (const auto& c : corpus) {
      for (const auto& w : c.sentence) m.words_.add(w.slp1());
      for (const auto& w : c.constituents) m.words_.add(w.slp1());
      if (c.tag) m.tags_.add(c.tag->spec());
    }
    for (const auto& d : deprels) m.deprels_.add(d);
    m.declare();
    Rng rng(seed);
    m.ps_.init_uniform(rng);
    return m;
  }

  const ParamStore& params() const { return ps_; }
  ParamStore& params() { return ps_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const CompoundConfig& config() const { return cfg_; }

  // Parameter ids of the auxiliary heads.
  std::vector<std::size_t> aux_params() const { return {tag_W_, tag_b_, dep_W_, dep_b_}; }

  std::size_t class_id(const std::string& label) const {
    auto it = std::find(classes_.begin(), classes_.end(), label);
    if (it == classes_.end()) throw Error(ErrorCode::kUnknownLabel, "compound class '" + label + "'");
    return static_cast<std::size_t>(it - classes_.begin());
  }

  CompoundPrediction classify(const CompoundInstance& c, const RuleTable& rules,
                              const std::optional<MorphTag>& morph = std::nullopt,
                              const std::optional<std::string>& dep = std::nullopt) const {
    validate(c, rules);
    const auto f = forward(inputs(c, morph, dep));
    CompoundPrediction p;
    p.distribution = nn::softmax(nn::affine(ps_[cls_W_], &ps_[cls_b_], f.h));
    p.label = classes_[nn::argmax(p.distribution)];
    return p;
  }

  // Teacher-forced inputs: the instance's gold tag and label enter as features.
  struct Example {
    CompoundFeatures in;
    std::size_t label = 0;
    std::optional<std::size_t> tag, deprel;
  };

  Example example(const CompoundInstance& c) const {
    if (!c.label) throw Error(ErrorCode::kMissingGold, "instance has no label");
    if (c.span >= c.sentence.size()) throw Error(ErrorCode::kSpanOutOfRange, "span outside sentence");
    Example ex;
    ex.in = inputs(c, c.tag, c.deprel);
    ex.label = class_id(*c.label);
    if (c.tag && tags_.contains(c.tag->spec())) ex.tag = tags_.id(c.tag->spec());
    if (c.deprel && deprels_.contains(*c.deprel)) ex.deprel = deprels_.id(*c.deprel);
    return ex;
  }

  // w_compound * class CE + w_morph * tag CE + w_dep * label CE.
  double loss(const Example& ex, Gradients* g, const TaskWeights& w) const {
    const auto f = forward(ex.in);
    Vec dh(cfg_.hidden, 0.0);
    double total = 0;
    auto head = [&](std::size_t W, std::size_t b, std::size_t gold, double wt) {
      if (wt == 0) return;
      Vec d;
      total += wt * nn::softmax_xent(nn::affine(ps_[W], &ps_[b], f.h), gold, g ? &d : nullptr);
      if (!g) return;
      for (auto& x : d) x *= wt;
      nn::affine_backward(*g, W, b, ps_[W], f.h, d, dh);
    };
    head(cls_W_, cls_b_, ex.label, w("compound"));
    if (ex.tag) head(tag_W_, tag_b_, *ex.tag, w("morph"));
    if (ex.deprel) head(dep_W_, dep_b_, *ex.deprel, w("dep"));
    if (g) backward(ex.in, f, *g, dh);
    return total;
  }

  void save(const std::filesystem::path& path) const { save_model(path, std::string(kModuleId), meta(), ps_); }
  void write(std::ostream& out) const { write_model(out, std::string(kModuleId), meta(), ps_); }
  static CompoundModel load(const std::filesystem::path& path) { return from_file(load_model(path, kModuleId)); }
  static CompoundModel read(std::istream& in) { return from_file(read_model(in, kModuleId)); }

 private:
  struct Forward {
    Vec x, h;
  };

  CompoundFeatures inputs(const CompoundInstance& c, const std::optional<MorphTag>& morph,
                 const std::optional<std::string>& dep) const {
    CompoundFeatures in;
    in.words.push_back(words_.id(c.constituents.front().slp1()));
    in.words.push_back(words_.id(c.constituents.back().slp1()));
    const auto r = static_cast<std::ptrdiff_t>(cfg_.radius);
    for (std::ptrdiff_t o = -r; o <= r; ++o) {
      if (o == 0) continue;
      const auto j = static_cast<std::ptrdiff_t>(c.span) + o;
      in.words.push_back(j < 0 || j >= static_cast<std::ptrdiff_t>(c.sentence.size())
                             ? pad()
                             : words_.id(c.sentence[static_cast<std::size_t>(j)].slp1()));
    }
    if (morph) in.tag = tags_.id(morph->spec());
    if (dep) in.deprel = deprels_.id(*dep);
    return in;
  }

  std::size_t pad() const { return words_.size(); }
  std::size_t input_dim() const {
    return (2 + 2 * cfg_.radius) * cfg_.word_dim + cfg_.tag_dim + cfg_.label_dim;
  }

  Forward forward(const CompoundFeatures& in) const {
    Forward f;
    f.x.reserve(input_dim());
    for (auto w : in.words) {
      auto r = ps_[emb_].row(w);
      f.x.insert(f.x.end(), r.begin(), r.end());
    }
    auto block = [&](std::size_t p, const std::optional<std::size_t>& id, std::size_t dim) {
      if (id) {
        auto r = ps_[p].row(*id);
        f.x.insert(f.x.end(), r.begin(), r.end());
      } else {
        f.x.insert(f.x.end(), dim, 0.0);
      }
    };
    block(tag_emb_, in.tag, cfg_.tag_dim);
    block(dep_emb_, in.deprel, cfg_.label_dim);
    f.h = nn::affine(ps_[W_], &ps_[b_], f.x);
    nn::tanh_inplace(f.h);
    return f;
  }

  void backward(const CompoundFeatures& in, const Forward& f, Gradients& g, const Vec& dh) const {
    Vec dpre = nn::tanh_backward(f.h, dh);
    Vec dx(input_dim(), 0.0);
    nn::affine_backward(g, W_, b_, ps_[W_], f.x, dpre, dx);
    std::size_t off = 0;
    for (auto w : in.words) {
      nn::axpy(1.0, std::span<const double>(dx).subspan(off, cfg_.word_dim), g.row(emb_, w));
      off += cfg_.word_dim;
    }
    if (in.tag) nn::axpy(1.0, std::span<const double>(dx).subspan(off, cfg_.tag_dim), g.row(tag_emb_, *in.tag));
    off += cfg_.tag_dim;
    if (in.deprel) {
      nn::axpy(1.0, std::span<const double>(dx).subspan(off, cfg_.label_dim), g.row(dep_emb_, *in.deprel));
    }
  }

  void declare() {
    emb_ = ps_.add("compound.emb.word", {words_.size() + 1, cfg_.word_dim});
    tag_emb_ = ps_.add("compound.emb.tag", {tags_.size(), cfg_.tag_dim});
    dep_emb_ = ps_.add("compound.emb.deprel", {deprels_.size(), cfg_.label_dim});
    W_ = ps_.add("compound.W", {cfg_.hidden, input_dim()});
    b_ = ps_.add("compound.b", {cfg_.hidden, 1});
    cls_W_ = ps_.add("compound.class.W", {classes_.size(), cfg_.hidden}, "compound");
    cls_b_ = ps_.add("compound.class.b", {classes_.size(), 1}, "compound");
    tag_W_ = ps_.add("compound.morph.W", {tags_.size(), cfg_.hidden}, "morph");
    tag_b_ = ps_.add("compound.morph.b", {tags_.size(), 1}, "morph");
    dep_W_ = ps_.add("compound.dep.W", {deprels_.size(), cfg_.hidden}, "dep");
    dep_b_ = ps_.add("compound.dep.b", {deprels_.size(), 1}, "dep");
  }

  json meta() const {
    return {{"word_dim", cfg_.word_dim}, {"tag_dim", cfg_.tag_dim},     {"label_dim", cfg_.label_dim},
            {"hidden", cfg_.hidden},     {"radius", cfg_.radius},       {"classes", classes_},
            {"words", words_.to_json()}, {"tags", tags_.to_json()},     {"deprels", deprels_.to_json()}};
  }

  static CompoundModel from_file(ModelFile mf) {
    CompoundModel m;
    try {
      const auto& j = mf.meta;
      m.cfg_.word_dim = j.at("word_dim");
      m.cfg_.tag_dim = j.at("tag_dim");
      m.cfg_.label_dim = j.at("label_dim");
      m.cfg_.hidden = j.at("hidden");
      m.cfg_.radius = j.at("radius");
      m.classes_ = j.at("classes").get<std::vector<std::string>>();
      m.words_ = Vocab::from_json(j.at("words"));
      m.tags_ = Vocab::from_json(j.at("tags"));
      m.deprels_ = Vocab::from_json(j.at("deprels"));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kCorruptFile, std::string("compound metadata: ") + e.what());
    }
    m.declare();
    if (m.ps_.size() != mf.params.size()) throw Error(ErrorCode::kCorruptFile, "compound parameter count");
    for (std::size_t i = 0; i < m.ps_.size(); ++i) {
      if (m.ps_.info(i).name != mf.params.info(i).name || m.ps_[i].shape != mf.params[i].shape) {
        throw Error(ErrorCode::kCorruptFile, "compound parameter layout at " + m.ps_.info(i).name);
      }
    }
    m.ps_ = std::move(mf.params);
    return m;
  }

  CompoundConfig cfg_;
  std::vector<std::string> classes_;
  Vocab words_, tags_, deprels_;
  ParamStore ps_;
  std::size_t emb_ = 0, tag_emb_ = 0, dep_emb_ = 0, W_ = 0, b_ = 0;
  std::size_t cls_W_ = 0, cls_b_ = 0, tag_W_ = 0, tag_b_ = 0, dep_W_ = 0, dep_b_ = 0;
};

inline TrainResult<CompoundModel> train_compound(CompoundModel model, std::span<const CompoundInstance> corpus,
                                                 const TrainConfig& cfg) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "no compound instances");
  std::vector<CompoundModel::Example> data;
  for (const auto& c : corpus) data.push_back(model.example(c));
  return sgd_train(std::move(model), data, cfg);
}

// Mean per-class F1 over `classes` (classes absent from both sides score 0).
inline double macro_f1_over(std::span<const std::string> pred, std::span<const std::string> gold,
                            std::span<const std::string> classes) {
  if (pred.size() != gold.size()) throw Error(ErrorCode::kLengthMismatch, "prediction/gold length differ");
  if (classes.empty()) return 0.0;
  double sum = 0;
  for (const auto& k : classes) {
    std::size_t tp = 0, p = 0, g = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      p += pred[i] == k;
      g += gold[i] == k;
      tp += pred[i] == k && gold[i] == k;
    }
    sum += f1_score(tp, p, g);
  }
  return sum / static_cast<double>(classes.size());
}

struct CompoundMetrics {
  double accuracy = 0;
  double macro_f1 = 0;  // over the gold classes present
  std::size_t instances = 0;
  std::vector<std::string> inventory;

  json to_json() const {
    return {{"task", "compound"}, {"accuracy", accuracy}, {"macro_f1", macro_f1},
            {"instances", instances}, {"inventory", inventory}};
  }
};

// Morph and dependency features are taken from the instances' gold columns
// when present.
inline CompoundMetrics evaluate_compound(const CompoundModel& m, std::span<const CompoundInstance> data,
                                         const RuleTable& rules) {
  std::vector<std::string> pred, gold, present;
  for (const auto& c : data) {
    if (!c.label) throw Error(ErrorCode::kMissingGold, "instance has no label");
    pred.push_back(m.classify(c, rules, c.tag, c.deprel).label);
    gold.push_back(*c.label);
    if (std::find(present.begin(), present.end(), *c.label) == present.end()) present.push_back(*c.label);
  }
  CompoundMetrics r;
  r.instances = data.size();
  r.inventory = m.classes();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i];
  r.accuracy = data.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(data.size());
  r.macro_f1 = macro_f1_over(pred, gold, present);
  return r;
}

}  // namespace sshala
