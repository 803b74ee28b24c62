#pragma once

// Joint morphological tagging and lemmatization over a shared windowed
// encoder. Tags are decoded with a first-order CRF (emission + transition
// scores); lemmas are predicted as edit-script classes. Lexicon candidate
// tags receive a fixed additive bonus β in the emissions, at training and
// decoding time alike.

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sanskritshala/conllu.hpp"
#include "sanskritshala/lexicon.hpp"
#include "sanskritshala/nn.hpp"

namespace sshala {

// token -> lemma as "strip `strip` final phonemes, then append `append`".
struct EditScript {
  std::size_t strip = 0;
  std::string append;

  auto operator<=>(const EditScript&) const = default;

  static EditScript induce(const PhonemeString& token, const PhonemeString& lemma) {
    const auto& t = token.slp1();
    const auto& l = lemma.slp1();
    std::size_t lcp = 0;
    while (lcp < t.size() && lcp < l.size() && t[lcp] == l[lcp]) ++lcp;
    return {t.size() - lcp, l.substr(lcp)};
  }

  bool applies(const PhonemeString& token) const { return strip <= token.size(); }

  PhonemeString apply(const PhonemeString& token) const {
    return PhonemeString::unchecked(token.slp1().substr(0, token.size() - strip) + append);
  }

  std::string str() const { return "-" + std::to_string(strip) + "+" + append; }
};

struct TokenAnalysis {
  PhonemeString token;
  MorphTag tag;
  PhonemeString lemma;
  std::vector<MorphTag> candidates;
  bool in_candidates = false;
};

inline std::vector<MorphTag> candidate_tags(const PhonemeString& token, const Lexicon& lex) {
  std::set<MorphTag> s;
  for (const auto& e : lex.lookup(token)) s.insert(e.tag);
  return {s.begin(), s.end()};
}

// Highest-scoring tag sequence under sum of emit[i][t_i] + trans(t_{i-1}, t_i).
// Among equal-scoring sequences the lexicographically smallest (by tag
// index) is returned: suffix maxima are computed right to left, then tags
// are fixed left to right taking the smallest index that attains the max.
template <class Trans>
std::vector<std::size_t> viterbi(const std::vector<Vec>& emit, Trans&& trans) {
  const std::size_t n = emit.size();
  if (n == 0) return {};
  const std::size_t T = emit[0].size();
  std::vector<Vec> best(n, Vec(T));
  best[n - 1] = emit[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    for (std::size_t p = 0; p < T; ++p) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < T; ++t) m = std::max(m, trans(p, t) + best[i + 1][t]);
      best[i][p] = emit[i][p] + m;
    }
  }
  std::vector<std::size_t> out(n);
  out[0] = nn::argmax(best[0]);
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t arg = 0;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < T; ++t) {
      const double v = trans(out[i - 1], t) + best[i][t];
      if (v > m) {
        m = v;
        arg = t;
      }
    }
    out[i] = arg;
  }
  return out;
}

template <class Trans>
double sequence_score(const std::vector<Vec>& emit, Trans&& trans, std::span<const std::size_t> tags) {
  double s = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    s += emit[i][tags[i]];
    if (i) s += trans(tags[i - 1], tags[i]);
  }
  return s;
}

struct TagConfig {
  std::size_t word_dim = 16;
  std::size_t suffix_dim = 8;
  std::size_t hidden = 32;
  std::size_t radius = 2;
  double beta = 2.0;
};

struct TagExample {
  std::vector<std::vector<std::size_t>> feats;
  std::vector<std::vector<std::size_t>> candidates;  // tag ids per token
  std::vector<std::size_t> tags;
  std::vector<std::size_t> scripts;
};

class TagModel {
 public:
  static constexpr std::string_view kModuleId = "tagger";

  TagModel() = default;

  // Inventories: word/suffix vocabularies and tags from the corpus and the
  // lexicon; lemma scripts induced from the corpus.
  static TagModel create(std::span<const AnnotatedSentence> corpus, const Lexicon& lex, TagConfig cfg = {},
                         std::uint64_t seed = 1) {
    TagModel m;
    m.cfg_ = cfg;
    std::set<MorphTag> tags;
    std::set<EditScript> scripts;
    auto add_form = [&](const PhonemeString& f) {
      m.words_.add(f.slp1());
      for (std::size_t k = 1; k <= 3; ++k) m.suffixes_.add(suffix(f, k));
    };
    for (const auto& s : corpus) {
      if (s.tags.size() != s.tokens.size() || s.lemmas.size() != s.tokens.size()) {
        throw Error(ErrorCode::kMissingGold, "tagger corpus needs LEMMA and XPOS on every token");
      }
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        add_form(s.tokens[i]);
        tags.insert(s.tags[i]);
        scripts.insert(EditScript::induce(s.tokens[i], s.lemmas[i]));
      }
    }
    for (const auto& e : lex.entries()) {
      add_form(e.surface);
      tags.insert(e.tag);
    }
    scripts.insert(EditScript{});
    m.tags_.assign(tags.begin(), tags.end());
    m.scripts_.assign(scripts.begin(), scripts.end());
    m.declare();
    Rng rng(seed);
    m.ps_.init_uniform(rng);
    return m;
  }

  const ParamStore& params() const { return ps_; }
  ParamStore& params() { return ps_; }
  const TagConfig& config() const { return cfg_; }
  const std::vector<MorphTag>& tags() const { return tags_; }
  const std::vector<EditScript>& scripts() const { return scripts_; }

  std::optional<std::size_t> tag_id(const MorphTag& t) const {
    auto it = std::lower_bound(tags_.begin(), tags_.end(), t);
    if (it == tags_.end() || *it != t) return std::nullopt;
    return static_cast<std::size_t>(it - tags_.begin());
  }

  std::optional<std::size_t> script_id(const EditScript& s) const {
    auto it = std::lower_bound(scripts_.begin(), scripts_.end(), s);
    if (it == scripts_.end() || *it != s) return std::nullopt;
    return static_cast<std::size_t>(it - scripts_.begin());
  }

  TagExample example(const AnnotatedSentence& s, const Lexicon& lex) const {
    if (s.tokens.empty()) throw Error(ErrorCode::kEmptyInput, "empty sentence");
    if (s.tags.size() != s.tokens.size() || s.lemmas.size() != s.tokens.size()) {
      throw Error(ErrorCode::kMissingGold, "sentence lacks gold tags or lemmas");
    }
    TagExample ex = inputs(s.tokens, lex);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      auto t = tag_id(s.tags[i]);
      if (!t) throw Error(ErrorCode::kUnknownLabel, "tag " + s.tags[i].spec() + " outside inventory", i);
      auto sc = script_id(EditScript::induce(s.tokens[i], s.lemmas[i]));
      if (!sc) {
        throw Error(ErrorCode::kUnreachableLemma,
                    "no edit script maps " + s.tokens[i].slp1() + " to " + s.lemmas[i].slp1(), i);
      }
      ex.tags.push_back(*t);
      ex.scripts.push_back(*sc);
    }
    return ex;
  }

  // Emission scores including the candidate bonus.
  std::vector<Vec> emissions(const TagExample& ex) const {
    auto c = enc_.forward(ps_, ex.feats);
    return emissions(ex, c);
  }

  double transition(std::size_t p, std::size_t t) const { return ps_[trans_].at(p, t); }

  std::vector<TokenAnalysis> tag_sentence(std::span<const PhonemeString> tokens, const Lexicon& lex) const {
    if (tokens.empty()) throw Error(ErrorCode::kEmptyInput, "no tokens to tag");
    const TagExample ex = inputs(tokens, lex);
    const auto c = enc_.forward(ps_, ex.feats);
    const auto emit = emissions(ex, c);
    const auto best = viterbi(emit, [&](std::size_t p, std::size_t t) { return transition(p, t); });
    std::vector<TokenAnalysis> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      TokenAnalysis a;
      a.token = tokens[i];
      a.tag = tags_[best[i]];
      const Vec ls = nn::affine(ps_[lemma_W_], &ps_[lemma_b_], c.h[i]);
      std::size_t arg = 0;
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < scripts_.size(); ++s) {
        if (scripts_[s].applies(tokens[i]) && ls[s] > m) {
          m = ls[s];
          arg = s;
        }
      }
      a.lemma = scripts_[arg].apply(tokens[i]);
      a.candidates = candidate_tags(tokens[i], lex);
      a.in_candidates = std::binary_search(a.candidates.begin(), a.candidates.end(), a.tag);
      out.push_back(std::move(a));
    }
    return out;
  }

  // w_tag * CRF negative log-likelihood + w_lemma * Σ script cross-entropy.
  double loss(const TagExample& ex, Gradients* g, const TaskWeights& w) const {
    const double wt = w("tag"), wl = w("lemma");
    const std::size_t n = ex.feats.size(), T = tags_.size();
    const auto c = enc_.forward(ps_, ex.feats);
    double total = 0;
    std::vector<Vec> dh(n, Vec(cfg_.hidden, 0.0));
    if (wt > 0) {
      const auto emit = emissions(ex, c);
      const Tensor& tr = ps_[trans_];
      std::vector<Vec> alpha(n, Vec(T)), beta(n, Vec(T, 0.0));
      alpha[0] = emit[0];
      Vec tmp(T);
      for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t p = 0; p < T; ++p) tmp[p] = alpha[i - 1][p] + tr.at(p, t);
          alpha[i][t] = nn::logsumexp(tmp) + emit[i][t];
        }
      }
      for (std::size_t i = n - 1; i-- > 0;) {
        for (std::size_t p = 0; p < T; ++p) {
          for (std::size_t t = 0; t < T; ++t) tmp[t] = tr.at(p, t) + emit[i + 1][t] + beta[i + 1][t];
          beta[i][p] = nn::logsumexp(tmp);
        }
      }
      const double logz = nn::logsumexp(alpha[n - 1]);
      const double gold = sequence_score(emit, [&](std::size_t p, std::size_t t) { return tr.at(p, t); }, ex.tags);
      total += wt * (logz - gold);
      if (g) {
        for (std::size_t i = 0; i < n; ++i) {
          Vec demit(T);
          for (std::size_t t = 0; t < T; ++t) demit[t] = std::exp(alpha[i][t] + beta[i][t] - logz);
          demit[ex.tags[i]] -= 1.0;
          for (auto& d : demit) d *= wt;
          nn::affine_backward(*g, emit_W_, emit_b_, ps_[emit_W_], c.h[i], demit, dh[i]);
          if (i == 0) continue;
          for (std::size_t p = 0; p < T; ++p) {
            auto grow = g->row(trans_, p);
            for (std::size_t t = 0; t < T; ++t) {
              grow[t] += wt * std::exp(alpha[i - 1][p] + tr.at(p, t) + emit[i][t] + beta[i][t] - logz);
            }
          }
          g->row(trans_, ex.tags[i - 1])[ex.tags[i]] -= wt;
        }
      }
    }
    if (wl > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        const Vec ls = nn::affine(ps_[lemma_W_], &ps_[lemma_b_], c.h[i]);
        Vec d;
        total += wl * nn::softmax_xent(ls, ex.scripts[i], g ? &d : nullptr);
        if (g) {
          for (auto& x : d) x *= wl;
          nn::affine_backward(*g, lemma_W_, lemma_b_, ps_[lemma_W_], c.h[i], d, dh[i]);
        }
      }
    }
    if (g) enc_.backward(ps_, *g, ex.feats, c, dh);
    return total;
  }

  void save(const std::filesystem::path& path) const { save_model(path, std::string(kModuleId), meta(), ps_); }
  void write(std::ostream& out) const { write_model(out, std::string(kModuleId), meta(), ps_); }
  static TagModel load(const std::filesystem::path& path) { return from_file(load_model(path, kModuleId)); }
  static TagModel read(std::istream& in) { return from_file(read_model(in, kModuleId)); }

 private:
  static std::string suffix(const PhonemeString& f, std::size_t k) {
    const auto& s = f.slp1();
    return "~" + (s.size() >= k ? s.substr(s.size() - k) : "^" + s);
  }

  TagExample inputs(std::span<const PhonemeString> tokens, const Lexicon& lex) const {
    TagExample ex;
    for (const auto& tok : tokens) {
      ex.feats.push_back({words_.id(tok.slp1()), suffixes_.id(suffix(tok, 1)), suffixes_.id(suffix(tok, 2)),
                          suffixes_.id(suffix(tok, 3))});
      std::vector<std::size_t> cand;
      for (const auto& t : candidate_tags(tok, lex)) {
        if (auto id = tag_id(t)) cand.push_back(*id);
      }
      ex.candidates.push_back(std::move(cand));
    }
    return ex;
  }

  std::vector<Vec> emissions(const TagExample& ex, const WindowEncoder::Cache& c) const {
    std::vector<Vec> emit;
    for (std::size_t i = 0; i < ex.feats.size(); ++i) {
      Vec e = nn::affine(ps_[emit_W_], &ps_[emit_b_], c.h[i]);
      for (auto t : ex.candidates[i]) e[t] += cfg_.beta;
      emit.push_back(std::move(e));
    }
    return emit;
  }

  void declare() {
    enc_ = WindowEncoder(ps_, "tag.enc",
                         {{"word", words_.size(), cfg_.word_dim},
                          {"suf1", suffixes_.size(), cfg_.suffix_dim},
                          {"suf2", suffixes_.size(), cfg_.suffix_dim},
                          {"suf3", suffixes_.size(), cfg_.suffix_dim}},
                         cfg_.radius, cfg_.hidden);
    emit_W_ = ps_.add("tag.emit.W", {tags_.size(), cfg_.hidden}, "tag");
    emit_b_ = ps_.add("tag.emit.b", {tags_.size(), 1}, "tag");
    trans_ = ps_.add("tag.trans", {tags_.size(), tags_.size()}, "tag");
    lemma_W_ = ps_.add("lemma.W", {scripts_.size(), cfg_.hidden}, "lemma");
    lemma_b_ = ps_.add("lemma.b", {scripts_.size(), 1}, "lemma");
  }

  json meta() const {
    json tags = json::array(), scripts = json::array();
    for (const auto& t : tags_) tags.push_back(t.spec());
    for (const auto& s : scripts_) scripts.push_back({s.strip, s.append});
    return {{"word_dim", cfg_.word_dim}, {"suffix_dim", cfg_.suffix_dim}, {"hidden", cfg_.hidden},
            {"radius", cfg_.radius},     {"beta", cfg_.beta},             {"words", words_.to_json()},
            {"suffixes", suffixes_.to_json()}, {"tags", tags},            {"scripts", scripts}};
  }

  static TagModel from_file(ModelFile mf) {
    TagModel m;
    try {
      const auto& j = mf.meta;
      m.cfg_.word_dim = j.at("word_dim");
      m.cfg_.suffix_dim = j.at("suffix_dim");
      m.cfg_.hidden = j.at("hidden");
      m.cfg_.radius = j.at("radius");
      m.cfg_.beta = j.at("beta");
      m.words_ = Vocab::from_json(j.at("words"));
      m.suffixes_ = Vocab::from_json(j.at("suffixes"));
      for (const auto& t : j.at("tags")) m.tags_.push_back(MorphTag::parse(t.get<std::string>()));
      for (const auto& s : j.at("scripts")) m.scripts_.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::string>()});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kCorruptFile, std::string("tagger metadata: ") + e.what());
    }
    m.declare();
    if (m.ps_.size() != mf.params.size()) throw Error(ErrorCode::kCorruptFile, "tagger parameter count");
    for (std::size_t i = 0; i < m.ps_.size(); ++i) {
      if (m.ps_[i].shape != mf.params[i].shape) throw Error(ErrorCode::kCorruptFile, "tagger parameter shape");
    }
    m.ps_ = std::move(mf.params);
    return m;
  }

  TagConfig cfg_;
  Vocab words_, suffixes_;
  std::vector<MorphTag> tags_;
  std::vector<EditScript> scripts_;
  ParamStore ps_;
  WindowEncoder enc_;
  std::size_t emit_W_ = 0, emit_b_ = 0, trans_ = 0, lemma_W_ = 0, lemma_b_ = 0;
};

// ---------------------------------------------------------------------------

// F1 from true positives, predicted count and gold count; 0 when undefined.
inline double f1_score(std::size_t tp, std::size_t predicted, std::size_t gold) {
  if (tp == 0 || predicted == 0 || gold == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(predicted);
  const double r = static_cast<double>(tp) / static_cast<double>(gold);
  return 2 * p * r / (p + r);
}

// Mean per-class F1 over classes present in gold or predictions.
template <class T>
double macro_f1(std::span<const T> pred, std::span<const T> gold) {
  if (pred.size() != gold.size()) throw Error(ErrorCode::kLengthMismatch, "prediction/gold length differ");
  std::map<T, std::array<std::size_t, 3>> c;  // tp, predicted, gold
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++c[pred[i]][1];
    ++c[gold[i]][2];
    if (pred[i] == gold[i]) ++c[gold[i]][0];
  }
  if (c.empty()) return 0.0;
  double sum = 0;
  for (const auto& [_, v] : c) sum += f1_score(v[0], v[1], v[2]);
  return sum / static_cast<double>(c.size());
}

struct TagMetrics {
  double accuracy = 0;
  double macro_f1 = 0;
  double micro_f1 = 0;
  double lemma_accuracy = 0;
  std::size_t tokens = 0;

  json to_json() const {
    return {{"task", "morph"},
            {"token_accuracy", accuracy},
            {"macro_f1_tags", macro_f1},
            {"micro_f1_tags", micro_f1},
            {"lemma_accuracy", lemma_accuracy},
            {"tokens", tokens}};
  }
};

inline TagMetrics evaluate_tagger(const TagModel& m, std::span<const AnnotatedSentence> data, const Lexicon& lex) {
  std::vector<MorphTag> pred, gold;
  std::size_t lemma_hits = 0;
  for (const auto& s : data) {
    const auto out = m.tag_sentence(s.tokens, lex);
    for (std::size_t i = 0; i < out.size(); ++i) {
      pred.push_back(out[i].tag);
      gold.push_back(s.tags.at(i));
      if (i < s.lemmas.size() && out[i].lemma == s.lemmas[i]) ++lemma_hits;
    }
  }
  TagMetrics r;
  r.tokens = gold.size();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += pred[i] == gold[i];
  r.accuracy = gold.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(gold.size());
  r.micro_f1 = f1_score(hits, pred.size(), gold.size());
  r.macro_f1 = macro_f1<MorphTag>(pred, gold);
  r.lemma_accuracy = gold.empty() ? 0.0 : static_cast<double>(lemma_hits) / static_cast<double>(gold.size());
  return r;
}

}  // namespace sshala
