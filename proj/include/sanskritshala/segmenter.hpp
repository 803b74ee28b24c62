#pragma once

// Lattice-constrained word segmentation.
//
// Each edge gets a character-window score
//
//   v · tanh(W [c(start-2..start+1); c(end-2..end+1)] + b + Rin[rule_in] + Rout[rule_out])
//     + word_bias[word]      (lexicon edges)
//     + fallback_penalty     (fallback edges)
//
// and a path scores the left-to-right sum of (edge score + λ·in_lexicon).
// Decoding keeps a k-best list per edge; the path ranker then re-scores the
// k survivors with word-level features. Scorer parameters belong to task
// "segment", ranker parameters to task "rank", so each half can be trained
// with the other frozen.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "sanskritshala/lattice.hpp"
#include "sanskritshala/nn.hpp"

namespace sshala {

struct Segmentation {
  std::vector<PhonemeString> words;
  double score = 0;
  std::vector<std::size_t> path;
  std::size_t out_of_lexicon = 0;  // fallback edges on the path
};

struct SegConfig {
  std::size_t char_dim = 8;
  std::size_t hidden = 16;
  std::size_t word_dim = 8;
  double lambda = 1.0;
  std::size_t beam = 8;
  std::size_t max_word_len = Lattice::kDefaultMaxWordLen;
};

// A training sentence with its lattice and gold path precomputed.
struct SegExample {
  std::vector<PhonemeString> gold;
  Lattice lattice;
  std::vector<std::size_t> gold_path;

  static SegExample make(std::vector<PhonemeString> gold, const Lexicon& lex, const RuleTable& rules,
                         std::size_t max_word_len = Lattice::kDefaultMaxWordLen) {
    if (gold.empty()) throw Error(ErrorCode::kEmptyInput, "empty gold segmentation");
    SegExample ex;
    ex.lattice = Lattice::build(rules.join_words(gold), lex, rules, max_word_len);
    ex.gold_path = ex.lattice.find_path(gold);
    if (ex.gold_path.empty()) {
      throw Error(ErrorCode::kMissingGold, "gold segmentation is not a lattice path: " + ex.lattice.surface().slp1());
    }
    ex.gold = std::move(gold);
    return ex;
  }
};

// Candidate list for ranker training; `gold` indexes the candidate matching
// the reference, or is absent when the beam missed it.
struct RankExample {
  std::vector<Segmentation> candidates;
  std::optional<std::size_t> gold;
};

inline int perfect_match(std::span<const PhonemeString> pred, std::span<const PhonemeString> gold) {
  return std::equal(pred.begin(), pred.end(), gold.begin(), gold.end()) ? 1 : 0;
}

class SegModel {
 public:
  static constexpr std::string_view kModuleId = "segmenter";

  SegModel() = default;

  // Vocabulary = lexicon forms plus any extra training words. Parameters
  // start uniform in [-0.1, 0.1]; the ranker's output weights start at zero
  // so an untrained ranker keeps decode order.
  static SegModel create(const Transliterator& tr, const Lexicon& lex, const RuleTable& rules, SegConfig cfg = {},
                         std::uint64_t seed = 1, std::span<const std::vector<PhonemeString>> extra_words = {}) {
    SegModel m;
    m.cfg_ = cfg;
    m.alphabet_ = tr.symbols();
    m.rule_count_ = rules.size();
    for (const auto& f : lex.forms()) m.words_.add(f.slp1());
    for (const auto& sent : extra_words) {
      for (const auto& w : sent) m.words_.add(w.slp1());
    }
    m.declare();
    Rng rng(seed);
    m.ps_.init_uniform(rng);
    for (auto p : {m.r_, m.a_, m.b_oov_}) std::fill(m.ps_[p].data.begin(), m.ps_[p].data.end(), 0.0);
    return m;
  }

  const ParamStore& params() const { return ps_; }
  ParamStore& params() { return ps_; }
  const SegConfig& config() const { return cfg_; }
  SegConfig& config() { return cfg_; }
  const Vocab& words() const { return words_; }

  // Character-scorer part of an edge score.
  double edge_score(const Lattice& lat, std::size_t e) const { return edge_forward(lat, e, nullptr); }

  double edge_total(const Lattice& lat, std::size_t e) const {
    return edge_score(lat, e) + (lat.edge(e).in_lexicon ? cfg_.lambda : 0.0);
  }

  double score_path(const Lattice& lat, std::span<const std::size_t> path) const {
    if (!lat.is_path(path)) throw Error(ErrorCode::kNotAPath, "not a full lattice path");
    double s = 0;
    for (auto e : path) s += edge_total(lat, e);
    return s;
  }

  // Top-k full paths by score, ties broken by word sequence then edge ids.
  std::vector<Segmentation> decode(const Lattice& lat) const { return decode(lat, cfg_.beam); }

  std::vector<Segmentation> decode(const Lattice& lat, std::size_t k) const {
    if (k == 0) throw Error(ErrorCode::kInvalidArgument, "beam width must be positive");
    const std::size_t m = lat.edges().size();
    std::vector<double> total(m);
    for (std::size_t e = 0; e < m; ++e) total[e] = edge_total(lat, e);
    std::vector<std::vector<Partial>> best(m);
    std::vector<Partial> finals;
    auto better = [&](const Partial& a, const Partial& b) { return ahead(lat, a, b); };
    for (std::size_t e = 0; e < m; ++e) {
      std::vector<Partial> cands;
      if (lat.initial(e)) cands.push_back({total[e], {e}});
      for (auto p : lat.predecessors(e)) {
        for (const auto& prev : best[p]) {
          Partial x{prev.score + total[e], prev.edges};
          x.edges.push_back(e);
          cands.push_back(std::move(x));
        }
      }
      std::sort(cands.begin(), cands.end(), better);
      if (cands.size() > k) cands.resize(k);
      if (lat.final(e)) finals.insert(finals.end(), cands.begin(), cands.end());
      best[e] = std::move(cands);
    }
    std::sort(finals.begin(), finals.end(), better);
    if (finals.size() > k) finals.resize(k);
    std::vector<Segmentation> out;
    for (auto& f : finals) out.push_back(to_segmentation(lat, f));
    return out;
  }

  double rank_score(const Segmentation& s) const {
    Vec sum(cfg_.word_dim, 0.0);
    for (const auto& w : s.words) nn::axpy(1.0, ps_[E_].row(words_.id(w.slp1())), sum);
    return nn::dot(ps_[r_].data, sum) + ps_[a_].data[0] * static_cast<double>(s.words.size()) +
           ps_[b_oov_].data[0] * static_cast<double>(s.out_of_lexicon);
  }

  // Highest ranker score; the earliest candidate wins ties.
  Segmentation rank_paths(std::span<const Segmentation> candidates) const {
    if (candidates.empty()) throw Error(ErrorCode::kEmptyInput, "no candidates to rank");
    std::size_t best = 0;
    double best_score = rank_score(candidates[0]);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      const double s = rank_score(candidates[i]);
      if (s > best_score) {
        best = i;
        best_score = s;
      }
    }
    return candidates[best];
  }

  Segmentation segment(const Lattice& lat) const {
    auto cands = decode(lat);
    return rank_paths(cands);
  }

  // Structured hinge: max(0, 1 + score(best wrong path) - score(gold path)).
  double loss(const SegExample& ex, Gradients* g, const TaskWeights& w) const {
    const double weight = w("segment");
    if (weight == 0) return 0.0;
    const auto cands = decode(ex.lattice, std::max<std::size_t>(cfg_.beam, 2));
    const Segmentation* wrong = nullptr;
    for (const auto& c : cands) {
      if (!perfect_match(c.words, ex.gold)) {
        wrong = &c;
        break;
      }
    }
    if (!wrong) return 0.0;
    const double gold_score = score_path(ex.lattice, ex.gold_path);
    const double margin = 1.0 + wrong->score - gold_score;
    if (margin <= 0) return 0.0;
    if (g) {
      for (auto e : wrong->path) edge_forward(ex.lattice, e, g, weight);
      for (auto e : ex.gold_path) edge_forward(ex.lattice, e, g, -weight);
    }
    return weight * margin;
  }

  // Cross-entropy of the gold candidate under softmax of ranker scores.
  double loss(const RankExample& ex, Gradients* g, const TaskWeights& w) const {
    const double weight = w("rank");
    if (weight == 0 || !ex.gold || ex.candidates.empty()) return 0.0;
    Vec scores;
    for (const auto& c : ex.candidates) scores.push_back(rank_score(c));
    Vec d;
    const double l = nn::softmax_xent(scores, *ex.gold, g ? &d : nullptr);
    if (g) {
      for (std::size_t j = 0; j < ex.candidates.size(); ++j) {
        const double dj = weight * d[j];
        if (dj == 0) continue;
        const auto& c = ex.candidates[j];
        Vec sum(cfg_.word_dim, 0.0);
        for (const auto& wd : c.words) {
          const auto id = words_.id(wd.slp1());
          nn::axpy(1.0, ps_[E_].row(id), sum);
          nn::axpy(dj, ps_[r_].data, g->row(E_, id));
        }
        auto gr = g->all(r_);
        nn::axpy(dj, sum, gr);
        g->row(a_, 0)[0] += dj * static_cast<double>(c.words.size());
        g->row(b_oov_, 0)[0] += dj * static_cast<double>(c.out_of_lexicon);
      }
    }
    return weight * l;
  }

  RankExample rank_example(const SegExample& ex) const {
    RankExample r;
    r.candidates = decode(ex.lattice);
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      if (perfect_match(r.candidates[i].words, ex.gold)) {
        r.gold = i;
        break;
      }
    }
    return r;
  }

  void save(const std::filesystem::path& path) const { save_model(path, std::string(kModuleId), meta(), ps_); }
  void write(std::ostream& out) const { write_model(out, std::string(kModuleId), meta(), ps_); }

  static SegModel load(const std::filesystem::path& path, const RuleTable& rules) {
    return from_file(load_model(path, kModuleId), rules);
  }
  static SegModel read(std::istream& in, const RuleTable& rules) { return from_file(read_model(in, kModuleId), rules); }

 private:
  struct Partial {
    double score;
    std::vector<std::size_t> edges;
  };

  static bool ahead(const Lattice& lat, const Partial& a, const Partial& b) {
    if (a.score != b.score) return a.score > b.score;
    const std::size_t n = std::min(a.edges.size(), b.edges.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& wa = lat.edge(a.edges[i]).word;
      const auto& wb = lat.edge(b.edges[i]).word;
      if (wa != wb) return wa < wb;
    }
    if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
    return a.edges < b.edges;
  }

  static Segmentation to_segmentation(const Lattice& lat, const Partial& p) {
    Segmentation s;
    s.score = p.score;
    s.path = p.edges;
    s.words = lat.words(p.edges);
    for (auto e : p.edges) s.out_of_lexicon += lat.edge(e).in_lexicon ? 0 : 1;
    return s;
  }

  void declare() {
    const std::size_t A = alphabet_.size();
    const std::size_t R = rule_count_ + 1;
    chars_ = ps_.add("seg.chars", {A + 2, cfg_.char_dim}, "segment");
    W_ = ps_.add("seg.W", {cfg_.hidden, kWindow * cfg_.char_dim}, "segment");
    bias_ = ps_.add("seg.b", {cfg_.hidden, 1}, "segment");
    rin_ = ps_.add("seg.rule_in", {R, cfg_.hidden}, "segment");
    rout_ = ps_.add("seg.rule_out", {R, cfg_.hidden}, "segment");
    v_ = ps_.add("seg.v", {cfg_.hidden, 1}, "segment");
    wbias_ = ps_.add("seg.word_bias", {words_.size(), 1}, "segment");
    fallback_ = ps_.add("seg.fallback", {1, 1}, "segment");
    E_ = ps_.add("rank.E", {words_.size(), cfg_.word_dim}, "rank");
    r_ = ps_.add("rank.r", {cfg_.word_dim, 1}, "rank");
    a_ = ps_.add("rank.count", {1, 1}, "rank");
    b_oov_ = ps_.add("rank.oov", {1, 1}, "rank");
  }

  std::size_t char_row(const PhonemeString& s, std::ptrdiff_t pos) const {
    const std::size_t A = alphabet_.size();
    if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(s.size())) return A + 1;
    const auto at = alphabet_.find(s[static_cast<std::size_t>(pos)]);
    return at == std::string::npos ? A : at;
  }

  // Edge score; with `g`, accumulates scale * d(score)/d(params).
  double edge_forward(const Lattice& lat, std::size_t e, Gradients* g, double scale = 1.0) const {
    const auto& ed = lat.edge(e);
    const auto& s = lat.surface();
    std::size_t rows[kWindow];
    std::size_t slot = 0;
    for (std::size_t boundary : {ed.start, ed.end}) {
      for (std::ptrdiff_t o = -2; o < 2; ++o) rows[slot++] = char_row(s, static_cast<std::ptrdiff_t>(boundary) + o);
    }
    Vec x;
    x.reserve(kWindow * cfg_.char_dim);
    for (auto r : rows) {
      auto emb = ps_[chars_].row(r);
      x.insert(x.end(), emb.begin(), emb.end());
    }
    const std::size_t ri = ed.rule_in ? *ed.rule_in + 1 : 0;
    const std::size_t ro = ed.rule_out ? *ed.rule_out + 1 : 0;
    Vec h = nn::affine(ps_[W_], &ps_[bias_], x);
    nn::axpy(1.0, ps_[rin_].row(ri), h);
    nn::axpy(1.0, ps_[rout_].row(ro), h);
    nn::tanh_inplace(h);
    const std::size_t wid = words_.id(ed.word.slp1());
    double score = nn::dot(ps_[v_].data, h) + (ed.in_lexicon ? ps_[wbias_].data[wid] : ps_[fallback_].data[0]);
    if (g) {
      for (std::size_t i = 0; i < h.size(); ++i) g->row(v_, i)[0] += scale * h[i];
      if (ed.in_lexicon) {
        g->row(wbias_, wid)[0] += scale;
      } else {
        g->row(fallback_, 0)[0] += scale;
      }
      Vec dh(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) dh[i] = scale * ps_[v_].data[i];
      Vec dpre = nn::tanh_backward(h, dh);
      nn::axpy(1.0, dpre, g->row(rin_, ri));
      nn::axpy(1.0, dpre, g->row(rout_, ro));
      Vec dx(x.size(), 0.0);
      nn::affine_backward(*g, W_, bias_, ps_[W_], x, dpre, dx);
      for (std::size_t k = 0; k < kWindow; ++k) {
        auto gr = g->row(chars_, rows[k]);
        for (std::size_t d = 0; d < cfg_.char_dim; ++d) gr[d] += dx[k * cfg_.char_dim + d];
      }
    }
    return score;
  }

  json meta() const {
    return {{"char_dim", cfg_.char_dim}, {"hidden", cfg_.hidden},   {"word_dim", cfg_.word_dim},
            {"lambda", cfg_.lambda},     {"beam", cfg_.beam},       {"max_word_len", cfg_.max_word_len},
            {"alphabet", alphabet_},     {"rules", rule_count_},    {"words", words_.to_json()}};
  }

  static SegModel from_file(ModelFile mf, const RuleTable& rules) {
    SegModel m;
    try {
      const auto& j = mf.meta;
      m.cfg_.char_dim = j.at("char_dim");
      m.cfg_.hidden = j.at("hidden");
      m.cfg_.word_dim = j.at("word_dim");
      m.cfg_.lambda = j.at("lambda");
      m.cfg_.beam = j.at("beam");
      m.cfg_.max_word_len = j.at("max_word_len");
      m.alphabet_ = j.at("alphabet").get<std::string>();
      m.rule_count_ = j.at("rules");
      m.words_ = Vocab::from_json(j.at("words"));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kCorruptFile, std::string("segmenter metadata: ") + e.what());
    }
    if (m.rule_count_ != rules.size()) {
      throw Error(ErrorCode::kCorruptFile, "model was trained with a different rule table");
    }
    m.declare();
    for (std::size_t i = 0; i < m.ps_.size(); ++i) {
      if (m.ps_.info(i).name != mf.params.info(i).name || m.ps_[i].shape != mf.params[i].shape) {
        throw Error(ErrorCode::kCorruptFile, "parameter layout mismatch at " + m.ps_.info(i).name);
      }
    }
    m.ps_ = std::move(mf.params);
    return m;
  }

  static constexpr std::size_t kWindow = 8;

  SegConfig cfg_;
  std::string alphabet_;
  std::size_t rule_count_ = 0;
  Vocab words_;
  ParamStore ps_;
  std::size_t chars_ = 0, W_ = 0, bias_ = 0, rin_ = 0, rout_ = 0, v_ = 0, wbias_ = 0, fallback_ = 0;
  std::size_t E_ = 0, r_ = 0, a_ = 0, b_oov_ = 0;
};

// ---------------------------------------------------------------------------

// One gold segmentation per line, words joined by '_'. A `# script:` comment
// switches the encoding of following lines (SLP1 by default).
inline std::vector<std::vector<PhonemeString>> read_seg_corpus(std::istream& in, const Transliterator& tr) {
  std::vector<std::vector<PhonemeString>> out;
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
    std::vector<PhonemeString> words;
    std::size_t start = 0;
    while (true) {
      const auto us = line.find('_', start);
      const std::string w = line.substr(start, us == std::string::npos ? std::string::npos : us - start);
      if (w.empty()) throw Error(ErrorCode::kParseError, "empty word", lineno);
      try {
        words.push_back(tr.to_phonemes(w, script));
      } catch (const Error&) {
        throw Error(ErrorCode::kParseError, "bad characters in word '" + w + "'", lineno);
      }
      if (us == std::string::npos) break;
      start = us + 1;
    }
    out.push_back(std::move(words));
  }
  return out;
}

inline std::vector<std::vector<PhonemeString>> load_seg_corpus(const std::filesystem::path& path,
                                                              const Transliterator& tr) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_seg_corpus(in, tr);
}

struct SegTrainResult {
  SegModel model;
  std::vector<double> scorer_loss;
  std::vector<double> ranker_loss;
};

// Trains the edge scorer, then the ranker on the trained scorer's beams.
inline SegTrainResult train_segmenter(SegModel model, std::span<const SegExample> data, TrainConfig scorer_cfg,
                                      TrainConfig ranker_cfg) {
  scorer_cfg.loss_weights = TaskWeights{{"segment", 1.0}, {"rank", 0.0}};
  auto s = sgd_train(std::move(model), data, scorer_cfg);
  std::vector<RankExample> rex;
  for (const auto& ex : data) rex.push_back(s.model.rank_example(ex));
  ranker_cfg.loss_weights = TaskWeights{{"segment", 0.0}, {"rank", 1.0}};
  auto r = sgd_train(std::move(s.model), std::span<const RankExample>(rex), ranker_cfg);
  return {std::move(r.model), std::move(s.epoch_loss), std::move(r.epoch_loss)};
}

struct SegEvaluation {
  double pm = 0;
  std::vector<int> per_sentence;
  json report;
};

inline SegEvaluation evaluate_segmenter(const SegModel& model, std::span<const SegExample> data) {
  SegEvaluation ev;
  json sentences = json::array();
  for (const auto& ex : data) {
    const auto pred = model.segment(ex.lattice);
    const int pm = perfect_match(pred.words, ex.gold);
    ev.per_sentence.push_back(pm);
    json pw = json::array(), gw = json::array();
    for (const auto& w : pred.words) pw.push_back(w.slp1());
    for (const auto& w : ex.gold) gw.push_back(w.slp1());
    sentences.push_back({{"surface", ex.lattice.surface().slp1()}, {"gold", gw}, {"pred", pw}, {"pm", pm}});
  }
  int hits = 0;
  for (int x : ev.per_sentence) hits += x;
  ev.pm = data.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(data.size());
  ev.report = {{"task", "segment"}, {"sentences", sentences}, {"pm", ev.pm}, {"count", data.size()}};
  return ev;
}

}  // namespace sshala
