#pragma once

// Arc-factored dependency parsing.
//
// Token representations come from a windowed encoder over word and tag
// embeddings (p_i). Pretrained auxiliary encoders for dependency labels
// (LT), monolithic morph tags (MT) and case (CT) can be attached; their
// outputs are concatenated in LT, MT, CT order, projected to the parser
// width (a_i = P [aux...]) and merged through a gate:
//
//   g_i = logistic(G [p_i; a_i] + b_g),   h_i = g_i ⊙ p_i + (1 - g_i) ⊙ a_i
//
// With nothing attached h_i = p_i. Arcs score
//
//   s[h][d] = h_hᵀ U h_d + u · h_h + bias[bucket(h, d)]
//
// with h_0 a learned root vector; labels are an affine map of [h_h; h_d].
// Trees are decoded with Chu-Liu/Edmonds under a single-root constraint.

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sanskritshala/conllu.hpp"
#include "sanskritshala/lexicon.hpp"
#include "sanskritshala/nn.hpp"

namespace sshala {

struct DependencyTree {
  std::vector<std::size_t> heads;   // heads[i] is the head of token i+1; 0 = root
  std::vector<std::string> labels;  // may be empty for unlabeled trees

  std::size_t size() const { return heads.size(); }
  bool operator==(const DependencyTree&) const = default;
};

// Empty when `heads` is a single-rooted arborescence over 1..n, else the reason.
inline std::optional<std::string> tree_violation(std::span<const std::size_t> heads) {
  const std::size_t n = heads.size();
  if (n == 0) return "empty tree";
  std::size_t roots = 0;
  for (std::size_t d = 1; d <= n; ++d) {
    const auto h = heads[d - 1];
    if (h > n) return "head out of range";
    if (h == d) return "self loop";
    roots += h == 0;
  }
  if (roots != 1) return roots == 0 ? "cycle" : "multiple roots";
  for (std::size_t d = 1; d <= n; ++d) {
    std::size_t x = d;
    for (std::size_t steps = 0; x != 0; ++steps) {
      if (steps > n) return "cycle";
      x = heads[x - 1];
    }
  }
  return std::nullopt;
}

inline bool is_arborescence(std::span<const std::size_t> heads) { return !tree_violation(heads); }

// s[h][d] for h in 0..n, d in 1..n (row/column 0 of d unused).
struct ArcScores {
  std::vector<Vec> s;

  explicit ArcScores(std::size_t n = 0) : s(n + 1, Vec(n + 1, 0.0)) {}
  std::size_t n() const { return s.empty() ? 0 : s.size() - 1; }
  double operator()(std::size_t h, std::size_t d) const { return s[h][d]; }
  double& operator()(std::size_t h, std::size_t d) { return s[h][d]; }
};

// Σ_d s[heads[d]][d], summed in dependent order.
inline double tree_score(const ArcScores& a, std::span<const std::size_t> heads) {
  double t = 0;
  for (std::size_t d = 1; d <= heads.size(); ++d) t += a(heads[d - 1], d);
  return t;
}

namespace detail {

// Unconstrained maximum spanning arborescence rooted at node 0 over a dense
// score matrix (S[h][d], -inf = absent). Returns parent per node, parent[0]
// unused. Ties prefer the smaller head index, then the smaller dependent.
inline std::vector<std::size_t> chu_liu_edmonds(const std::vector<Vec>& S) {
  const std::size_t N = S.size();
  constexpr double kNeg = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> parent(N, 0);
  for (std::size_t d = 1; d < N; ++d) {
    double best = kNeg;
    std::size_t arg = d == 0 ? 1 : 0;
    bool found = false;
    for (std::size_t h = 0; h < N; ++h) {
      if (h == d) continue;
      if (!found || S[h][d] > best) {
        best = S[h][d];
        arg = h;
        found = true;
      }
    }
    parent[d] = arg;
  }
  // Find a cycle (the one through the smallest node involved in any cycle).
  std::vector<int> color(N, 0);
  std::vector<std::size_t> cycle;
  for (std::size_t start = 1; start < N && cycle.empty(); ++start) {
    std::vector<std::size_t> trail;
    std::size_t x = start;
    while (x != 0 && color[x] == 0) {
      color[x] = 1;
      trail.push_back(x);
      x = parent[x];
    }
    if (x != 0 && color[x] == 1) {
      std::size_t y = x;
      do {
        cycle.push_back(y);
        y = parent[y];
      } while (y != x);
      std::sort(cycle.begin(), cycle.end());
    }
    for (auto t : trail) color[t] = 2;
  }
  if (cycle.empty()) return parent;

  std::vector<char> in_cycle(N, 0);
  for (auto c : cycle) in_cycle[c] = 1;
  std::vector<std::size_t> old_of, new_of(N, 0);
  for (std::size_t v = 0; v < N; ++v) {
    if (!in_cycle[v]) {
      new_of[v] = old_of.size();
      old_of.push_back(v);
    }
  }
  const std::size_t c = old_of.size();
  const std::size_t M = c + 1;
  std::vector<Vec> T(M, Vec(M, kNeg));
  std::vector<std::size_t> enter_at(N, 0), leave_from(N, 0);
  for (std::size_t u = 0; u < N; ++u) {
    if (in_cycle[u]) continue;
    for (std::size_t w = 1; w < N; ++w) {
      if (in_cycle[w] || w == u) continue;
      T[new_of[u]][new_of[w]] = S[u][w];
    }
    double best = kNeg;
    std::size_t arg = cycle[0];
    bool found = false;
    for (auto v : cycle) {
      const double val = S[u][v] - S[parent[v]][v];
      if (!found || val > best) {
        best = val;
        arg = v;
        found = true;
      }
    }
    T[new_of[u]][c] = best;
    enter_at[u] = arg;
  }
  for (std::size_t w = 1; w < N; ++w) {
    if (in_cycle[w]) continue;
    double best = kNeg;
    std::size_t arg = cycle[0];
    bool found = false;
    for (auto v : cycle) {
      if (!found || S[v][w] > best) {
        best = S[v][w];
        arg = v;
        found = true;
      }
    }
    T[c][new_of[w]] = best;
    leave_from[w] = arg;
  }
  const auto sub = chu_liu_edmonds(T);
  std::vector<std::size_t> out = parent;
  for (std::size_t w = 1; w < N; ++w) {
    if (in_cycle[w]) continue;
    const std::size_t p = sub[new_of[w]];
    out[w] = p == c ? leave_from[w] : old_of[p];
  }
  const std::size_t u = old_of[sub[c]];
  out[enter_at[u]] = u;
  return out;
}

}  // namespace detail

// Maximum single-root arborescence. Each candidate root child is tried in
// turn; the first (smallest) one reaching the best score wins.
inline DependencyTree mst_decode(const ArcScores& a) {
  const std::size_t n = a.n();
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "no tokens");
  for (const auto& row : a.s) {
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "arc scores must be finite");
    }
  }
  constexpr double kNeg = -std::numeric_limits<double>::infinity();
  DependencyTree best;
  double best_score = kNeg;
  for (std::size_t r = 1; r <= n; ++r) {
    std::vector<Vec> S = a.s;
    for (std::size_t d = 1; d <= n; ++d) {
      S[d][d] = kNeg;
      if (d != r) S[0][d] = kNeg;
    }
    for (std::size_t h = 0; h <= n; ++h) S[h][0] = kNeg;
    const auto parent = detail::chu_liu_edmonds(S);
    std::vector<std::size_t> heads(parent.begin() + 1, parent.end());
    const double sc = tree_score(a, heads);
    if (best.heads.empty() || sc > best_score) {
      best.heads = std::move(heads);
      best_score = sc;
    }
  }
  return best;
}

struct AttachmentScores {
  double uas = 0;
  double las = 0;
};

inline AttachmentScores uas_las(const DependencyTree& pred, const DependencyTree& gold) {
  if (pred.size() != gold.size()) throw Error(ErrorCode::kLengthMismatch, "trees differ in length");
  if (gold.size() == 0) return {};
  std::size_t u = 0, l = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (pred.heads[i] != gold.heads[i]) continue;
    ++u;
    if (i < pred.labels.size() && i < gold.labels.size() && pred.labels[i] == gold.labels[i]) ++l;
  }
  const double n = static_cast<double>(gold.size());
  return {static_cast<double>(u) / n, static_cast<double>(l) / n};
}

// ---------------------------------------------------------------------------
// Auxiliary sequence-labeling encoders

enum class AuxTask { kLT, kMT, kCT };

inline std::string_view to_string(AuxTask t) {
  switch (t) {
    case AuxTask::kLT: return "LT";
    case AuxTask::kMT: return "MT";
    case AuxTask::kCT: return "CT";
  }
  return "?";
}

inline AuxTask parse_aux_task(std::string_view s) {
  if (s == "LT") return AuxTask::kLT;
  if (s == "MT") return AuxTask::kMT;
  if (s == "CT") return AuxTask::kCT;
  throw Error(ErrorCode::kInvalidArgument, "unknown auxiliary task '" + std::string(s) + "'");
}

struct AuxConfig {
  std::size_t word_dim = 16;
  std::size_t hidden = 16;
  std::size_t radius = 2;
};

struct AuxExample {
  std::vector<std::vector<std::size_t>> feats;
  std::vector<std::size_t> gold;
};

class AuxEncoder {
 public:
  AuxEncoder() = default;

  // Class inventory: labels for LT, tag-specs seen in the corpus for MT, case
  // values plus NONE for CT.
  static AuxEncoder create(AuxTask task, std::span<const AnnotatedSentence> corpus, const Lexicon& lex,
                           const std::vector<std::string>& labels, AuxConfig cfg = {}, std::uint64_t seed = 1) {
    AuxEncoder a;
    a.task_ = task;
    a.cfg_ = cfg;
    switch (task) {
      case AuxTask::kLT: a.classes_ = labels; break;
      case AuxTask::kMT: {
        std::set<MorphTag> tags;
        for (const auto& s : corpus) tags.insert(s.tags.begin(), s.tags.end());
        for (const auto& t : tags) a.classes_.push_back(t.spec());
        break;
      }
      case AuxTask::kCT:
        a.classes_.assign(tagnames::kCase.begin(), tagnames::kCase.end());
        a.classes_.push_back("NONE");
        break;
    }
    for (const auto& s : corpus) {
      for (const auto& t : s.tokens) a.words_.add(t.slp1());
    }
    for (const auto& f : lex.forms()) a.words_.add(f.slp1());
    a.declare(a.ps_);
    Rng rng(seed);
    a.ps_.init_uniform(rng);
    return a;
  }

  AuxTask task() const { return task_; }
  std::string prefix() const { return "aux." + std::string(to_string(task_)); }
  const std::vector<std::string>& classes() const { return classes_; }
  const Vocab& words() const { return words_; }
  const AuxConfig& config() const { return cfg_; }
  const ParamStore& params() const { return ps_; }
  ParamStore& params() { return ps_; }

  // Declares this encoder's parameters (encoder + classifier) into `ps`.
  void declare(ParamStore& ps) {
    enc_ = WindowEncoder(ps, prefix() + ".enc", {{"word", words_.size(), cfg_.word_dim}}, cfg_.radius, cfg_.hidden,
                         prefix());
    W_ = ps.add(prefix() + ".out.W", {classes_.size(), cfg_.hidden}, prefix());
    b_ = ps.add(prefix() + ".out.b", {classes_.size(), 1}, prefix());
  }

  std::vector<std::vector<std::size_t>> features(std::span<const PhonemeString> tokens) const {
    std::vector<std::vector<std::size_t>> f;
    for (const auto& t : tokens) f.push_back({words_.id(t.slp1())});
    return f;
  }

  std::vector<Vec> encode(const ParamStore& ps, std::span<const PhonemeString> tokens) const {
    return enc_.forward(ps, features(tokens)).h;
  }

  std::size_t gold_class(const AnnotatedSentence& s, std::size_t i) const {
    std::string key;
    switch (task_) {
      case AuxTask::kLT:
        if (s.labels.size() != s.tokens.size()) throw Error(ErrorCode::kMissingGold, "LT needs DEPREL");
        key = s.labels[i];
        break;
      case AuxTask::kMT:
        if (s.tags.size() != s.tokens.size()) throw Error(ErrorCode::kMissingGold, "MT needs XPOS");
        key = s.tags[i].spec();
        break;
      case AuxTask::kCT:
        if (s.tags.size() != s.tokens.size()) throw Error(ErrorCode::kMissingGold, "CT needs XPOS");
        key = s.tags[i].case_ ? std::string(tagnames::kCase[static_cast<std::size_t>(*s.tags[i].case_)]) : "NONE";
        break;
    }
    auto it = std::find(classes_.begin(), classes_.end(), key);
    if (it == classes_.end()) throw Error(ErrorCode::kUnknownLabel, "'" + key + "' not in " + prefix() + " inventory", i);
    return static_cast<std::size_t>(it - classes_.begin());
  }

  AuxExample example(const AnnotatedSentence& s) const {
    AuxExample ex;
    ex.feats = features(s.tokens);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) ex.gold.push_back(gold_class(s, i));
    return ex;
  }

  std::vector<std::size_t> predict(std::span<const PhonemeString> tokens) const {
    std::vector<std::size_t> out;
    for (const auto& h : encode(ps_, tokens)) out.push_back(nn::argmax(nn::affine(ps_[W_], &ps_[b_], h)));
    return out;
  }

  double loss(const AuxExample& ex, Gradients* g, const TaskWeights& w) const {
    const double wt = w(prefix());
    if (wt == 0) return 0.0;
    const auto c = enc_.forward(ps_, ex.feats);
    double total = 0;
    std::vector<Vec> dh(ex.feats.size(), Vec(cfg_.hidden, 0.0));
    for (std::size_t i = 0; i < ex.feats.size(); ++i) {
      const Vec z = nn::affine(ps_[W_], &ps_[b_], c.h[i]);
      Vec d;
      total += wt * nn::softmax_xent(z, ex.gold[i], g ? &d : nullptr);
      if (g) {
        for (auto& x : d) x *= wt;
        nn::affine_backward(*g, W_, b_, ps_[W_], c.h[i], d, dh[i]);
      }
    }
    if (g) enc_.backward(ps_, *g, ex.feats, c, dh);
    return total;
  }

  json meta() const {
    return {{"task", to_string(task_)}, {"classes", classes_}, {"words", words_.to_json()},
            {"word_dim", cfg_.word_dim}, {"hidden", cfg_.hidden}, {"radius", cfg_.radius}};
  }

  static AuxEncoder from_meta(const json& j) {
    AuxEncoder a;
    a.task_ = parse_aux_task(j.at("task").get<std::string>());
    a.classes_ = j.at("classes").get<std::vector<std::string>>();
    a.words_ = Vocab::from_json(j.at("words"));
    a.cfg_.word_dim = j.at("word_dim");
    a.cfg_.hidden = j.at("hidden");
    a.cfg_.radius = j.at("radius");
    return a;
  }

 private:
  AuxTask task_ = AuxTask::kLT;
  AuxConfig cfg_;
  std::vector<std::string> classes_;
  Vocab words_;
  ParamStore ps_;
  WindowEncoder enc_;
  std::size_t W_ = 0, b_ = 0;
};

struct AuxPretrainResult {
  AuxEncoder encoder;
  std::vector<double> epoch_loss;
  double accuracy = 0;  // on the training corpus
};

inline AuxPretrainResult pretrain_aux(AuxTask task, std::span<const AnnotatedSentence> corpus, const Lexicon& lex,
                                      const std::vector<std::string>& labels, const TrainConfig& cfg,
                                      AuxConfig acfg = {}) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "no sentences");
  auto enc = AuxEncoder::create(task, corpus, lex, labels, acfg, cfg.seed);
  std::vector<AuxExample> data;
  for (const auto& s : corpus) data.push_back(enc.example(s));
  auto res = sgd_train(std::move(enc), data, cfg);
  std::size_t hits = 0, total = 0;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto pred = res.model.predict(corpus[k].tokens);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      hits += pred[i] == data[k].gold[i];
      ++total;
    }
  }
  return {std::move(res.model), std::move(res.epoch_loss), total ? static_cast<double>(hits) / total : 0.0};
}

// ---------------------------------------------------------------------------
// Parser

struct ParserConfig {
  std::size_t word_dim = 16;
  std::size_t tag_dim = 8;
  std::size_t hidden = 32;
  std::size_t radius = 2;
};

struct ParseExample {
  std::vector<PhonemeString> tokens;
  std::vector<std::vector<std::size_t>> feats;
  std::vector<std::size_t> heads;
  std::vector<std::size_t> labels;
};

class ParserModel {
 public:
  static constexpr std::string_view kModuleId = "parser";
  static constexpr std::size_t kMaxDistance = 5;
  static constexpr std::size_t kBuckets = 2 * kMaxDistance + 2;  // signed distances + root

  ParserModel() = default;

  static ParserModel create(std::span<const AnnotatedSentence> corpus, const Lexicon& lex,
                            std::vector<std::string> labels, ParserConfig cfg = {}, std::uint64_t seed = 1) {
    if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "empty label inventory");
    ParserModel m;
    m.cfg_ = cfg;
    m.labels_ = std::move(labels);
    for (const auto& s : corpus) {
      for (const auto& t : s.tokens) m.words_.add(t.slp1());
      for (const auto& t : s.tags) m.tags_.add(t.spec());
    }
    for (const auto& e : lex.entries()) {
      m.words_.add(e.surface.slp1());
      m.tags_.add(e.tag.spec());
    }
    m.declare();
    Rng rng(seed);
    m.ps_.init_uniform(rng);
    return m;
  }

  const ParamStore& params() const { return ps_; }
  ParamStore& params() { return ps_; }
  const ParserConfig& config() const { return cfg_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<AuxEncoder>& aux() const { return aux_; }

  std::optional<std::size_t> label_id(const std::string& l) const {
    auto it = std::find(labels_.begin(), labels_.end(), l);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
  }

  // Attaches pretrained encoders (frozen) plus fresh projection and gate
  // parameters. Encoders are ordered LT, MT, CT.
  ParserModel attach(std::vector<AuxEncoder> encoders, std::uint64_t seed = 1) const {
    ParserModel m = *this;
    m.drop_aux_params();
    std::sort(encoders.begin(), encoders.end(),
              [](const AuxEncoder& a, const AuxEncoder& b) { return a.task() < b.task(); });
    for (std::size_t i = 1; i < encoders.size(); ++i) {
      if (encoders[i].task() == encoders[i - 1].task()) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate auxiliary task");
      }
    }
    m.aux_ = std::move(encoders);
    m.declare_aux();
    Rng rng(seed);
    for (std::size_t i = m.first_aux_param_; i < m.ps_.size(); ++i) {
      for (auto& v : m.ps_[i].data) v = rng.uniform(-0.1, 0.1);
    }
    for (const auto& a : m.aux_) copy_matching(a.params(), m.ps_);
    return m;
  }

  ParserModel detach() const {
    ParserModel m = *this;
    m.drop_aux_params();
    m.aux_.clear();
    return m;
  }

  ParseExample example(const AnnotatedSentence& s) const {
    if (s.tokens.empty()) throw Error(ErrorCode::kEmptyInput, "empty sentence");
    if (s.heads.size() != s.tokens.size() || s.labels.size() != s.tokens.size()) {
      throw Error(ErrorCode::kMissingGold, "sentence lacks HEAD or DEPREL");
    }
    if (auto why = tree_violation(s.heads)) throw Error(ErrorCode::kConstraintViolation, "gold tree: " + *why);
    ParseExample ex;
    ex.tokens = s.tokens;
    ex.feats = features(s.tokens, s.tags);
    ex.heads = s.heads;
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      auto l = label_id(s.labels[i]);
      if (!l) throw Error(ErrorCode::kUnknownLabel, "label '" + s.labels[i] + "'", i);
      ex.labels.push_back(*l);
    }
    return ex;
  }

  // Gated per-token representations (h_1..h_n).
  std::vector<Vec> encode(std::span<const PhonemeString> tokens, std::span<const MorphTag> tags = {}) const {
    return forward(features(tokens, tags), tokens).h;
  }

  // Parser-encoder output p and merged auxiliary output a (empty without aux).
  std::pair<std::vector<Vec>, std::vector<Vec>> encode_parts(std::span<const PhonemeString> tokens,
                                                             std::span<const MorphTag> tags = {}) const {
    auto f = forward(features(tokens, tags), tokens);
    return {f.enc.h, f.a};
  }

  ArcScores score_arcs(std::span<const PhonemeString> tokens, std::span<const MorphTag> tags = {}) const {
    if (tokens.empty()) throw Error(ErrorCode::kEmptyInput, "no tokens");
    return arc_scores(forward(features(tokens, tags), tokens));
  }

  std::vector<std::string> label_arcs(std::span<const PhonemeString> tokens, std::span<const MorphTag> tags,
                                      std::span<const std::size_t> heads) const {
    if (auto why = tree_violation(heads)) throw Error(ErrorCode::kConstraintViolation, *why);
    const auto f = forward(features(tokens, tags), tokens);
    std::vector<std::string> out;
    for (std::size_t d = 1; d <= heads.size(); ++d) out.push_back(labels_[nn::argmax(label_scores(f, heads[d - 1], d))]);
    return out;
  }

  DependencyTree parse(std::span<const PhonemeString> tokens, std::span<const MorphTag> tags = {}) const {
    if (tokens.empty()) throw Error(ErrorCode::kEmptyInput, "no tokens");
    const auto f = forward(features(tokens, tags), tokens);
    DependencyTree t = mst_decode(arc_scores(f));
    for (std::size_t d = 1; d <= t.size(); ++d) t.labels.push_back(labels_[nn::argmax(label_scores(f, t.heads[d - 1], d))]);
    return t;
  }

  // w_arc * Σ_d head cross-entropy + w_label * Σ_d label cross-entropy.
  double loss(const ParseExample& ex, Gradients* g, const TaskWeights& w) const {
    const double wa = w("arc"), wl = w("label");
    const std::size_t n = ex.tokens.size(), H = cfg_.hidden;
    const auto f = forward(ex.feats, ex.tokens);
    const auto S = arc_scores(f);
    std::vector<Vec> dh(n + 1, Vec(H, 0.0));  // index 0 = root vector
    double total = 0;
    const Tensor& U = ps_[U_];
    if (wa > 0) {
      for (std::size_t d = 1; d <= n; ++d) {
        Vec z;
        std::vector<std::size_t> hs;
        std::size_t gold = 0;
        for (std::size_t h = 0; h <= n; ++h) {
          if (h == d) continue;
          if (h == ex.heads[d - 1]) gold = hs.size();
          hs.push_back(h);
          z.push_back(S(h, d));
        }
        Vec dz;
        total += wa * nn::softmax_xent(z, gold, g ? &dz : nullptr);
        if (!g) continue;
        for (std::size_t k = 0; k < hs.size(); ++k) {
          const double ds = wa * dz[k];
          if (ds == 0) continue;
          const std::size_t h = hs[k];
          const Vec& xh = f.rep(h);
          const Vec& xd = f.rep(d);
          // s = xhᵀ U xd + u·xh + bias
          for (std::size_t i = 0; i < H; ++i) {
            auto gu = g->row(U_, i);
            for (std::size_t j = 0; j < H; ++j) gu[j] += ds * xh[i] * xd[j];
            dh[h][i] += ds * (nn::dot(U.row(i), xd) + ps_[u_].data[i]);
            g->row(u_, i)[0] += ds * xh[i];
          }
          for (std::size_t j = 0; j < H; ++j) {
            double acc = 0;
            for (std::size_t i = 0; i < H; ++i) acc += xh[i] * U.at(i, j);
            dh[d][j] += ds * acc;
          }
          g->row(dist_, bucket(h, d))[0] += ds;
        }
      }
    }
    if (wl > 0) {
      for (std::size_t d = 1; d <= n; ++d) {
        const std::size_t h = ex.heads[d - 1];
        Vec z = label_scores(f, h, d);
        Vec dz;
        total += wl * nn::softmax_xent(z, ex.labels[d - 1], g ? &dz : nullptr);
        if (!g) continue;
        for (auto& x : dz) x *= wl;
        Vec x = f.rep(h);
        x.insert(x.end(), f.rep(d).begin(), f.rep(d).end());
        Vec dx(2 * H, 0.0);
        nn::affine_backward(*g, lab_W_, lab_b_, ps_[lab_W_], x, dz, dx);
        for (std::size_t i = 0; i < H; ++i) {
          dh[h][i] += dx[i];
          dh[d][i] += dx[H + i];
        }
      }
    }
    if (g) {
      nn::axpy(1.0, dh[0], g->all(root_));
      backward(f, *g, std::vector<Vec>(dh.begin() + 1, dh.end()));
    }
    return total;
  }

  void save(const std::filesystem::path& path) const { save_model(path, std::string(kModuleId), meta(), ps_); }
  void write(std::ostream& out) const { write_model(out, std::string(kModuleId), meta(), ps_); }
  static ParserModel load(const std::filesystem::path& path) { return from_file(load_model(path, kModuleId)); }
  static ParserModel read(std::istream& in) { return from_file(read_model(in, kModuleId)); }

 private:
  struct Forward {
    std::vector<std::vector<std::size_t>> feats;
    WindowEncoder::Cache enc;              // p_i
    std::vector<Vec> auxcat;               // [aux_LT; aux_MT; aux_CT]
    std::vector<Vec> a, gate_in, gate, h;  // merged aux, [p;a], g, h
    Vec root;

    const Vec& rep(std::size_t i) const { return i == 0 ? root : h[i - 1]; }
  };

  std::vector<std::vector<std::size_t>> features(std::span<const PhonemeString> tokens,
                                                 std::span<const MorphTag> tags) const {
    std::vector<std::vector<std::size_t>> f;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      f.push_back({words_.id(tokens[i].slp1()), i < tags.size() ? tags_.id(tags[i].spec()) : Vocab::kUnk});
    }
    return f;
  }

  Forward forward(const std::vector<std::vector<std::size_t>>& feats, std::span<const PhonemeString> tokens) const {
    Forward f;
    f.feats = feats;
    f.enc = enc_.forward(ps_, feats);
    f.root = ps_[root_].data;
    if (aux_.empty()) {
      f.h = f.enc.h;
      return f;
    }
    const std::size_t n = feats.size();
    f.auxcat.assign(n, {});
    for (const auto& a : aux_) {
      const auto out = a.encode(ps_, tokens);
      for (std::size_t i = 0; i < n; ++i) f.auxcat[i].insert(f.auxcat[i].end(), out[i].begin(), out[i].end());
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Vec& p = f.enc.h[i];
      Vec a = nn::affine(ps_[P_], nullptr, f.auxcat[i]);
      Vec in = p;
      in.insert(in.end(), a.begin(), a.end());
      Vec g = nn::affine(ps_[G_], &ps_[Gb_], in);
      for (auto& x : g) x = nn::logistic(x);
      Vec h(p.size());
      for (std::size_t k = 0; k < p.size(); ++k) h[k] = g[k] * p[k] + (1 - g[k]) * a[k];
      f.a.push_back(std::move(a));
      f.gate_in.push_back(std::move(in));
      f.gate.push_back(std::move(g));
      f.h.push_back(std::move(h));
    }
    return f;
  }

  void backward(const Forward& f, Gradients& g, const std::vector<Vec>& dh) const {
    if (aux_.empty()) {
      enc_.backward(ps_, g, f.feats, f.enc, dh);
      return;
    }
    const std::size_t n = dh.size(), H = cfg_.hidden;
    std::vector<Vec> dp(n, Vec(H, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      const Vec& p = f.enc.h[i];
      const Vec& a = f.a[i];
      const Vec& gt = f.gate[i];
      Vec da(H), dpre(H);
      for (std::size_t k = 0; k < H; ++k) {
        dp[i][k] = dh[i][k] * gt[k];
        da[k] = dh[i][k] * (1 - gt[k]);
        dpre[k] = dh[i][k] * (p[k] - a[k]) * gt[k] * (1 - gt[k]);
      }
      Vec din(2 * H, 0.0);
      nn::affine_backward(g, G_, Gb_, ps_[G_], f.gate_in[i], dpre, din);
      for (std::size_t k = 0; k < H; ++k) {
        dp[i][k] += din[k];
        da[k] += din[H + k];
      }
      nn::affine_backward(g, P_, std::nullopt, ps_[P_], f.auxcat[i], da);
    }
    enc_.backward(ps_, g, f.feats, f.enc, dp);
  }

  std::size_t bucket(std::size_t h, std::size_t d) const {
    if (h == 0) return kBuckets - 1;
    const auto diff = static_cast<std::ptrdiff_t>(d) - static_cast<std::ptrdiff_t>(h);
    const auto m = static_cast<std::ptrdiff_t>(kMaxDistance);
    return static_cast<std::size_t>(std::clamp(diff, -m, m) + m);
  }

  ArcScores arc_scores(const Forward& f) const {
    const std::size_t n = f.h.size();
    ArcScores S(n);
    const Tensor& U = ps_[U_];
    for (std::size_t d = 1; d <= n; ++d) {
      const Vec Ud = nn::affine(U, nullptr, f.rep(d));
      for (std::size_t h = 0; h <= n; ++h) {
        if (h == d) continue;
        S(h, d) = nn::dot(f.rep(h), Ud) + nn::dot(ps_[u_].data, f.rep(h)) + ps_[dist_].data[bucket(h, d)];
      }
    }
    return S;
  }

  Vec label_scores(const Forward& f, std::size_t h, std::size_t d) const {
    Vec x = f.rep(h);
    x.insert(x.end(), f.rep(d).begin(), f.rep(d).end());
    return nn::affine(ps_[lab_W_], &ps_[lab_b_], x);
  }

  void declare() {
    const std::size_t H = cfg_.hidden;
    enc_ = WindowEncoder(ps_, "parse.enc", {{"word", words_.size(), cfg_.word_dim}, {"tag", tags_.size(), cfg_.tag_dim}},
                         cfg_.radius, H);
    root_ = ps_.add("parse.root", {H, 1}, "arc");
    U_ = ps_.add("parse.U", {H, H}, "arc");
    u_ = ps_.add("parse.u", {H, 1}, "arc");
    dist_ = ps_.add("parse.dist", {kBuckets, 1}, "arc");
    lab_W_ = ps_.add("parse.label.W", {labels_.size(), 2 * H}, "label");
    lab_b_ = ps_.add("parse.label.b", {labels_.size(), 1}, "label");
    first_aux_param_ = ps_.size();
  }

  void declare_aux() {
    if (aux_.empty()) return;
    const std::size_t H = cfg_.hidden;
    std::size_t width = 0;
    for (auto& a : aux_) width += a.config().hidden;
    P_ = ps_.add("gate.P", {H, width});
    G_ = ps_.add("gate.G", {H, 2 * H});
    Gb_ = ps_.add("gate.b", {H, 1});
    for (auto& a : aux_) {
      const std::size_t from = ps_.size();
      a.declare(ps_);
      for (std::size_t i = from; i < ps_.size(); ++i) ps_.set_trainable(i, false);
    }
  }

  void drop_aux_params() {
    ParamStore kept;
    for (std::size_t i = 0; i < first_aux_param_; ++i) {
      auto id = kept.add(ps_.info(i).name, ps_[i].shape, ps_.info(i).group);
      kept[id] = ps_[i];
      kept.set_trainable(id, ps_.info(i).trainable);
    }
    kept.set_version_tag(ps_.version_tag());
    ps_ = std::move(kept);
  }

  json meta() const {
    json aux = json::array();
    for (const auto& a : aux_) aux.push_back(a.meta());
    return {{"word_dim", cfg_.word_dim}, {"tag_dim", cfg_.tag_dim}, {"hidden", cfg_.hidden},
            {"radius", cfg_.radius},     {"labels", labels_},       {"words", words_.to_json()},
            {"tags", tags_.to_json()},   {"aux", aux}};
  }

  static ParserModel from_file(ModelFile mf) {
    ParserModel m;
    try {
      const auto& j = mf.meta;
      m.cfg_.word_dim = j.at("word_dim");
      m.cfg_.tag_dim = j.at("tag_dim");
      m.cfg_.hidden = j.at("hidden");
      m.cfg_.radius = j.at("radius");
      m.labels_ = j.at("labels").get<std::vector<std::string>>();
      m.words_ = Vocab::from_json(j.at("words"));
      m.tags_ = Vocab::from_json(j.at("tags"));
      for (const auto& a : j.at("aux")) m.aux_.push_back(AuxEncoder::from_meta(a));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kCorruptFile, std::string("parser metadata: ") + e.what());
    }
    m.declare();
    m.declare_aux();
    if (m.ps_.size() != mf.params.size()) throw Error(ErrorCode::kCorruptFile, "parser parameter count");
    for (std::size_t i = 0; i < m.ps_.size(); ++i) {
      if (m.ps_.info(i).name != mf.params.info(i).name || m.ps_[i].shape != mf.params[i].shape) {
        throw Error(ErrorCode::kCorruptFile, "parser parameter layout at " + m.ps_.info(i).name);
      }
    }
    m.ps_ = std::move(mf.params);
    return m;
  }

  ParserConfig cfg_;
  std::vector<std::string> labels_;
  Vocab words_, tags_;
  ParamStore ps_;
  WindowEncoder enc_;
  std::vector<AuxEncoder> aux_;
  std::size_t root_ = 0, U_ = 0, u_ = 0, dist_ = 0, lab_W_ = 0, lab_b_ = 0;
  std::size_t P_ = 0, G_ = 0, Gb_ = 0;
  std::size_t first_aux_param_ = 0;
};

// ---------------------------------------------------------------------------

// Copies of the corpus in which tokens are replaced by other lexicon forms
// carrying the same tag. Heads, labels and tags are never touched.
inline std::vector<AnnotatedSentence> augment(std::span<const AnnotatedSentence> corpus, const Lexicon& lex,
                                              std::size_t copies, std::uint64_t seed) {
  std::map<MorphTag, std::vector<const LexEntry*>> by_tag;
  const auto entries = lex.entries();
  for (const auto& e : entries) by_tag[e.tag].push_back(&e);
  Rng rng(seed);
  std::vector<AnnotatedSentence> out;
  for (std::size_t c = 0; c < copies; ++c) {
    for (const auto& s : corpus) {
      AnnotatedSentence t = s;
      for (std::size_t i = 0; i < t.tokens.size() && i < t.tags.size(); ++i) {
        const auto it = by_tag.find(t.tags[i]);
        if (it == by_tag.end() || it->second.empty()) continue;
        const LexEntry* e = it->second[rng.below(it->second.size())];
        t.tokens[i] = e->surface;
        if (i < t.lemmas.size()) t.lemmas[i] = e->lemma;
      }
      if (t.heads != s.heads || t.labels != s.labels || t.tags != s.tags) {
        throw Error(ErrorCode::kConstraintViolation, "augmentation altered gold structure");
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

struct ParseMetrics {
  double uas = 0;
  double las = 0;
  std::size_t tokens = 0;

  json to_json() const { return {{"task", "parse"}, {"uas", uas}, {"las", las}, {"tokens", tokens}}; }
};

inline ParseMetrics evaluate_parser(const ParserModel& m, std::span<const AnnotatedSentence> data) {
  std::size_t u = 0, l = 0, n = 0;
  for (const auto& s : data) {
    const auto pred = m.parse(s.tokens, s.tags);
    const auto sc = uas_las(pred, DependencyTree{s.heads, s.labels});
    u += static_cast<std::size_t>(std::lround(sc.uas * static_cast<double>(s.tokens.size())));
    l += static_cast<std::size_t>(std::lround(sc.las * static_cast<double>(s.tokens.size())));
    n += s.tokens.size();
  }
  ParseMetrics r;
  r.tokens = n;
  r.uas = n ? static_cast<double>(u) / static_cast<double>(n) : 0.0;
  r.las = n ? static_cast<double>(l) / static_cast<double>(n) : 0.0;
  return r;
}

}  // namespace sshala
