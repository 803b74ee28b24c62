#pragma once

// Static word embeddings: skip-gram with negative sampling, the text vector
// format (`|V| d` header, then `word v1 ... vd`), and intrinsic evaluation
// over task-tagged TSV inventories:
//
//   ANALOGY         a  b  c  d
//   SYNONYM         query  answer-index  option1  option2 ...
//   RELATEDNESS     w1  w2  score
//   CATEGORIZATION  word  category

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "sanskritshala/error.hpp"
#include "sanskritshala/ml.hpp"
#include "sanskritshala/nn.hpp"

namespace sshala {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const Vec& vector(std::size_t i) const { return vecs_.at(i); }

  std::optional<std::size_t> index(const std::string& w) const {
    auto it = ids_.find(w);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(const std::string& w) const { return ids_.count(w) > 0; }
  const Vec& operator[](const std::string& w) const { return vecs_.at(ids_.at(w)); }

  void add(const std::string& w, Vec v) {
    if (v.size() != dim_) throw Error(ErrorCode::kInvalidArgument, "vector for '" + w + "' has wrong dimension");
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "non-finite value for '" + w + "'");
    }
    if (!ids_.emplace(w, words_.size()).second) throw Error(ErrorCode::kInvalidArgument, "duplicate word '" + w + "'");
    words_.push_back(w);
    vecs_.push_back(std::move(v));
  }

  bool operator==(const EmbeddingTable& o) const { return dim_ == o.dim_ && words_ == o.words_ && vecs_ == o.vecs_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<Vec> vecs_;
  std::unordered_map<std::string, std::size_t> ids_;
};

inline double norm(std::span<const double> v) { return std::sqrt(nn::dot(v, v)); }

// 0 when either vector is zero.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0 || nb == 0) return 0.0;
  return nn::dot(a, b) / (na * nb);
}

inline void write_vectors(std::ostream& out, const EmbeddingTable& t) {
  out << t.size() << ' ' << t.dim() << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.words()[i];
    for (double x : t.vector(i)) out << ' ' << x;
    out << '\n';
  }
}

inline EmbeddingTable read_vectors(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "missing header", 1);
  std::istringstream hs(line);
  std::size_t n = 0, d = 0;
  if (!(hs >> n >> d) || d == 0) throw Error(ErrorCode::kParseError, "header must be '|V| d'", 1);
  EmbeddingTable t(d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "expected " + std::to_string(n) + " rows", i + 2);
    std::istringstream ls(line);
    std::string w;
    ls >> w;
    Vec v;
    for (std::string tok; ls >> tok;) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParseError, "bad number '" + tok + "'", i + 2);
      }
    }
    if (w.empty() || v.size() != d) throw Error(ErrorCode::kParseError, "row needs a word and " + std::to_string(d) + " values", i + 2);
    try {
      t.add(w, std::move(v));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError, e.what(), i + 2);
    }
  }
  return t;
}

inline void save_vectors(const std::filesystem::path& p, const EmbeddingTable& t) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
  write_vectors(out, t);
}

inline EmbeddingTable load_vectors(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + p.string());
  return read_vectors(in);
}

// ---------------------------------------------------------------------------
// Skip-gram with negative sampling

struct SkipGramConfig {
  std::size_t dim = 16;
  std::size_t window = 2;
  std::size_t negatives = 3;
  std::size_t epochs = 5;
  std::uint64_t seed = 1;
  double learning_rate = 0.05;
};

struct SkipGramPair {
  std::size_t center = 0;
  std::size_t context = 0;
  std::vector<std::size_t> negatives;
};

// Input vectors ("in") are the embeddings; "out" predicts contexts.
class SkipGramModel {
 public:
  SkipGramModel() = default;
  SkipGramModel(std::vector<std::string> vocab, std::size_t dim, std::uint64_t seed) : vocab_(std::move(vocab)) {
    in_ = ps_.add("sg.in", {vocab_.size(), dim});
    out_ = ps_.add("sg.out", {vocab_.size(), dim});
    Rng rng(seed);
    ps_.init_uniform(rng);
  }

  const ParamStore& params() const { return ps_; }
  ParamStore& params() { return ps_; }
  const std::vector<std::string>& vocab() const { return vocab_; }

  // σ(out[context] · in[center])
  double score(std::size_t center, std::size_t context) const {
    return nn::logistic(nn::dot(ps_[out_].row(context), ps_[in_].row(center)));
  }

  // -log σ(u_o·v_c) - Σ_n log σ(-u_n·v_c)
  double loss(const SkipGramPair& ex, Gradients* g, const TaskWeights&) const {
    const auto vc = ps_[in_].row(ex.center);
    Vec dvc(vc.size(), 0.0);
    double total = 0;
    auto term = [&](std::size_t w, double sign) {
      const auto uw = ps_[out_].row(w);
      const double z = sign * nn::dot(uw, vc);
      total += -std::log(nn::logistic(z));
      if (!g) return;
      const double dz = -(1 - nn::logistic(z)) * sign;
      nn::axpy(dz, uw, dvc);
      nn::axpy(dz, vc, g->row(out_, w));
    };
    term(ex.context, 1.0);
    for (auto n : ex.negatives) term(n, -1.0);
    if (g) nn::axpy(1.0, dvc, g->row(in_, ex.center));
    return total;
  }

  EmbeddingTable table() const {
    EmbeddingTable t(ps_[in_].cols());
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      auto r = ps_[in_].row(i);
      t.add(vocab_[i], Vec(r.begin(), r.end()));
    }
    return t;
  }

 private:
  std::vector<std::string> vocab_;
  ParamStore ps_;
  std::size_t in_ = 0, out_ = 0;
};

struct SkipGramData {
  std::vector<std::string> vocab;  // first-occurrence order, then `extra_vocab`
  std::vector<SkipGramPair> pairs;
};

// Builds (center, context) pairs within the window. Negatives are drawn once
// from unigram^0.75, never equal to the pair's context word.
inline SkipGramData skipgram_pairs(const std::vector<std::vector<std::string>>& corpus, const SkipGramConfig& cfg,
                                   const std::vector<std::string>& extra_vocab = {}) {
  std::size_t tokens = 0;
  for (const auto& s : corpus) tokens += s.size();
  if (tokens == 0) throw Error(ErrorCode::kEmptyCorpus, "no tokens");
  if (cfg.dim == 0 || cfg.window == 0 || cfg.negatives == 0) {
    throw Error(ErrorCode::kInvalidArgument, "dim, window and negatives must be positive");
  }
  SkipGramData d;
  std::unordered_map<std::string, std::size_t> ids;
  std::vector<double> count;
  auto id = [&](const std::string& w) {
    auto [it, fresh] = ids.emplace(w, d.vocab.size());
    if (fresh) {
      d.vocab.push_back(w);
      count.push_back(0);
    }
    return it->second;
  };
  std::vector<std::vector<std::size_t>> sents;
  for (const auto& s : corpus) {
    auto& out = sents.emplace_back();
    for (const auto& w : s) {
      out.push_back(id(w));
      ++count[out.back()];
    }
  }
  for (const auto& w : extra_vocab) id(w);

  std::vector<double> cdf(count.size());
  double acc = 0;
  for (std::size_t i = 0; i < count.size(); ++i) cdf[i] = acc += std::pow(count[i], 0.75);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  auto draw = [&] {
    const double u = rng.uniform01() * acc;
    return static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };
  const bool single = std::count_if(count.begin(), count.end(), [](double c) { return c > 0; }) == 1;
  for (const auto& s : sents) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
      const std::size_t hi = std::min(s.size() - 1, i + cfg.window);
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j == i) continue;
        SkipGramPair p{s[i], s[j], {}};
        while (p.negatives.size() < cfg.negatives) {
          const std::size_t n = draw();
          if (n != p.context || single) p.negatives.push_back(n);
        }
        d.pairs.push_back(std::move(p));
      }
    }
  }
  return d;
}

inline SkipGramModel train_skipgram_model(const std::vector<std::vector<std::string>>& corpus,
                                          const SkipGramConfig& cfg, const std::vector<std::string>& extra_vocab = {}) {
  auto data = skipgram_pairs(corpus, cfg, extra_vocab);
  SkipGramModel m(data.vocab, cfg.dim, cfg.seed);
  if (cfg.epochs == 0 || data.pairs.empty()) return m;
  TrainConfig tc;
  tc.learning_rate = cfg.learning_rate;
  tc.epochs = cfg.epochs;
  tc.seed = cfg.seed;
  return sgd_train(std::move(m), data.pairs, tc).model;
}

inline EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& corpus, const SkipGramConfig& cfg,
                                     const std::vector<std::string>& extra_vocab = {}) {
  return train_skipgram_model(corpus, cfg, extra_vocab).table();
}

inline std::vector<std::vector<std::string>> load_text_corpus(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + p.string());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> s;
    for (std::string w; ls >> w;) s.push_back(w);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Intrinsic evaluation

enum class EvalTask { kAnalogy, kSynonym, kRelatedness, kCategorization };

inline std::string_view to_string(EvalTask t) {
  switch (t) {
    case EvalTask::kAnalogy: return "ANALOGY";
    case EvalTask::kSynonym: return "SYNONYM";
    case EvalTask::kRelatedness: return "RELATEDNESS";
    case EvalTask::kCategorization: return "CATEGORIZATION";
  }
  return "?";
}

inline std::optional<EvalTask> parse_eval_task(std::string_view s) {
  for (auto t : {EvalTask::kAnalogy, EvalTask::kSynonym, EvalTask::kRelatedness, EvalTask::kCategorization}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

struct AnalogyItem {
  std::string a, b, c, d;
};
struct SynonymItem {
  std::string query;
  std::vector<std::string> options;
  std::size_t answer = 0;
};
struct PairItem {
  std::string w1, w2;
  double score = 0;
};
struct CategoryItem {
  std::string word, category;
};

struct QueryInventory {
  EvalTask task = EvalTask::kAnalogy;
  std::vector<AnalogyItem> analogy;
  std::vector<SynonymItem> synonym;
  std::vector<PairItem> pairs;
  std::vector<CategoryItem> categories;

  std::size_t size() const {
    return analogy.size() + synonym.size() + pairs.size() + categories.size();
  }
};

inline QueryInventory read_inventory(std::istream& in) {
  QueryInventory inv;
  std::optional<EvalTask> task;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, '\t');) f.push_back(x);
    const auto t = parse_eval_task(f[0]);
    if (!t) throw Error(ErrorCode::kParseError, "unknown task tag '" + f[0] + "'", lineno);
    if (task && *task != t) throw Error(ErrorCode::kParseError, "inventory mixes tasks", lineno);
    task = t;
    auto need = [&](bool ok, const char* shape) {
      if (!ok) throw Error(ErrorCode::kParseError, std::string(to_string(*t)) + " record: " + shape, lineno);
    };
    auto number = [&](const std::string& s) {
      try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParseError, "bad number '" + s + "'", lineno);
      }
    };
    switch (*t) {
      case EvalTask::kAnalogy:
        need(f.size() == 5, "a b c d");
        inv.analogy.push_back({f[1], f[2], f[3], f[4]});
        break;
      case EvalTask::kSynonym: {
        need(f.size() >= 4, "query answer-index option...");
        const double a = number(f[2]);
        need(a >= 0 && a == std::floor(a) && a < static_cast<double>(f.size() - 3), "answer index within options");
        inv.synonym.push_back({f[1], std::vector<std::string>(f.begin() + 3, f.end()), static_cast<std::size_t>(a)});
        break;
      }
      case EvalTask::kRelatedness:
        need(f.size() == 4, "w1 w2 score");
        inv.pairs.push_back({f[1], f[2], number(f[3])});
        break;
      case EvalTask::kCategorization:
        need(f.size() == 3, "word category");
        inv.categories.push_back({f[1], f[2]});
        break;
    }
  }
  if (!task) throw Error(ErrorCode::kEmptyInput, "inventory has no records");
  inv.task = *task;
  return inv;
}

inline QueryInventory load_inventory(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + p.string());
  return read_inventory(in);
}

struct EvalReport {
  EvalTask task = EvalTask::kAnalogy;
  std::optional<double> score;  // absent when nothing could be evaluated
  std::size_t items = 0;
  std::size_t evaluated = 0;
  std::size_t oov = 0;  // items skipped for out-of-vocabulary words
  std::vector<std::string> predictions;

  json to_json() const {
    json j{{"task", to_string(task)}, {"items", items}, {"evaluated", evaluated}, {"oov", oov}};
    j["score"] = score ? json(*score) : json(nullptr);
    return j;
  }
};

inline void require_task(const QueryInventory& inv, EvalTask t) {
  if (inv.task != t) {
    throw Error(ErrorCode::kTaskMismatch,
                "inventory is " + std::string(to_string(inv.task)) + ", expected " + std::string(to_string(t)));
  }
}

// 3CosAdd: argmax over the vocabulary minus {a, b, c} of cos(v, b - a + c);
// ties go to the earlier vocabulary entry.
inline EvalReport eval_analogy(const EmbeddingTable& t, const QueryInventory& inv) {
  require_task(inv, EvalTask::kAnalogy);
  EvalReport r{EvalTask::kAnalogy};
  r.items = inv.analogy.size();
  std::size_t hits = 0;
  for (const auto& q : inv.analogy) {
    const auto ia = t.index(q.a), ib = t.index(q.b), ic = t.index(q.c);
    if (!ia || !ib || !ic || !t.contains(q.d)) {
      ++r.oov;
      r.predictions.emplace_back();
      continue;
    }
    Vec target = t.vector(*ib);
    nn::axpy(-1.0, t.vector(*ia), target);
    nn::axpy(1.0, t.vector(*ic), target);
    double best = -std::numeric_limits<double>::infinity();
    std::optional<std::size_t> arg;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i == *ia || i == *ib || i == *ic) continue;
      const double c = cosine(t.vector(i), target);
      if (!arg || c > best) {
        best = c;
        arg = i;
      }
    }
    ++r.evaluated;
    r.predictions.push_back(arg ? t.words()[*arg] : std::string{});
    hits += arg && t.words()[*arg] == q.d;
  }
  if (r.evaluated) r.score = static_cast<double>(hits) / static_cast<double>(r.evaluated);
  return r;
}

// Average ranks (1-based); tied values share the mean of their positions.
inline Vec average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  Vec r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kLengthMismatch, "spearman inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::kInsufficientPairs, "need at least two pairs");
  const Vec rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

inline EvalReport eval_pair_scores(const EmbeddingTable& t, const QueryInventory& inv) {
  require_task(inv, EvalTask::kRelatedness);
  EvalReport r{EvalTask::kRelatedness};
  r.items = inv.pairs.size();
  Vec sims, human;
  for (const auto& p : inv.pairs) {
    if (!t.contains(p.w1) || !t.contains(p.w2)) {
      ++r.oov;
      continue;
    }
    sims.push_back(cosine(t[p.w1], t[p.w2]));
    human.push_back(p.score);
  }
  r.evaluated = sims.size();
  if (sims.size() < 2) {
    throw Error(ErrorCode::kInsufficientPairs, std::to_string(sims.size()) + " in-vocabulary pairs");
  }
  const double rho = spearman(sims, human);
  if (!std::isnan(rho)) r.score = rho;
  return r;
}

// Multiple choice by maximum cosine to the query; OOV options score -inf and
// items whose query or every option is OOV are unanswerable.
inline EvalReport eval_synonym(const EmbeddingTable& t, const QueryInventory& inv) {
  require_task(inv, EvalTask::kSynonym);
  EvalReport r{EvalTask::kSynonym};
  r.items = inv.synonym.size();
  std::size_t hits = 0;
  for (const auto& q : inv.synonym) {
    std::optional<std::size_t> arg;
    double best = -std::numeric_limits<double>::infinity();
    if (t.contains(q.query)) {
      for (std::size_t k = 0; k < q.options.size(); ++k) {
        if (!t.contains(q.options[k])) continue;
        const double c = cosine(t[q.query], t[q.options[k]]);
        if (!arg || c > best) {
          best = c;
          arg = k;
        }
      }
    }
    if (!arg) {
      ++r.oov;
      r.predictions.emplace_back();
      continue;
    }
    ++r.evaluated;
    r.predictions.push_back(q.options[*arg]);
    hits += *arg == q.answer;
  }
  if (r.evaluated) r.score = static_cast<double>(hits) / static_cast<double>(r.evaluated);
  return r;
}

struct KMeansResult {
  std::vector<std::size_t> assignment;
  std::size_t iterations = 0;
};

// Euclidean k-means from the given centroids; ties go to the lower cluster,
// empty clusters keep their centroid.
inline KMeansResult kmeans(const std::vector<Vec>& points, std::vector<Vec> centroids, std::size_t max_iter = 100) {
  KMeansResult r;
  r.assignment.assign(points.size(), 0);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centroids.size(); ++c) {
        double d = 0;
        for (std::size_t k = 0; k < points[i].size(); ++k) d += (points[i][k] - centroids[c][k]) * (points[i][k] - centroids[c][k]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      changed |= r.assignment[i] != arg;
      r.assignment[i] = arg;
    }
    r.iterations = it + 1;
    if (!changed) break;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      Vec sum(centroids[c].size(), 0.0);
      std::size_t n = 0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (r.assignment[i] != c) continue;
        nn::axpy(1.0, points[i], sum);
        ++n;
      }
      if (n == 0) continue;
      for (auto& x : sum) x /= static_cast<double>(n);
      centroids[c] = std::move(sum);
    }
  }
  return r;
}

// k-means over length-normalized vectors of the in-vocabulary words, one
// cluster per category seeded with that category's first word; scored by
// purity.
inline EvalReport eval_categorization(const EmbeddingTable& t, const QueryInventory& inv) {
  require_task(inv, EvalTask::kCategorization);
  EvalReport r{EvalTask::kCategorization};
  r.items = inv.categories.size();
  std::vector<std::string> cats;
  std::vector<std::size_t> cat_of;
  std::vector<Vec> points, seeds;
  for (const auto& it : inv.categories) {
    if (!t.contains(it.word)) {
      ++r.oov;
      continue;
    }
    Vec v = t[it.word];
    if (const double n = norm(v); n > 0) {
      for (auto& x : v) x /= n;
    }
    auto c = std::find(cats.begin(), cats.end(), it.category);
    if (c == cats.end()) {
      cats.push_back(it.category);
      seeds.push_back(v);
      c = cats.end() - 1;
    }
    cat_of.push_back(static_cast<std::size_t>(c - cats.begin()));
    points.push_back(std::move(v));
  }
  r.evaluated = points.size();
  if (cats.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "categorization needs at least two in-vocabulary categories");
  }
  const auto km = kmeans(points, seeds);
  std::vector<std::vector<std::size_t>> counts(cats.size(), std::vector<std::size_t>(cats.size(), 0));
  for (std::size_t i = 0; i < points.size(); ++i) ++counts[km.assignment[i]][cat_of[i]];
  std::size_t pure = 0;
  for (const auto& row : counts) pure += *std::max_element(row.begin(), row.end());
  r.score = static_cast<double>(pure) / static_cast<double>(points.size());
  for (auto a : km.assignment) r.predictions.push_back(std::to_string(a));
  return r;
}

inline EvalReport evaluate(const EmbeddingTable& t, const QueryInventory& inv) {
  switch (inv.task) {
    case EvalTask::kAnalogy: return eval_analogy(t, inv);
    case EvalTask::kSynonym: return eval_synonym(t, inv);
    case EvalTask::kRelatedness: return eval_pair_scores(t, inv);
    case EvalTask::kCategorization: return eval_categorization(t, inv);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown task");
}

}  // namespace sshala
