#pragma once

// Candidate segmentation graph over one whitespace-free chunk.
//
// Nodes are positions 0..n of the surface. An edge [start, end) proposes a
// word. When the junction at `start` was produced by rule (L, R, S), the
// edge's span begins with S and its word begins with R; when the junction at
// `end` is rule (L', R', S'), the word ends with L' and the span stops where
// S' begins:
//
//   word = R_in + surface[start + |S_in| .. end) + L_out
//
// Edge b may follow edge a when a.end == b.start, a.rule_out == b.rule_in and
// the join rule selected for (a's word minus its consumed R_in, b's word) is
// exactly that rule. Single-phoneme fallback edges are opaque: junctions
// touching them are plain concatenation. Only edges on some full path are
// kept. A lattice refers to the rule table it was built with.

#include <algorithm>
#include <functional>
#include <memory>
#include <span>
#include <tuple>
#include <vector>

#include "sanskritshala/error.hpp"
#include "sanskritshala/lexicon.hpp"
#include "sanskritshala/sandhi.hpp"

namespace sshala {

struct LatticeEdge {
  std::size_t start = 0;
  std::size_t end = 0;
  PhonemeString word;
  RuleRef rule_in;
  RuleRef rule_out;
  bool in_lexicon = false;

  auto operator<=>(const LatticeEdge&) const = default;
};

class Lattice {
 public:
  static constexpr std::size_t kDefaultMaxWordLen = 20;

  Lattice() = default;

  static Lattice build(const PhonemeString& surface, const Lexicon& lexicon, const RuleTable& rules,
                       std::size_t max_word_len = kDefaultMaxWordLen) {
    if (surface.empty()) throw Error(ErrorCode::kEmptyInput, "empty surface");
    if (max_word_len == 0) throw Error(ErrorCode::kInvalidArgument, "max_word_len must be positive");
    Lattice lat;
    lat.surface_ = surface;
    lat.rules_ = &rules;
    const std::size_t n = surface.size();
    const std::string& s = surface.slp1();

    // Rules whose surface window starts at p (p > 0; a junction needs a left word).
    std::vector<std::vector<std::size_t>> at(n + 1);
    for (std::size_t p = 1; p < n; ++p) {
      for (std::size_t r = 0; r < rules.size(); ++r) {
        const auto& S = rules[r].surface.slp1();
        if (p + S.size() <= n && s.compare(p, S.size(), S) == 0) at[p].push_back(r);
      }
    }

    std::vector<LatticeEdge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<RuleRef> ins{std::nullopt};
      for (auto r : at[i]) ins.emplace_back(r);
      for (const RuleRef& rin : ins) {
        const std::size_t c = i + (rin ? rules[*rin].surface.size() : 0);
        const PhonemeString head = rin ? rules[*rin].right_initial : PhonemeString{};
        for (std::size_t k = std::max(c, i + 1); k <= n && k - i <= max_word_len; ++k) {
          const PhonemeString body = head + surface.substr(c, k - c);
          std::vector<RuleRef> outs{std::nullopt};
          if (k < n) {
            for (auto r : at[k]) outs.emplace_back(r);
          }
          for (const RuleRef& rout : outs) {
            PhonemeString word = rout ? body + rules[*rout].left_final : body;
            if (word.empty() || !lexicon.contains(word)) continue;
            edges.push_back({i, k, std::move(word), rin, rout, true});
          }
        }
      }
      edges.push_back({i, i + 1, surface.substr(i, 1), std::nullopt, std::nullopt, false});
    }
    std::sort(edges.begin(), edges.end(), order);
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    lat.edges_ = std::move(edges);
    lat.link();
    lat.trim();
    return lat;
  }

  const PhonemeString& surface() const noexcept { return surface_; }
  std::size_t size() const noexcept { return surface_.size(); }
  const std::vector<LatticeEdge>& edges() const noexcept { return edges_; }
  const LatticeEdge& edge(std::size_t e) const { return edges_.at(e); }
  const std::vector<std::size_t>& successors(std::size_t e) const { return succ_.at(e); }
  const std::vector<std::size_t>& predecessors(std::size_t e) const { return pred_.at(e); }
  const RuleTable& rules() const { return *rules_; }

  bool initial(std::size_t e) const { return edges_[e].start == 0 && !edges_[e].rule_in; }
  bool final(std::size_t e) const { return edges_[e].end == size() && !edges_[e].rule_out; }

  // Whether b may follow a.
  bool connects(std::size_t a, std::size_t b) const {
    const auto& x = edges_[a];
    const auto& y = edges_[b];
    if (x.end != y.start || x.rule_out != y.rule_in) return false;
    if (!x.in_lexicon || !y.in_lexicon) return !x.rule_out;
    const std::size_t consumed = x.rule_in ? (*rules_)[*x.rule_in].right_initial.size() : 0;
    return rules_->select(x.word.substr(consumed), y.word) == x.rule_out;
  }

  bool is_path(std::span<const std::size_t> path) const {
    if (path.empty()) return false;
    for (auto e : path) {
      if (e >= edges_.size()) return false;
    }
    if (!initial(path.front()) || !final(path.back())) return false;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      if (!connects(path[i], path[i + 1])) return false;
    }
    return true;
  }

  std::vector<PhonemeString> words(std::span<const std::size_t> path) const {
    std::vector<PhonemeString> w;
    w.reserve(path.size());
    for (auto e : path) w.push_back(edges_.at(e).word);
    return w;
  }

  // Re-joins the words of a path, treating fallback junctions as opaque.
  PhonemeString join(std::span<const std::size_t> path) const {
    auto w = words(path);
    std::unique_ptr<bool[]> flags(new bool[path.size()]);
    for (std::size_t i = 0; i < path.size(); ++i) flags[i] = edges_[path[i]].in_lexicon;
    return rules_->join_words(w, std::span<const bool>(flags.get(), path.size()));
  }

  // Number of full paths (as a double; it can be astronomically large).
  double path_count() const {
    std::vector<double> ways(edges_.size(), 0.0);
    double total = 0;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      double w = initial(e) ? 1.0 : 0.0;
      for (auto p : pred_[e]) w += ways[p];
      ways[e] = w;
      if (final(e)) total += w;
    }
    return total;
  }

  // Visits every full path in lexicographic edge-id order; `visit` returns
  // false to stop early.
  void for_each_path(const std::function<bool(const std::vector<std::size_t>&)>& visit) const {
    std::vector<std::size_t> path;
    bool stop = false;
    std::function<void(std::size_t)> dfs = [&](std::size_t e) {
      path.push_back(e);
      if (final(e) && !visit(path)) stop = true;
      for (auto nx : succ_[e]) {
        if (stop) break;
        dfs(nx);
      }
      path.pop_back();
    };
    for (std::size_t e = 0; e < edges_.size() && !stop; ++e) {
      if (initial(e)) dfs(e);
    }
  }

  // Edge-id path whose words are `gold`, preferring lexicon edges and then
  // smallest ids; empty when none exists.
  std::vector<std::size_t> find_path(std::span<const PhonemeString> gold) const {
    std::vector<std::size_t> path;
    std::function<bool(std::size_t)> dfs = [&](std::size_t e) {
      path.push_back(e);
      if (path.size() == gold.size()) {
        if (final(e)) return true;
      } else {
        for (int pass = 0; pass < 2; ++pass) {
          for (auto nx : succ_[e]) {
            if (edges_[nx].in_lexicon != (pass == 0) || edges_[nx].word != gold[path.size()]) continue;
            if (dfs(nx)) return true;
          }
        }
      }
      path.pop_back();
      return false;
    };
    if (gold.empty()) return {};
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t e = 0; e < edges_.size(); ++e) {
        if (initial(e) && edges_[e].in_lexicon == (pass == 0) && edges_[e].word == gold[0] && dfs(e)) return path;
      }
    }
    return {};
  }

 private:
  // Lexicon edges before the fallback edge with the same span and word.
  static bool order(const LatticeEdge& a, const LatticeEdge& b) {
    const bool fa = !a.in_lexicon, fb = !b.in_lexicon;
    return std::tie(a.start, a.end, a.word, a.rule_in, a.rule_out, fa) <
           std::tie(b.start, b.end, b.word, b.rule_in, b.rule_out, fb);
  }

  void link() {
    const std::size_t m = edges_.size();
    succ_.assign(m, {});
    pred_.assign(m, {});
    std::vector<std::vector<std::size_t>> by_start(size() + 1);
    for (std::size_t e = 0; e < m; ++e) by_start[edges_[e].start].push_back(e);
    for (std::size_t a = 0; a < m; ++a) {
      for (auto b : by_start[edges_[a].end]) {
        if (connects(a, b)) {
          succ_[a].push_back(b);
          pred_[b].push_back(a);
        }
      }
    }
  }

  // Drops edges that lie on no full path. Edges are sorted by start and have
  // positive width, so id order is topological.
  void trim() {
    const std::size_t m = edges_.size();
    std::vector<char> fwd(m, 0), bwd(m, 0);
    for (std::size_t e = 0; e < m; ++e) {
      fwd[e] = initial(e);
      for (auto p : pred_[e]) fwd[e] |= fwd[p];
    }
    for (std::size_t e = m; e-- > 0;) {
      bwd[e] = final(e);
      for (auto s : succ_[e]) bwd[e] |= bwd[s];
    }
    std::vector<LatticeEdge> kept;
    for (std::size_t e = 0; e < m; ++e) {
      if (fwd[e] && bwd[e]) kept.push_back(std::move(edges_[e]));
    }
    edges_ = std::move(kept);
    link();
  }

  PhonemeString surface_;
  const RuleTable* rules_ = nullptr;
  std::vector<LatticeEdge> edges_;
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
};

}  // namespace sshala
