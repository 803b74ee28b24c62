#pragma once

// Exhaustive reference implementations. Each one enumerates the whole search
// space and shares no code with the decoder it checks.

#include <algorithm>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include "sanskritshala/lattice.hpp"
#include "sanskritshala/parser.hpp"
#include "sanskritshala/segmenter.hpp"
#include "sanskritshala/tagger.hpp"

namespace oracles {

using sshala::PhonemeString;
using sshala::Vec;

// Maximum over every single-root arborescence of Σ s[h][d].
inline double best_tree_score(const sshala::ArcScores& a) {
  const std::size_t n = a.n();
  std::vector<std::size_t> heads(n, 0);
  double best = -std::numeric_limits<double>::infinity();
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n) {
      if (!sshala::is_arborescence(heads)) return;
      double s = 0;
      for (std::size_t d = 1; d <= n; ++d) s += a(heads[d - 1], d);
      best = std::max(best, s);
      return;
    }
    for (std::size_t h = 0; h <= n; ++h) {
      if (h == i + 1) continue;
      heads[i] = h;
      rec(i + 1);
    }
  };
  rec(0);
  return best;
}

// Highest-scoring tag sequence; the first one in lexicographic order wins ties.
template <class Trans>
std::vector<std::size_t> best_sequence(const std::vector<Vec>& emit, Trans&& trans) {
  const std::size_t n = emit.size(), T = emit.at(0).size();
  std::vector<std::size_t> cur(n, 0), best;
  double best_score = -std::numeric_limits<double>::infinity();
  while (true) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s += emit[i][cur[i]];
      if (i) s += trans(cur[i - 1], cur[i]);
    }
    if (best.empty() || s > best_score) {
      best = cur;
      best_score = s;
    }
    std::size_t i = n;
    while (i > 0 && cur[i - 1] + 1 == T) cur[--i] = 0;
    if (i == 0) break;
    ++cur[i - 1];
  }
  return best;
}

struct RankedPath {
  double score = 0;
  std::vector<PhonemeString> words;
  std::vector<std::size_t> path;
};

// Every full lattice path, scored edge by edge and sorted best first; ties
// go to the smaller word sequence, then the smaller edge-id sequence.
inline std::vector<RankedPath> ranked_paths(const sshala::SegModel& m, const sshala::Lattice& lat) {
  std::vector<RankedPath> out;
  lat.for_each_path([&](const std::vector<std::size_t>& p) {
    RankedPath r;
    r.path = p;
    for (auto e : p) {
      r.score += m.edge_score(lat, e) + (lat.edge(e).in_lexicon ? m.config().lambda : 0.0);
      r.words.push_back(lat.edge(e).word);
    }
    out.push_back(std::move(r));
    return true;
  });
  std::sort(out.begin(), out.end(), [](const RankedPath& a, const RankedPath& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.words != b.words) return a.words < b.words;
    return a.path < b.path;
  });
  return out;
}

// Every sequence of lexicon forms whose sandhi join is `surface`, found by
// depth-first search over the whole form inventory.
inline std::set<std::vector<PhonemeString>> lexicon_segmentations(const PhonemeString& surface,
                                                                  const sshala::Lexicon& lex,
                                                                  const sshala::RuleTable& rules) {
  const auto forms = lex.forms();
  const std::size_t slack = sshala::RuleTable::kMaxWindow;
  std::set<std::vector<PhonemeString>> out;
  std::vector<PhonemeString> words;
  std::function<void()> rec = [&] {
    if (words.size() >= surface.size()) return;
    for (const auto& f : forms) {
      words.push_back(f);
      const auto j = rules.join_words(words);
      const std::size_t fixed = j.size() > slack ? j.size() - slack : 0;
      if (fixed <= surface.size() && j.slp1().compare(0, fixed, surface.slp1(), 0, fixed) == 0) {
        if (j == surface) out.insert(words);
        rec();
      }
      words.pop_back();
    }
  };
  rec();
  return out;
}

// Number of full paths made only of lexicon edges.
inline double lexicon_path_count(const sshala::Lattice& lat) {
  std::vector<double> ways(lat.edges().size(), 0.0);
  double total = 0;
  for (std::size_t e = 0; e < lat.edges().size(); ++e) {
    if (!lat.edge(e).in_lexicon) continue;
    double w = lat.initial(e) ? 1.0 : 0.0;
    for (auto p : lat.predecessors(e)) w += ways[p];
    ways[e] = w;
    if (lat.final(e)) total += w;
  }
  return total;
}

}  // namespace oracles
