#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fixtures.hpp"
#include "sanskritshala/embeddings.hpp"

using namespace sshala;
using fixtures::thrown;

namespace {

EmbeddingTable table(std::size_t dim, const std::vector<std::pair<std::string, Vec>>& rows) {
  EmbeddingTable t(dim);
  for (const auto& [w, v] : rows) t.add(w, v);
  return t;
}

Vec unit(std::size_t dim, std::size_t k) {
  Vec v(dim, 0.0);
  v[k] = 1.0;
  return v;
}

Vec polar(double degrees) {
  const double r = degrees * std::numbers::pi / 180.0;
  return {std::cos(r), std::sin(r)};
}

QueryInventory inventory(const std::string& text) {
  std::istringstream in(text);
  return read_inventory(in);
}

std::vector<std::vector<std::string>> alternating(std::size_t tokens) {
  std::vector<std::string> s;
  for (std::size_t i = 0; i < tokens; ++i) s.push_back(i % 2 ? "b" : "a");
  return {s};
}

}  // namespace

// ---------------------------------------------------------------- skip-gram

TEST(SkipGram, CooccurrenceBeatsHeldOutWord) {
  SkipGramConfig cfg;
  cfg.dim = 8;
  cfg.window = 1;
  const auto m = train_skipgram_model(alternating(200), cfg, {"held"});
  ASSERT_EQ(m.vocab(), (std::vector<std::string>{"a", "b", "held"}));
  EXPECT_GT(m.score(0, 1), m.score(0, 2));
  EXPECT_GT(m.score(0, 1), 0.9);
}

TEST(SkipGram, ZeroEpochsKeepsInitialisation) {
  SkipGramConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 12;
  const auto t = train_skipgram(alternating(20), cfg);
  EXPECT_TRUE(t == SkipGramModel({"a", "b"}, cfg.dim, 12).table());
}

TEST(SkipGram, SameSeedSameTable) {
  SkipGramConfig cfg;
  cfg.seed = 5;
  const auto corpus = load_text_corpus(fixtures::data("embeddings/corpus.txt"));
  const auto first = train_skipgram(corpus, cfg);
  EXPECT_TRUE(train_skipgram(corpus, cfg) == first);
  cfg.seed = 6;
  EXPECT_FALSE(train_skipgram(corpus, cfg) == first);
}

TEST(SkipGram, NegativesNeverEqualContext) {
  SkipGramConfig cfg;
  cfg.negatives = 5;
  const auto d = skipgram_pairs(load_text_corpus(fixtures::data("embeddings/corpus.txt")), cfg);
  ASSERT_FALSE(d.pairs.empty());
  for (const auto& p : d.pairs) {
    EXPECT_EQ(p.negatives.size(), 5u);
    for (auto n : p.negatives) EXPECT_NE(n, p.context);
  }
}

TEST(SkipGram, GradientCheck) {
  SkipGramConfig cfg;
  cfg.dim = 4;
  const auto corpus = load_text_corpus(fixtures::data("embeddings/corpus.txt"));
  const auto d = skipgram_pairs(corpus, cfg);
  const SkipGramModel m(d.vocab, cfg.dim, 3);
  for (std::size_t i = 0; i < d.pairs.size(); i += d.pairs.size() / 10 + 1)
    EXPECT_LE(grad_check_report(m, d.pairs[i], 1e-6).max_relative_error, 1e-4);
}

TEST(SkipGram, Errors) {
  EXPECT_EQ(thrown([] { skipgram_pairs({{}}, {}); }), ErrorCode::kEmptyCorpus);
  SkipGramConfig cfg;
  cfg.window = 0;
  EXPECT_EQ(thrown([&] { skipgram_pairs(alternating(4), cfg); }), ErrorCode::kInvalidArgument);
}

// ------------------------------------------------------------------ vectors

TEST(Vectors, TextRoundTrip) {
  const auto t = table(3, {{"rAma", {0.1, -2.5, 1e-17}}, {"vana", {1.0 / 3.0, 0, 7}}});
  std::stringstream buf;
  write_vectors(buf, t);
  EXPECT_TRUE(read_vectors(buf) == t);
}

TEST(Vectors, ParseErrors) {
  auto code = [](const std::string& text) {
    return thrown([&] {
      std::istringstream in(text);
      read_vectors(in);
    });
  };
  EXPECT_EQ(code(""), ErrorCode::kParseError);
  EXPECT_EQ(code("2 x\n"), ErrorCode::kParseError);
  EXPECT_EQ(code("2 2\na 1 2\n"), ErrorCode::kParseError);
  EXPECT_EQ(code("1 2\na 1\n"), ErrorCode::kParseError);
  EXPECT_EQ(code("1 2\na 1 z\n"), ErrorCode::kParseError);
  EXPECT_EQ(code("2 1\na 1\na 2\n"), ErrorCode::kParseError);
  EXPECT_FALSE(code("1 2\na 1 2\n"));
}

TEST(Vectors, Cosine) {
  EXPECT_DOUBLE_EQ(cosine(Vec{1, 0}, Vec{0, 3}), 0.0);
  EXPECT_DOUBLE_EQ(cosine(Vec{1, 1}, Vec{2, 2}), 1.0);
  EXPECT_EQ(cosine(Vec{0, 0}, Vec{1, 2}), 0.0);
}

// ------------------------------------------------------------------ analogy

TEST(Analogy, ForcedTableScoresOne) {
  Vec d = unit(5, 1);
  d[0] = -1;
  d[2] = 1;
  const auto t = table(5, {{"a", unit(5, 0)}, {"b", unit(5, 1)}, {"c", unit(5, 2)}, {"d", d}, {"x", unit(5, 3)},
                           {"y", unit(5, 4)}});
  const auto r = eval_analogy(t, inventory("ANALOGY\ta\tb\tc\td\n"));
  EXPECT_EQ(r.score, 1.0);
  EXPECT_EQ(r.predictions, std::vector<std::string>{"d"});
}

TEST(Analogy, AllOutOfVocabulary) {
  const auto t = table(2, {{"a", {1, 0}}});
  const auto r = eval_analogy(t, inventory("ANALOGY\ta\tq\tr\ts\nANALOGY\tp\tq\tr\ta\n"));
  EXPECT_FALSE(r.score);
  EXPECT_EQ(r.items, 2u);
  EXPECT_EQ(r.oov, 2u);
  EXPECT_EQ(r.evaluated, 0u);
  EXPECT_TRUE(r.to_json()["score"].is_null());
}

TEST(Analogy, HandComputedFiveWordTable) {
  // Tuple 1 target (0,2): cos x = 0.995, cos y = 0.196, so x.
  // Tuple 2 target (2,0): cos x = 0.0995, cos y = 0.981, so y.
  const auto t = table(2, {{"a", {1, 0}}, {"b", {1, 1}}, {"c", {0, 1}}, {"x", {0.1, 1}}, {"y", {1, 0.2}}});
  const auto r = eval_analogy(t, inventory("ANALOGY\ta\tb\tc\tx\nANALOGY\tc\ta\tb\tx\n"));
  EXPECT_EQ(r.predictions, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(r.score, 0.5);
}

TEST(Analogy, NeverAnswersAQueryWord) {
  // b itself is the best match for b - a + c but is excluded.
  const auto t = table(2, {{"a", {0.01, 0}}, {"b", {1, 0}}, {"c", {0, 0.01}}, {"z", {-1, 0}}});
  const auto r = eval_analogy(t, inventory("ANALOGY\ta\tb\tc\tz\n"));
  EXPECT_EQ(r.predictions, std::vector<std::string>{"z"});
}

// ------------------------------------------------------------- relatedness

TEST(Spearman, MonotoneAndReversed) {
  const Vec x{0.1, 0.2, 0.5, 0.9}, up{1, 2, 3, 4}, down{4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
}

TEST(Spearman, TieUsesAverageRanks) {
  // Ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4): 4.5 / sqrt(4.5 * 5) = 3 / sqrt(10).
  const Vec x{0.1, 0.4, 0.4, 0.9}, y{1, 2, 3, 4};
  EXPECT_EQ(average_ranks(x), (Vec{1, 2.5, 2.5, 4}));
  EXPECT_NEAR(spearman(x, y), 3.0 / std::sqrt(10.0), 1e-12);
}

TEST(Spearman, Errors) {
  EXPECT_EQ(thrown([] { spearman(Vec{1}, Vec{1}); }), ErrorCode::kInsufficientPairs);
  EXPECT_EQ(thrown([] { spearman(Vec{1, 2}, Vec{1}); }), ErrorCode::kLengthMismatch);
}

TEST(Relatedness, CosinesAgainstHumanScores) {
  const auto t = table(2, {{"w0", polar(0)}, {"w1", polar(10)}, {"w2", polar(40)}, {"w3", polar(80)}});
  const auto agree = eval_pair_scores(t, inventory("RELATEDNESS\tw0\tw1\t9\nRELATEDNESS\tw0\tw2\t5\n"
                                                   "RELATEDNESS\tw0\tw3\t1\nRELATEDNESS\tw0\tzz\t3\n"));
  EXPECT_EQ(agree.score, 1.0);
  EXPECT_EQ(agree.oov, 1u);
  EXPECT_EQ(agree.evaluated, 3u);
  const auto reversed = eval_pair_scores(t, inventory("RELATEDNESS\tw0\tw1\t1\nRELATEDNESS\tw0\tw2\t5\n"
                                                      "RELATEDNESS\tw0\tw3\t9\n"));
  EXPECT_EQ(reversed.score, -1.0);
  EXPECT_EQ(thrown([&] { eval_pair_scores(t, inventory("RELATEDNESS\tw0\tw1\t1\nRELATEDNESS\tw0\tq\t2\n")); }),
            ErrorCode::kInsufficientPairs);
}

// ------------------------------------------------------------------ synonym

TEST(Synonym, IdenticalVectorChosen) {
  const auto t = table(2, {{"q", {0.3, 0.7}}, {"same", {0.3, 0.7}}, {"near", {0.31, 0.7}}, {"far", {1, 0}}});
  const auto r = eval_synonym(t, inventory("SYNONYM\tq\t1\tnear\tsame\tfar\n"));
  EXPECT_EQ(r.predictions, std::vector<std::string>{"same"});
  EXPECT_EQ(r.score, 1.0);
}

TEST(Synonym, UnanswerableItemsExcluded) {
  const auto t = table(2, {{"q", {1, 0}}, {"o", {1, 0}}});
  const auto r = eval_synonym(t, inventory("SYNONYM\tq\t0\tu\tv\nSYNONYM\tzz\t0\to\nSYNONYM\tq\t0\to\tu\n"));
  EXPECT_EQ(r.items, 3u);
  EXPECT_EQ(r.oov, 2u);
  EXPECT_EQ(r.evaluated, 1u);
  EXPECT_EQ(r.score, 1.0);
}

TEST(Synonym, HandComputedCosines) {
  // cos(q, o1) = 0.707, cos(q, o2) = 0.970, cos(q, o3) = 0.
  const auto t = table(2, {{"q", {1, 0}}, {"o1", {1, 1}}, {"o2", {2, 0.5}}, {"o3", {0, 1}}});
  const auto r = eval_synonym(t, inventory("SYNONYM\tq\t1\to1\to2\to3\nSYNONYM\tq\t0\to1\to2\to3\n"));
  EXPECT_EQ(r.predictions, (std::vector<std::string>{"o2", "o2"}));
  EXPECT_EQ(r.score, 0.5);
}

// ----------------------------------------------------------- categorization

TEST(Categorization, SeparableFixtureIsPure) {
  const auto t = table(2, {{"a1", {1, 0}}, {"a2", {1, 0}}, {"a3", {1, 0}}, {"b1", {0, 2}}, {"b2", {0, 2}}});
  const auto r = eval_categorization(
      t, inventory("CATEGORIZATION\ta1\tA\nCATEGORIZATION\tb1\tB\nCATEGORIZATION\ta2\tA\n"
                   "CATEGORIZATION\tb2\tB\nCATEGORIZATION\ta3\tA\n"));
  EXPECT_EQ(r.score, 1.0);
}

TEST(Categorization, IdenticalVectorsGiveLargestShare) {
  const auto t = table(2, {{"a1", {1, 1}}, {"a2", {1, 1}}, {"a3", {1, 1}}, {"b1", {1, 1}}});
  const auto r = eval_categorization(
      t, inventory("CATEGORIZATION\ta1\tA\nCATEGORIZATION\ta2\tA\nCATEGORIZATION\ta3\tA\nCATEGORIZATION\tb1\tB\n"));
  EXPECT_EQ(r.score, 0.75);
}

TEST(Categorization, HandRunKMeans) {
  // Seeds 0 and 1. Pass 1: [0,1,1,1,1,1], centroids 0 and 4.8.
  // Pass 2: [0,0,1,1,0,1], centroids 1 and 7. Pass 3: unchanged.
  const std::vector<Vec> pts{{0}, {1}, {5}, {6}, {2}, {10}};
  const auto r = kmeans(pts, {{0}, {1}});
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>{0, 0, 1, 1, 0, 1}));
  EXPECT_EQ(r.iterations, 3u);
}

TEST(Categorization, HandRunOnUnitCircle) {
  // Seeds at 0 and 90 degrees; 80 joins B and 20 joins A, then nothing moves.
  const auto t = table(2, {{"a1", polar(0)}, {"a2", polar(10)}, {"a3", polar(80)}, {"b1", polar(90)},
                           {"b2", polar(85)}, {"b3", polar(20)}});
  const auto r = eval_categorization(
      t, inventory("CATEGORIZATION\ta1\tA\nCATEGORIZATION\ta2\tA\nCATEGORIZATION\ta3\tA\n"
                   "CATEGORIZATION\tb1\tB\nCATEGORIZATION\tb2\tB\nCATEGORIZATION\tb3\tB\n"));
  EXPECT_EQ(r.predictions, (std::vector<std::string>{"0", "0", "1", "1", "1", "0"}));
  EXPECT_DOUBLE_EQ(*r.score, 4.0 / 6.0);
}

TEST(Categorization, PurityBounds) {
  Rng rng(31);
  const auto inv = load_inventory(fixtures::data("embeddings/categorization.tsv"));
  std::map<std::string, std::size_t> share;
  for (const auto& c : inv.categories) ++share[c.category];
  std::size_t largest = 0;
  for (const auto& [_, n] : share) largest = std::max(largest, n);
  for (int trial = 0; trial < 20; ++trial) {
    EmbeddingTable t(3);
    for (const auto& c : inv.categories)
      if (!t.contains(c.word)) t.add(c.word, {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const auto r = eval_categorization(t, inv);
    EXPECT_LE(*r.score, 1.0);
    EXPECT_GE(*r.score, static_cast<double>(largest) / static_cast<double>(inv.categories.size()));
  }
}

TEST(Categorization, NeedsTwoCategories) {
  const auto t = table(1, {{"a", {1}}});
  EXPECT_EQ(thrown([&] { eval_categorization(t, inventory("CATEGORIZATION\ta\tA\nCATEGORIZATION\tz\tB\n")); }),
            ErrorCode::kInvalidArgument);
}

// --------------------------------------------------------------- inventories

TEST(Inventory, TaskMismatch) {
  const auto t = table(1, {{"a", {1}}});
  EXPECT_EQ(thrown([&] { eval_analogy(t, inventory("SYNONYM\ta\t0\ta\n")); }), ErrorCode::kTaskMismatch);
  EXPECT_EQ(thrown([&] { eval_synonym(t, inventory("ANALOGY\ta\ta\ta\ta\n")); }), ErrorCode::kTaskMismatch);
}

TEST(Inventory, ParseErrors) {
  auto code = [](const std::string& text) { return thrown([&] { inventory(text); }); };
  EXPECT_EQ(code(""), ErrorCode::kEmptyInput);
  EXPECT_EQ(code("# only a comment\n"), ErrorCode::kEmptyInput);
  EXPECT_EQ(code("RHYME\ta\tb\n"), ErrorCode::kParseError);
  EXPECT_EQ(code("ANALOGY\ta\tb\tc\n"), ErrorCode::kParseError);
  EXPECT_EQ(code("ANALOGY\ta\tb\tc\td\nSYNONYM\ta\t0\tb\n"), ErrorCode::kParseError);
  EXPECT_EQ(code("SYNONYM\ta\t2\tb\tc\n"), ErrorCode::kParseError);
  EXPECT_EQ(code("SYNONYM\ta\t0.5\tb\tc\n"), ErrorCode::kParseError);
  EXPECT_EQ(code("RELATEDNESS\ta\tb\thigh\n"), ErrorCode::kParseError);
  EXPECT_EQ(code("CATEGORIZATION\ta\n"), ErrorCode::kParseError);
}

TEST(Inventory, BundledFilesParse) {
  const std::vector<std::pair<std::string, EvalTask>> files{{"analogy.tsv", EvalTask::kAnalogy},
                                                            {"categorization.tsv", EvalTask::kCategorization},
                                                            {"relatedness.tsv", EvalTask::kRelatedness},
                                                            {"synonym.tsv", EvalTask::kSynonym}};
  const auto vectors = train_skipgram(load_text_corpus(fixtures::data("embeddings/corpus.txt")), {});
  for (const auto& [f, task] : files) {
    const auto inv = load_inventory(fixtures::data("embeddings/" + f));
    EXPECT_EQ(inv.task, task) << f;
    EXPECT_GT(inv.size(), 0u) << f;
    const auto r = evaluate(vectors, inv);
    EXPECT_EQ(r.items, inv.size()) << f;
    EXPECT_EQ(r.oov, 0u) << f;
  }
}
