#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "sanskritshala/ml.hpp"

using namespace sshala;
using fixtures::iast;
using fixtures::slp;
using fixtures::tr;

// ---------------------------------------------------------------- text-core

TEST(Transliterate, EmptyInput) { EXPECT_EQ(tr().transliterate("", Script::kSlp1, Script::kIast), ""); }

TEST(Transliterate, SlpToIast) { EXPECT_EQ(tr().transliterate("rAma", Script::kSlp1, Script::kIast), "rāma"); }

TEST(Transliterate, IdentityScript) {
  EXPECT_EQ(tr().transliterate("dāsobhava", Script::kIast, Script::kIast), "dāsobhava");
}

TEST(Transliterate, Devanagari) {
  EXPECT_EQ(tr().transliterate("rAma", Script::kSlp1, Script::kDevanagari), "राम");
  EXPECT_EQ(tr().transliterate("dAsoBava", Script::kSlp1, Script::kDevanagari), "दासोभव");
  EXPECT_EQ(tr().transliterate("karma", Script::kSlp1, Script::kDevanagari), "कर्म");
  EXPECT_EQ(tr().transliterate("aham", Script::kSlp1, Script::kDevanagari), "अहम्");
}

TEST(Transliterate, KeepsSeparators) {
  EXPECT_EQ(tr().transliterate("pIta-ambaram Bava", Script::kSlp1, Script::kIast), "pīta-ambaram bhava");
}

TEST(Transliterate, InvalidCharacterPosition) {
  try {
    tr().transliterate("rAma dA#a", Script::kSlp1, Script::kIast);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidCharacter);
    EXPECT_EQ(e.where(), 7u);
  }
  try {
    tr().to_phonemes("rāmx", Script::kIast);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidCharacter);
    EXPECT_EQ(e.where(), 3u);
  }
}

TEST(ToPhonemes, Examples) {
  EXPECT_TRUE(tr().to_phonemes("", Script::kSlp1).empty());
  auto bhava = tr().to_phonemes("bhava", Script::kIast);
  EXPECT_EQ(bhava.size(), 4u);
  EXPECT_EQ(bhava.slp1(), "Bava");
  auto ah = tr().to_phonemes("aH", Script::kSlp1);
  ASSERT_EQ(ah.size(), 2u);
  EXPECT_EQ(ah[0], 'a');
  EXPECT_EQ(ah[1], 'H');
}

TEST(ToPhonemes, SeparatorDisambiguatesDigraphs) {
  // a+i and k+h must not read back as ai / kh.
  for (std::string s : {"ai", "kh", "Ei", "aikh", "au", "gh"}) {
    auto p = slp(s);
    auto rendered = tr().render(p, Script::kIast);
    EXPECT_EQ(tr().to_phonemes(rendered, Script::kIast), p) << s << " -> " << rendered;
  }
  EXPECT_EQ(tr().render(slp("E"), Script::kIast), "ai");
}

TEST(ToPhonemes, RandomRoundTripAllScriptPairs) {
  const std::string inv = tr().symbols();
  std::mt19937_64 gen(7);
  const Script scripts[] = {Script::kSlp1, Script::kIast, Script::kDevanagari};
  for (int n = 0; n < 10000; ++n) {
    std::string s;
    const std::size_t len = gen() % 12;
    for (std::size_t i = 0; i < len; ++i) s += inv[gen() % inv.size()];
    auto p = slp(s);
    for (Script a : scripts) {
      const std::string ra = tr().render(p, a);
      ASSERT_EQ(tr().to_phonemes(ra, a), p) << s << " via " << to_string(a);
      for (Script b : scripts) {
        ASSERT_EQ(tr().transliterate(tr().transliterate(ra, a, b), b, a), ra) << s;
      }
    }
  }
}

TEST(ToPhonemes, Deterministic) {
  EXPECT_EQ(tr().to_phonemes("praBUtanaranAgena", Script::kSlp1), tr().to_phonemes("praBUtanaranAgena", Script::kSlp1));
  EXPECT_EQ(iast("prabhūtanaranāgena").slp1(), "praBUtanaranAgena");
}

TEST(Script, ParseNames) {
  EXPECT_EQ(parse_script("IAST"), Script::kIast);
  EXPECT_EQ(parse_script("SLP1"), Script::kSlp1);
  EXPECT_EQ(parse_script("DEVANAGARI"), Script::kDevanagari);
  EXPECT_THROW(parse_script("HK"), Error);
}

TEST(TranslitTable, VersionAndInventory) {
  EXPECT_EQ(tr().version(), "1");
  EXPECT_EQ(tr().inventory_size(), tr().symbols().size());
  EXPECT_TRUE(tr().is_vowel('A'));
  EXPECT_FALSE(tr().is_vowel('k'));
  EXPECT_EQ(tr().kind('H'), PhonemeKind::kMark);
}

// ------------------------------------------------------------------- sandhi

TEST(ApplyJoin, Examples) {
  const auto& r = fixtures::rules();
  EXPECT_EQ(r.join(iast("dāsaḥ"), iast("bhava")), iast("dāsobhava"));
  EXPECT_EQ(r.join(iast("pīta"), iast("ambaram")), iast("pītāmbaram"));
  EXPECT_EQ(r.join(iast("rāmaḥ"), PhonemeString{}), iast("rāmaḥ"));
  EXPECT_EQ(r.join(PhonemeString{}, iast("rāmaḥ")), iast("rāmaḥ"));
  EXPECT_EQ(r.join(slp("balena"), slp("upaviveSa")), slp("balenopaviveSa"));
}

TEST(ApplyJoin, FirstRuleWins) {
  auto t = RuleTable::from_rules({{"first", slp("a"), slp("a"), slp("A")}, {"second", slp("a"), slp("a"), slp("e")}});
  EXPECT_EQ(t.join(slp("ka"), slp("ab")), slp("kAb"));
  EXPECT_EQ(t.id_of(t.select(slp("ka"), slp("ab"))), "first");
}

TEST(RuleFile, Validation) {
  std::istringstream dup("x\ta\ta\tA\nx\ti\ti\tI\n");
  EXPECT_THROW(RuleTable::parse(dup, tr()), Error);
  std::istringstream empty_window("x\t-\t-\tA\n");
  EXPECT_THROW(RuleTable::parse(empty_window, tr()), Error);
  std::istringstream bad("x\ta\ta\n");
  try {
    RuleTable::parse(bad, tr());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_EQ(e.where(), 1u);
  }
  std::istringstream ok("# c\n\nx\t-\tk\tg\n");
  EXPECT_EQ(RuleTable::parse(ok, tr()).size(), 1u);
}

namespace {
bool contains(const std::vector<SplitCandidate>& cs, const std::string& l, const std::string& r, RuleRef rule) {
  return std::any_of(cs.begin(), cs.end(), [&](const SplitCandidate& c) {
    return c.left.slp1() == l && c.right.slp1() == r && c.rule == rule;
  });
}
}  // namespace

TEST(SplitCandidates, Examples) {
  const auto& r = fixtures::rules();
  auto c1 = r.split_candidates(iast("dāsobhava"), 3);
  EXPECT_TRUE(contains(c1, "dAsaH", "Bava", r.find("visarga-o-B")));
  auto c2 = r.split_candidates(iast("rāma"), 4);
  EXPECT_TRUE(contains(c2, "rAma", "", std::nullopt));
  auto c3 = r.split_candidates(iast("pītāmbaram"), 3);
  EXPECT_TRUE(contains(c3, "pIta", "ambaram", r.find("dirgha-aa")));
}

TEST(SplitCandidates, OutOfRange) {
  const auto& r = fixtures::rules();
  EXPECT_THROW(r.split_candidates(slp("rAma"), 0), Error);
  EXPECT_THROW(r.split_candidates(slp("rAma"), 5), Error);
}

TEST(SplitCandidates, RandomJoinsSoundAndComplete) {
  const auto& r = fixtures::rules();
  const auto forms = fixtures::lexicon().forms();
  std::mt19937_64 gen(11);
  int done = 0;
  while (done < 1000) {
    const auto& l = forms[gen() % forms.size()];
    const auto& rt = forms[gen() % forms.size()];
    const RuleRef rule = r.select(l, rt);
    const std::size_t junction = rule ? l.size() - r[*rule].left_final.size() : l.size();
    if (junction == 0) continue;
    const auto surface = r.join(l, rt);
    auto cands = r.split_candidates(surface, junction);
    EXPECT_TRUE(contains(cands, l.slp1(), rt.slp1(), rule)) << l.slp1() << "+" << rt.slp1();
    for (const auto& c : cands) {
      EXPECT_EQ(r.join(c.left, c.right), surface) << c.left.slp1() << "+" << c.right.slp1();
      EXPECT_EQ(c.junction, junction);
    }
    EXPECT_EQ(cands, r.split_candidates(surface, junction));
    EXPECT_TRUE(std::is_sorted(cands.begin(), cands.end()));
    ++done;
  }
}

TEST(JoinWords, JunctionLocal) {
  const auto& r = fixtures::rules();
  std::vector<PhonemeString> w{slp("balena"), slp("upaviveSa"), slp("ha")};
  EXPECT_EQ(r.join_words(w), slp("balenopaviveSaha"));
  std::vector<PhonemeString> two{slp("dAsaH"), slp("Bava")};
  EXPECT_EQ(r.join_words(two), r.join(two[0], two[1]));
  bool analyzed[] = {true, false};
  EXPECT_EQ(r.join_words(two, analyzed), slp("dAsaHBava"));
}

// ------------------------------------------------------------------ lexicon

TEST(LexiconLoad, EmptyAndDuplicates) {
  std::istringstream empty("");
  EXPECT_EQ(Lexicon::parse(empty, tr()).size(), 0u);
  std::istringstream dup("dAsaH\tdAsa\tNOUN,NOM,SG,M\ndAsaH\tdAsa\tNOUN,NOM,SG,M\n");
  EXPECT_EQ(Lexicon::parse(dup, tr()).size(), 1u);
}

TEST(LexiconLoad, IastEntryRetrievable) {
  std::istringstream in("# script: IAST\ndāsaḥ\tdāsa\tNOUN,NOM,SG,M\n");
  auto lex = Lexicon::parse(in, tr());
  const auto& es = lex.lookup(iast("dāsaḥ"));
  ASSERT_EQ(es.size(), 1u);
  EXPECT_EQ(es[0].lemma, slp("dAsa"));
  EXPECT_EQ(es[0].tag.spec(), "NOUN,NOM,SG,M");
  EXPECT_TRUE(lex.lookup(slp("rAma")).empty());
}

TEST(LexiconLoad, SyncreticFormReturnsBoth) {
  std::istringstream in("devAt\tdeva\tNOUN,ABL,SG,M\nBAryAyAH\tBAryA\tNOUN,GEN,SG,F\nBAryAyAH\tBAryA\tNOUN,ABL,SG,F\n");
  auto lex = Lexicon::parse(in, tr());
  const auto& es = lex.lookup(slp("BAryAyAH"));
  ASSERT_EQ(es.size(), 2u);
  // Canonical order: by lemma, then tag (case order NOM..VOC).
  EXPECT_EQ(es[0].tag.spec(), "NOUN,ABL,SG,F");
  EXPECT_EQ(es[1].tag.spec(), "NOUN,GEN,SG,F");
}

TEST(LexiconLoad, Errors) {
  std::istringstream bad_tag("x\ty\tNOUN,NOM,SG,M\nrAmaH\trAma\tVERB,NOM,SG\n");
  try {
    Lexicon::parse(bad_tag, tr());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConstraintViolation);
    EXPECT_EQ(e.where(), 2u);
  }
  std::istringstream bad_cols("rAmaH\trAma\n");
  try {
    Lexicon::parse(bad_cols, tr());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_EQ(e.where(), 1u);
  }
  std::istringstream unknown("ca\tca\tINDECL,FOO\n");
  EXPECT_THROW(Lexicon::parse(unknown, tr()), Error);
}

TEST(MorphTag, Invariants) {
  EXPECT_THROW(MorphTag::parse("INDECL,SG"), Error);
  EXPECT_THROW(MorphTag::parse("NOUN,3"), Error);
  EXPECT_THROW(MorphTag::parse("VERB,NOM"), Error);
  EXPECT_THROW(MorphTag::parse("NOUN,SG,NOM"), Error);
  auto t = MorphTag::parse("VERB,SG,3,PRES");
  EXPECT_EQ(t.spec(), "VERB,SG,3,PRES");
  EXPECT_FALSE(t.case_.has_value());
}

TEST(BundledLexicon, AllEntriesValid) {
  const auto& lex = fixtures::lexicon();
  EXPECT_GE(lex.forms().size(), 1500u);
  for (const auto& e : lex.entries()) {
    EXPECT_FALSE(e.tag.violation().has_value());
    // lookup never fabricates: every result is an entry of the form itself
    for (const auto& x : lex.lookup(e.surface)) EXPECT_EQ(x.surface, e.surface);
  }
  EXPECT_EQ(lex.lookup(slp("dAsaH")).size(), 1u);
}

// ------------------------------------------------------------------ ml-core

namespace {

struct Pair {
  double x, y;
};

// 0.5 (w x - y)^2
struct LeastSquares {
  ParamStore ps;
  LeastSquares() { ps.add("w", {1}); }
  const ParamStore& params() const { return ps; }
  ParamStore& params() { return ps; }
  double loss(const Pair& e, Gradients* g, const TaskWeights&) const {
    const double r = ps[0].data[0] * e.x - e.y;
    if (g) g->row(0, 0)[0] += r * e.x;
    return 0.5 * r * r;
  }
};

// Linear score w·x + b with squared error; optional bias.
struct Linear {
  ParamStore ps;
  bool bias;
  explicit Linear(std::size_t d, bool with_bias) : bias(with_bias) {
    ps.add("w", {d});
    if (bias) ps.add("b", {1});
  }
  const ParamStore& params() const { return ps; }
  ParamStore& params() { return ps; }
  double loss(const std::vector<double>& x, Gradients* g, const TaskWeights&) const {
    double s = bias ? ps[1].data[0] : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += ps[0].data[i] * x[i];
    if (g) {
      for (std::size_t i = 0; i < x.size(); ++i) g->row(0, i)[0] += x[i];
      if (bias) g->row(1, 0)[0] += 1.0;
    }
    return s;
  }
};

struct Grouped {
  ParamStore ps;
  Grouped() {
    ps.add("a", {2}, "main");
    ps.add("b", {2}, "aux");
  }
  const ParamStore& params() const { return ps; }
  ParamStore& params() { return ps; }
  double loss(const int&, Gradients* g, const TaskWeights& w) const {
    double l = 0;
    for (std::size_t k = 0; k < 2; ++k) {
      l += w("main") * ps[0].data[k] * ps[0].data[k] + w("aux") * ps[1].data[k] * ps[1].data[k];
      if (g) {
        g->row(0, k)[0] += 2 * w("main") * ps[0].data[k];
        g->row(1, k)[0] += 2 * w("aux") * ps[1].data[k];
      }
    }
    return l;
  }
};

}  // namespace

TEST(SgdTrain, ZeroEpochsUnchanged) {
  LeastSquares m;
  m.ps[0].data[0] = 0.3;
  std::vector<Pair> data{{1, 2}};
  TrainConfig cfg;
  cfg.epochs = 0;
  auto res = sgd_train(m, data, cfg);
  EXPECT_EQ(res.model.ps, m.ps);
  EXPECT_TRUE(res.epoch_loss.empty());
}

TEST(SgdTrain, LeastSquaresReachesClosedForm) {
  std::vector<Pair> data{{1.0, 2.1}, {2.0, 3.9}, {-1.0, -2.2}, {0.5, 0.9}};
  double sxy = 0, sxx = 0;
  for (auto p : data) {
    sxy += p.x * p.y;
    sxx += p.x * p.x;
  }
  const double w_star = sxy / sxx;
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 100;
  cfg.batch_size = data.size();
  auto res = sgd_train(LeastSquares{}, data, cfg);
  EXPECT_NEAR(res.model.ps[0].data[0], w_star, 1e-3);
  EXPECT_EQ(res.epoch_loss.size(), 100u);
}

TEST(SgdTrain, SameSeedBitIdentical) {
  std::vector<Pair> data{{1.0, 2.1}, {2.0, 3.9}, {-1.0, -2.2}, {0.5, 0.9}, {3, 6.2}};
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.epochs = 7;
  cfg.seed = 99;
  auto a = sgd_train(LeastSquares{}, data, cfg);
  auto b = sgd_train(LeastSquares{}, data, cfg);
  EXPECT_EQ(a.model.ps, b.model.ps);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
}

TEST(SgdTrain, NonFiniteLossReportsEpoch) {
  std::vector<Pair> data{{1e200, 1}};
  LeastSquares m;
  m.ps[0].data[0] = 1e200;
  TrainConfig cfg;
  try {
    sgd_train(m, data, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteLoss);
    EXPECT_EQ(e.where(), 0u);
  }
}

TEST(SgdTrain, ConfigValidation) {
  std::vector<Pair> data{{1, 1}};
  TrainConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW(sgd_train(LeastSquares{}, data, cfg), Error);
  cfg = {};
  cfg.loss_weights = TaskWeights{{"a", 0.0}, {"b", 0.0}};
  EXPECT_THROW(sgd_train(LeastSquares{}, data, cfg), Error);
  cfg = {};
  EXPECT_THROW(sgd_train(LeastSquares{}, std::vector<Pair>{}, cfg), Error);
}

TEST(SgdTrain, L2ShrinksNormWithZeroGradient) {
  Linear m(3, false);
  m.ps[0].data = {0.5, -0.2, 0.1};
  std::vector<std::vector<double>> data{{0.0, 0.0, 0.0}};
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.l2 = 0.1;
  auto res = sgd_train(m, data, cfg);
  EXPECT_LT(res.model.ps.squared_norm(), m.ps.squared_norm());
}

TEST(SgdTrain, ZeroWeightGroupFrozen) {
  Grouped m;
  m.ps[0].data = {1, 2};
  m.ps[1].data = {3, 4};
  std::vector<int> data{0};
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.loss_weights = TaskWeights{{"main", 1.0}, {"aux", 0.0}};
  auto res = sgd_train(m, data, cfg);
  EXPECT_EQ(res.model.ps[1].data, m.ps[1].data);
  EXPECT_NE(res.model.ps[0].data, m.ps[0].data);
}

TEST(GradCheck, LinearModelExact) {
  Linear m(4, true);
  Rng rng(3);
  m.ps.init_uniform(rng);
  EXPECT_LE(grad_check(m, std::vector<double>{0.3, -1.2, 2.0, 0.7}, 1e-5), 1e-6);
}

TEST(GradCheck, ZeroInputBiasFree) {
  Linear m(3, false);
  Rng rng(4);
  m.ps.init_uniform(rng);
  Gradients g(m.ps);
  m.loss({0, 0, 0}, &g, {});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(g.value(0, k), 0.0);
  EXPECT_EQ(grad_check(m, std::vector<double>{0, 0, 0}, 1e-5), 0.0);
}

TEST(ModelFile, RoundTrip) {
  ParamStore ps;
  ps.add("emb", {5, 3}, "tag");
  ps.add("bias", {3});
  Rng rng(5);
  ps.init_uniform(rng);
  ps.set_version_tag("7");
  std::stringstream buf;
  write_model(buf, "tagger", json{{"k", 1}}, ps);
  auto mf = read_model(buf, "tagger");
  EXPECT_EQ(mf.params, ps);
  EXPECT_EQ(mf.params.version_tag(), "7");
  EXPECT_EQ(mf.meta.at("k"), 1);
}

TEST(ModelFile, Rejections) {
  ParamStore ps;
  ps.add("w", {2});
  std::stringstream bad("XXHALA....");
  EXPECT_THROW(
      {
        try {
          read_model(bad);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kCorruptFile);
          throw;
        }
      },
      Error);
  std::stringstream v1;
  write_model(v1, "m", json::object(), ps, 1);
  try {
    read_model(v1, {}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionMismatch);
  }
  std::stringstream trunc;
  write_model(trunc, "m", json::object(), ps);
  std::string s = trunc.str();
  s.pop_back();
  std::stringstream cut(s);
  EXPECT_THROW(read_model(cut), Error);
  std::stringstream wrong_module;
  write_model(wrong_module, "parser", json::object(), ps);
  EXPECT_THROW(read_model(wrong_module, "tagger"), Error);
}

TEST(Rng, ShuffleIsPermutationAndSeeded) {
  std::vector<int> a(50), b;
  std::iota(a.begin(), a.end(), 0);
  b = a;
  Rng r1(42), r2(42);
  r1.shuffle(std::span<int>(a));
  r2.shuffle(std::span<int>(b));
  EXPECT_EQ(a, b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  for (int i = 0; i < 1000; ++i) {
    double u = r1.uniform(-0.1, 0.1);
    EXPECT_GE(u, -0.1);
    EXPECT_LT(u, 0.1);
  }
}
