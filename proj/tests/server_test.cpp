#include <gtest/gtest.h>

#include <atomic>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sanskritshala/service.hpp"

using namespace sshala;
using fixtures::thrown;

namespace {

std::shared_ptr<const Resources> resources() {
  static const auto r = std::make_shared<const Resources>(
      Resources::load(fixtures::data("translit.tsv"), fixtures::data("sandhi_rules.tsv"), fixtures::data("lexicon.tsv"),
                      fixtures::data("labels.txt")));
  return r;
}

const Models& demo_models() {
  static const Models m = [] {
    const auto c = DemoCorpora::in(SSHALA_DATA_DIR);
    Models out;
    out.segmenter = std::make_shared<SegModel>(train_demo_segmenter(*resources(), c));
    out.tagger = std::make_shared<TagModel>(train_demo_tagger(*resources(), c));
    out.parser = std::make_shared<ParserModel>(train_demo_parser(*resources(), c));
    out.compound = std::make_shared<CompoundModel>(train_demo_compound(*resources(), c));
    return out;
  }();
  return m;
}

// A service on an ephemeral port with a fresh session directory.
class Running {
 public:
  explicit Running(Models models = demo_models()) : dir_("server") {
    service_ = std::make_unique<Service>(std::make_shared<Analyzer>(resources(), std::move(models)),
                                         std::make_shared<SessionStore>(dir_.path / "sessions"),
                                         ChatBot::load(fixtures::data("chat_rules.json")),
                                         json{{"tasks", json::array()}});
    service_->install(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }

  Service& service() { return *service_; }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

  std::pair<int, json> post(const std::string& path, const json& body) const {
    auto r = client().Post(path, body.dump(), "application/json");
    if (!r) throw std::runtime_error("no response from " + path);
    return {r->status, json::parse(r->body)};
  }
  std::pair<int, std::string> get(const std::string& path) const {
    auto r = client().Get(path);
    if (!r) throw std::runtime_error("no response from " + path);
    return {r->status, r->body};
  }

  // Creates a session; returns its id and bundle.
  std::pair<std::string, json> analyze(const std::string& text, const std::vector<std::string>& tasks) const {
    const auto [status, body] = post("/api/analyze", {{"text", text}, {"tasks", tasks}});
    if (status != 200) throw std::runtime_error("analyze failed: " + body.dump());
    return {body["session_id"].get<std::string>(), body["bundle"]};
  }
  std::pair<int, json> correct(const std::string& id, const std::string& task, const json& correction) const {
    return post("/api/session/" + id + "/correction", {{"task", task}, {"correction", correction}});
  }

 private:
  fixtures::TempDir dir_;
  std::unique_ptr<Service> service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string error_code(const json& body) { return body.at("error").at("code").get<std::string>(); }

// (dependent, new head) turning the root's single dependent into its head.
std::pair<std::size_t, std::size_t> cycle_edit(const std::vector<std::size_t>& heads) {
  const std::size_t root = static_cast<std::size_t>(std::find(heads.begin(), heads.end(), 0) - heads.begin()) + 1;
  for (std::size_t d = 1; d <= heads.size(); ++d)
    if (heads[d - 1] == root) return {root, d};
  throw std::logic_error("root without dependents");
}

}  // namespace

TEST(Api, AnalyzeCorrectFinalizeExport) {
  Running srv;
  const auto [id, bundle] = srv.analyze("dāsobhava", {"SEGMENT", "MORPH", "PARSE"});
  ASSERT_EQ(bundle["segment"].size(), 1u);
  EXPECT_EQ(bundle["segment"][0]["words"], json({"dāsaḥ", "bhava"}));
  EXPECT_EQ(bundle["tokens"], json({"dāsaḥ", "bhava"}));

  // The served segmentation is the exhaustive oracle's best path.
  const auto& res = *resources();
  const auto lat = Lattice::build(res.tr.to_phonemes("dāsobhava", Script::kIast), res.lexicon, res.rules);
  const auto ranked = oracles::ranked_paths(*demo_models().segmenter, lat);
  EXPECT_EQ(bundle["segment"][0]["path"].get<std::vector<std::size_t>>(), ranked.front().path);
  EXPECT_EQ(bundle["segment"][0]["lattice"]["edges"].size(), lat.edges().size());

  // Re-root the tree at the other token and relabel.
  const auto heads = bundle["parse"]["heads"].get<std::vector<std::size_t>>();
  ASSERT_EQ(heads.size(), 2u);
  const std::size_t new_root = heads[0] == 0 ? 2 : 1, new_dep = 3 - new_root;
  auto [st, s1] = srv.correct(id, "PARSE",
                              {{"arcs", {{{"token", new_root}, {"head", 0}, {"label", "root"}},
                                         {{"token", new_dep}, {"head", new_root}, {"label", "karta"}}}}});
  ASSERT_EQ(st, 200) << s1.dump();
  std::tie(st, s1) = srv.correct(id, "MORPH", {{"token", 0}, {"tag", "NOUN,NOM,SG,M"}, {"lemma", "dāsa"}});
  ASSERT_EQ(st, 200) << s1.dump();

  std::tie(st, s1) = srv.post("/api/session/" + id + "/finalize", json::object());
  ASSERT_EQ(st, 200);
  EXPECT_EQ(s1["status"], "FINALIZED");

  const auto [est, doc] = srv.get("/api/session/" + id + "/export?format=conllu");
  ASSERT_EQ(est, 200);
  std::istringstream in(doc);
  const auto sents = read_conllu(in);
  ASSERT_EQ(sents.size(), 1u);
  const auto& toks = sents[0].tokens;
  ASSERT_EQ(toks.size(), 2u);
  EXPECT_EQ(toks[0][conllu::kForm], "dāsaḥ");
  EXPECT_EQ(toks[0][conllu::kLemma], "dāsa");
  EXPECT_EQ(toks[0][conllu::kXpos], "NOUN,NOM,SG,M");
  EXPECT_EQ(toks[new_root - 1][conllu::kHead], "0");
  EXPECT_EQ(toks[new_dep - 1][conllu::kHead], std::to_string(new_root));
  EXPECT_EQ(toks[new_dep - 1][conllu::kDeprel], "karta");
  EXPECT_EQ(to_conllu_string(sents), doc);

  std::tie(st, s1) = srv.correct(id, "MORPH", {{"token", 1}, {"tag", "VERB,SG,2,IMPV"}});
  EXPECT_EQ(st, 409);
  EXPECT_EQ(error_code(s1), "SessionFinalized");
}

TEST(Api, AnalyzeRequestErrors) {
  Running srv;
  auto [st, body] = srv.post("/api/analyze", {{"text", "dāsobhava"}, {"tasks", json::array()}});
  EXPECT_EQ(st, 400);
  EXPECT_EQ(error_code(body), "InvalidRequest");
  std::tie(st, body) = srv.post("/api/analyze", {{"tasks", {"SEGMENT"}}});
  EXPECT_EQ(st, 400);
  EXPECT_EQ(error_code(body), "InvalidRequest");
  std::tie(st, body) = srv.post("/api/analyze", {{"text", "dāsobhava"}, {"tasks", {"TRANSLATE"}}});
  EXPECT_EQ(st, 400);
  auto r = srv.client().Post("/api/analyze", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
}

TEST(Api, MissingModelIsReported) {
  Models only_segmenter;
  only_segmenter.segmenter = demo_models().segmenter;
  Running srv(only_segmenter);
  const auto [st, body] = srv.post("/api/analyze", {{"text", "dāsobhava"}, {"tasks", {"PARSE"}}});
  EXPECT_EQ(st, 503);
  EXPECT_EQ(error_code(body), "ModelMissing");
  EXPECT_EQ(body["error"]["message"], "PARSE");
  const auto [hs, health] = srv.get("/api/health");
  EXPECT_EQ(json::parse(health)["models"], json({{"SEGMENT", true}, {"MORPH", false}, {"PARSE", false}, {"COMPOUND", false}}));
}

TEST(Api, CycleCorrectionRejected) {
  Running srv;
  const auto [id, bundle] = srv.analyze("rāmaḥ vanam gacchati", {"PARSE"});
  const auto [d, h] = cycle_edit(bundle["parse"]["heads"].get<std::vector<std::size_t>>());
  const auto [st, body] = srv.correct(id, "PARSE", {{"token", d}, {"head", h}});
  EXPECT_EQ(st, 400);
  EXPECT_EQ(error_code(body), "InvalidCorrection");
  EXPECT_EQ(body["error"]["message"], "cycle");
  EXPECT_TRUE(srv.service().store().get(id).corrections.empty());
}

TEST(Api, OutOfCandidateTagAccepted) {
  Running srv;
  const auto [id, bundle] = srv.analyze("dāsaḥ bhava", {"MORPH"});
  EXPECT_TRUE(bundle["morph"][0]["in_candidates"].get<bool>());
  const auto [st, s] = srv.correct(id, "MORPH", {{"token", 0}, {"tag", "NOUN,ACC,PL,F"}});
  ASSERT_EQ(st, 200) << s.dump();
  const auto& m = s["effective"]["morph"][0];
  EXPECT_EQ(m["tag"], "NOUN,ACC,PL,F");
  EXPECT_FALSE(m["in_candidates"].get<bool>());
  EXPECT_TRUE(m["corrected"].get<bool>());
  const auto [bad, err] = srv.correct(id, "MORPH", {{"token", 0}, {"tag", "NOUN,WHATEVER"}});
  EXPECT_EQ(bad, 400);
  EXPECT_EQ(error_code(err), "InvalidCorrection");
}

TEST(Api, SegmentCorrectionSelectsAnotherPath) {
  Running srv;
  const auto [id, bundle] = srv.analyze("dāsobhava", {"SEGMENT", "MORPH"});
  const auto& res = *resources();
  const auto surface = res.tr.to_phonemes("dāsobhava", Script::kIast);
  const auto lat = Lattice::build(surface, res.lexicon, res.rules);
  const auto predicted = bundle["segment"][0]["path"].get<std::vector<std::size_t>>();
  std::vector<std::size_t> other;
  lat.for_each_path([&](const std::vector<std::size_t>& p) {
    if (p.size() != predicted.size()) other = p;
    return other.empty();
  });
  ASSERT_FALSE(other.empty());

  const auto [st, s] = srv.correct(id, "SEGMENT", {{"chunk", 0}, {"path", other}});
  ASSERT_EQ(st, 200) << s.dump();
  const auto& eff = s["effective"];
  std::vector<PhonemeString> words;
  for (const auto& w : eff["segment"][0]["words"]) words.push_back(res.tr.to_phonemes(w.get<std::string>(), Script::kIast));
  EXPECT_EQ(words, lat.words(other));
  EXPECT_EQ(res.rules.join_words(words), surface);
  EXPECT_EQ(eff["tokens"], eff["segment"][0]["words"]);
  EXPECT_FALSE(eff.contains("morph"));
  EXPECT_EQ(eff["stale"], json({"morph"}));

  std::vector<std::size_t> partial(other.begin(), other.end() - 1);
  const auto [bad, err] = srv.correct(id, "SEGMENT", {{"chunk", 0}, {"path", partial}});
  EXPECT_EQ(bad, 400);
  EXPECT_EQ(error_code(err), "InvalidCorrection");
}

TEST(Api, ExportWithoutCorrectionsEqualsPredictions) {
  Running srv;
  const auto [id, bundle] = srv.analyze("rāmaḥ vanam gacchati", {"MORPH", "PARSE"});
  const auto [st, doc] = srv.get("/api/session/" + id + "/export?format=conllu");
  ASSERT_EQ(st, 200);
  std::istringstream in(doc);
  const auto sents = read_conllu(in);
  ASSERT_EQ(sents.size(), 1u);
  for (std::size_t i = 0; i < bundle["tokens"].size(); ++i) {
    const auto& t = sents[0].tokens[i];
    EXPECT_EQ(t[conllu::kForm], bundle["tokens"][i]);
    EXPECT_EQ(t[conllu::kXpos], bundle["morph"][i]["tag"]);
    EXPECT_EQ(t[conllu::kLemma], bundle["morph"][i]["lemma"]);
    EXPECT_EQ(t[conllu::kHead], std::to_string(bundle["parse"]["heads"][i].get<std::size_t>()));
    EXPECT_EQ(t[conllu::kDeprel], bundle["parse"]["labels"][i]);
  }
  EXPECT_EQ(to_conllu_string(sents), doc);

  const auto [js, jdoc] = srv.get("/api/session/" + id + "/export?format=json");
  ASSERT_EQ(js, 200);
  const auto j = json::parse(jdoc);
  EXPECT_EQ(j["schema_version"], kExportSchemaVersion);
  EXPECT_EQ(j["parse"], bundle["parse"]);
  const auto [fs, ferr] = srv.get("/api/session/" + id + "/export?format=xml");
  EXPECT_EQ(fs, 400);
  EXPECT_EQ(error_code(json::parse(ferr)), "FormatUnsupported");
}

TEST(Api, CompoundAnalysisAndCorrection) {
  Running srv;
  const auto [id, bundle] = srv.analyze("aham pīta-ambaram dharāmi", {"COMPOUND"});
  ASSERT_EQ(bundle["compound"].size(), 1u);
  const auto& c = bundle["compound"][0];
  EXPECT_EQ(c["token"], 1);
  EXPECT_EQ(c["constituents"], json({"pīta", "ambaram"}));
  EXPECT_EQ(bundle["tokens"][1], "pītāmbaram");
  auto [st, s] = srv.correct(id, "COMPOUND", {{"token", 1}, {"label", "DVANDVA"}});
  ASSERT_EQ(st, 200);
  EXPECT_EQ(s["effective"]["compound"][0]["label"], "DVANDVA");
  std::tie(st, s) = srv.correct(id, "COMPOUND", {{"token", 1}, {"label", "KARMADHARAYA"}});
  EXPECT_EQ(st, 400);
  std::tie(st, s) = srv.correct(id, "COMPOUND", {{"token", 0}, {"label", "DVANDVA"}});
  EXPECT_EQ(st, 400);
}

TEST(Api, ReplayReproducesSession) {
  Running srv;
  const auto [id, bundle] = srv.analyze("dāsaḥ bhava", {"MORPH", "PARSE"});
  srv.correct(id, "MORPH", {{"token", 1}, {"tag", "VERB,SG,2,PRES"}});
  srv.correct(id, "MORPH", {{"token", 0}, {"tag", "NOUN,VOC,SG,M"}, {"lemma", "dāsa"}});
  srv.post("/api/session/" + id + "/finalize", json::object());
  auto& store = srv.service().store();
  const auto live = store.get(id);
  const auto replayed = store.replay(id);
  EXPECT_EQ(replayed, live);
  EXPECT_EQ(replayed.corrections.size(), 2u);
  EXPECT_EQ(replayed.status, SessionStatus::kFinalized);
  const auto [st, body] = srv.get("/api/session/" + id);
  EXPECT_EQ(json::parse(body), live.to_json());
}

TEST(Api, ConcurrentCorrectionsAreAllKept) {
  Running srv;
  const auto [id, bundle] = srv.analyze("rāmaḥ vanam gacchati", {"MORPH"});
  constexpr int kThreads = 8;
  std::atomic<int> ok{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < kThreads; ++t) {
    pool.emplace_back([&, t] {
      const auto [st, _] = srv.correct(id, "MORPH", {{"token", t % 3}, {"tag", "NOUN,NOM,SG,M"}});
      ok += st == 200;
    });
  }
  for (auto& th : pool) th.join();
  EXPECT_EQ(ok.load(), kThreads);
  const auto s = srv.service().store().replay(id);
  ASSERT_EQ(s.corrections.size(), static_cast<std::size_t>(kThreads));
  for (std::size_t i = 0; i < s.corrections.size(); ++i) EXPECT_EQ(s.corrections[i].seq, i + 1);
}

TEST(Api, UnknownSession) {
  Running srv;
  const auto [st, body] = srv.get("/api/session/nosuchsession");
  EXPECT_EQ(st, 404);
  EXPECT_EQ(error_code(json::parse(body)), "SessionNotFound");
  const auto [cs, cbody] = srv.correct("nosuchsession", "MORPH", {{"token", 0}, {"tag", "NOUN,NOM,SG,M"}});
  EXPECT_EQ(cs, 404);
}

TEST(Api, ChatAndStaticRoutes) {
  Running srv;
  auto [st, r] = srv.post("/api/chat", {{"message", "How do I segment a verse?"}});
  ASSERT_EQ(st, 200);
  EXPECT_EQ(r["rule"], "segment");
  std::tie(st, r) = srv.post("/api/chat", {{"message", ""}});
  EXPECT_TRUE(r["rule"].is_null());
  EXPECT_EQ(r["response"], srv.service().chat({{"message", "zzz"}})["response"]);
  std::tie(st, r) = srv.post("/api/chat", {{"message", 3}});
  EXPECT_EQ(st, 400);
  const auto [ls, lb] = srv.get("/api/leaderboard");
  EXPECT_EQ(ls, 200);
  EXPECT_EQ(json::parse(lb), json({{"tasks", json::array()}}));
}

TEST(Chat, RulePriorityAndFallback) {
  const ChatBot bot({{"seg", {"segment"}, "Use SEGMENT.", {}}, {"tag", {"tag", "segment"}, "Use MORPH.", {}}},
                    "Sorry.");
  EXPECT_EQ(bot.respond("How do I segment a verse?").rule_id, "seg");
  EXPECT_EQ(bot.respond("How do I segment a verse?").response, "Use SEGMENT.");
  EXPECT_EQ(bot.respond("TAG this").rule_id, "tag");
  EXPECT_FALSE(bot.respond("").rule_id);
  EXPECT_EQ(bot.respond("").response, "Sorry.");
  EXPECT_EQ(bot.respond("unrelated").response, "Sorry.");
}

TEST(Config, EnvironmentOverridesFile) {
  auto c = ServiceConfig::from_json({{"port", 9000}, {"lexicon", "lexicon.tsv"}, {"models", {{"tagger", "m/t.json"}}}},
                                    "/srv/data");
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.lexicon, "/srv/data/lexicon.tsv");
  EXPECT_EQ(c.models.tagger, "/srv/data/m/t.json");
  const std::map<std::string, std::string> env{{"SSHALA_PORT", "8123"}, {"SSHALA_MODEL_TAGGER", "/x/t.json"}};
  c.apply_env([&](const char* k) -> const char* {
    auto it = env.find(k);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  EXPECT_EQ(c.port, 8123);
  EXPECT_EQ(c.models.tagger, "/x/t.json");
  EXPECT_EQ(c.lexicon, "/srv/data/lexicon.tsv");
  EXPECT_EQ(thrown([&] { c.apply_env([](const char* k) { return std::string(k) == "SSHALA_PORT" ? "eighty" : nullptr; }); }),
            ErrorCode::kInvalidArgument);
}

TEST(Config, StatusMapping) {
  EXPECT_EQ(http_status(ErrorCode::kSessionNotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::kSessionFinalized), 409);
  EXPECT_EQ(http_status(ErrorCode::kModelMissing), 503);
  EXPECT_EQ(http_status(ErrorCode::kInvalidCorrection), 400);
  EXPECT_EQ(http_status(ErrorCode::kIoError), 500);
}
