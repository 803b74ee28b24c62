#pragma once

// HTTP/JSON front end over the analyzer, the session store and the help bot.
//
//   POST /api/analyze                    {"text", "script"?, "tasks"}
//   GET  /api/session/{id}
//   POST /api/session/{id}/correction    {"task", "correction", "note"?}
//   POST /api/session/{id}/finalize
//   GET  /api/session/{id}/export?format=conllu|json
//   POST /api/chat                       {"message"}
//   GET  /api/leaderboard
//   GET  /api/health
//
// Failures answer {"error": {"code", "message"}} with a matching status.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include <httplib.h>

#include "sanskritshala/chat.hpp"
#include "sanskritshala/pipeline.hpp"
#include "sanskritshala/session.hpp"

namespace sshala {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path session_dir = "sessions";
  std::filesystem::path translit, rules, lexicon, labels, chat_rules, leaderboard;
  ModelPaths models;

  // Relative paths in the file resolve against the file's directory.
  static ServiceConfig from_json(const json& j, const std::filesystem::path& base = {}) {
    ServiceConfig c;
    auto path = [&](const json& o, const char* key, std::filesystem::path& dst) {
      if (!o.contains(key)) return;
      std::filesystem::path p = o.at(key).get<std::string>();
      dst = p.is_relative() && !base.empty() ? base / p : p;
    };
    try {
      c.host = j.value("host", c.host);
      c.port = j.value("port", c.port);
      path(j, "session_dir", c.session_dir);
      path(j, "translit", c.translit);
      path(j, "rules", c.rules);
      path(j, "lexicon", c.lexicon);
      path(j, "labels", c.labels);
      path(j, "chat_rules", c.chat_rules);
      path(j, "leaderboard", c.leaderboard);
      if (j.contains("models")) {
        const auto& m = j.at("models");
        path(m, "segmenter", c.models.segmenter);
        path(m, "tagger", c.models.tagger);
        path(m, "parser", c.models.parser);
        path(m, "compound", c.models.compound);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, std::string("config: ") + e.what());
    }
    return c;
  }

  static ServiceConfig load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + file.string());
    try {
      return from_json(json::parse(in), file.parent_path());
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParseError, std::string("config: ") + e.what());
    }
  }

  // SSHALA_HOST, SSHALA_PORT, SSHALA_SESSION_DIR, SSHALA_TRANSLIT,
  // SSHALA_RULES, SSHALA_LEXICON, SSHALA_LABELS, SSHALA_CHAT_RULES,
  // SSHALA_LEADERBOARD, SSHALA_MODEL_{SEGMENTER,TAGGER,PARSER,COMPOUND}.
  void apply_env(const std::function<const char*(const char*)>& getenv = [](const char* k) { return std::getenv(k); }) {
    auto set = [&](const char* key, std::filesystem::path& dst) {
      if (const char* v = getenv(key); v && *v) dst = v;
    };
    if (const char* v = getenv("SSHALA_HOST"); v && *v) host = v;
    if (const char* v = getenv("SSHALA_PORT"); v && *v) {
      try {
        port = std::stoi(v);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, std::string("SSHALA_PORT '") + v + "'");
      }
    }
    set("SSHALA_SESSION_DIR", session_dir);
    set("SSHALA_TRANSLIT", translit);
    set("SSHALA_RULES", rules);
    set("SSHALA_LEXICON", lexicon);
    set("SSHALA_LABELS", labels);
    set("SSHALA_CHAT_RULES", chat_rules);
    set("SSHALA_LEADERBOARD", leaderboard);
    set("SSHALA_MODEL_SEGMENTER", models.segmenter);
    set("SSHALA_MODEL_TAGGER", models.tagger);
    set("SSHALA_MODEL_PARSER", models.parser);
    set("SSHALA_MODEL_COMPOUND", models.compound);
  }
};

inline int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kSessionNotFound: return 404;
    case ErrorCode::kSessionFinalized: return 409;
    case ErrorCode::kModelMissing: return 503;
    case ErrorCode::kIoError:
    case ErrorCode::kCorruptFile:
    case ErrorCode::kNonFiniteLoss: return 500;
    default: return 400;
  }
}

inline json error_json(const Error& e) { return {{"error", {{"code", to_string(e.code())}, {"message", e.detail()}}}}; }

class Service {
 public:
  Service(std::shared_ptr<const Analyzer> analyzer, std::shared_ptr<SessionStore> store, ChatBot bot,
          json leaderboard = json::object())
      : analyzer_(std::move(analyzer)), store_(std::move(store)), bot_(std::move(bot)), board_(std::move(leaderboard)) {}

  static Service from_config(const ServiceConfig& c) {
    auto res = std::make_shared<Resources>(Resources::load(c.translit, c.rules, c.lexicon, c.labels));
    auto analyzer = std::make_shared<Analyzer>(res, load_models(c.models, res->rules));
    ChatBot bot = c.chat_rules.empty() ? ChatBot({}, "No help topics are configured.") : ChatBot::load(c.chat_rules);
    json board = json::object();
    if (!c.leaderboard.empty()) {
      std::ifstream in(c.leaderboard);
      if (!in) throw Error(ErrorCode::kIoError, "cannot open " + c.leaderboard.string());
      board = json::parse(in, nullptr, false);
      if (board.is_discarded()) throw Error(ErrorCode::kParseError, "leaderboard is not valid JSON");
    }
    return Service(analyzer, std::make_shared<SessionStore>(c.session_dir), std::move(bot), std::move(board));
  }

  const Analyzer& analyzer() const { return *analyzer_; }
  SessionStore& store() { return *store_; }

  // --- operations (each throws Error) ---

  json analyze(const json& req) const {
    if (!req.is_object() || !req.contains("text") || !req["text"].is_string()) {
      throw Error(ErrorCode::kInvalidRequest, "'text' is required");
    }
    const Script script = parse_script_request(req.value("script", std::string("IAST")));
    if (!req.contains("tasks") || !req["tasks"].is_array()) throw Error(ErrorCode::kInvalidRequest, "'tasks' must be an array");
    std::set<Task> tasks;
    for (const auto& t : req["tasks"]) {
      if (!t.is_string()) throw Error(ErrorCode::kInvalidRequest, "task names are strings");
      tasks.insert(parse_task(t.get<std::string>()));
    }
    const std::string text = req["text"].get<std::string>();
    json bundle = analyzer_->analyze(text, script, tasks);
    const Session s = store_->create(text, script, bundle);
    return {{"session_id", s.id}, {"bundle", bundle}};
  }

  json session(const std::string& id) const { return store_->get(id).to_json(); }

  json correct(const std::string& id, const json& req) const {
    if (!req.is_object() || !req.contains("task") || !req["task"].is_string() || !req.contains("correction")) {
      throw Error(ErrorCode::kInvalidRequest, "'task' and 'correction' are required");
    }
    const Task task = parse_task(req["task"].get<std::string>());
    const Session current = store_->get(id);
    const Script script = current.script;
    const auto& res = analyzer_->resources();
    CorrectionContext ctx;
    ctx.labels = res.labels;
    ctx.compound_classes = analyzer_->models().compound ? analyzer_->models().compound->classes() : res.compound_classes;
    ctx.segment_path = [&](const std::string& surface, const std::vector<std::size_t>& path)
        -> std::optional<std::vector<std::string>> {
      const auto words = analyzer_->check_segment_path(res.tr.to_phonemes(surface, script), path);
      if (!words) return std::nullopt;
      std::vector<std::string> out;
      for (const auto& w : *words) out.push_back(res.tr.render(w, script));
      return out;
    };
    return store_->correct(id, task, req["correction"], req.value("note", std::string{}), ctx).to_json();
  }

  json finalize(const std::string& id) const { return store_->finalize(id).to_json(); }

  // Returns the document and its content type.
  std::pair<std::string, std::string> export_session(const std::string& id, const std::string& format) const {
    if (format != "conllu" && format != "json") throw Error(ErrorCode::kFormatUnsupported, "'" + format + "'");
    const Session s = store_->get(id);
    if (format == "conllu") return {to_conllu_string({export_conllu(s)}), "text/plain; charset=utf-8"};
    return {export_json(s).dump(2) + "\n", "application/json"};
  }

  json chat(const json& req) const {
    if (!req.is_object() || (req.contains("message") && !req["message"].is_string())) {
      throw Error(ErrorCode::kInvalidRequest, "'message' must be a string");
    }
    return bot_.respond(req.value("message", std::string{})).to_json();
  }

  json leaderboard() const { return board_; }

  json health() const {
    const auto& m = analyzer_->models();
    return {{"status", "ok"},
            {"models",
             {{"SEGMENT", m.segmenter != nullptr},
              {"MORPH", m.tagger != nullptr},
              {"PARSE", m.parser != nullptr},
              {"COMPOUND", m.compound != nullptr}}}};
  }

  // --- HTTP ---

  void install(httplib::Server& srv) const {
    srv.Post("/api/analyze", wrap([this](const httplib::Request& r, httplib::Response& w) {
      reply(w, analyze(body_of(r)));
    }));
    srv.Get(R"(/api/session/([A-Za-z0-9_-]+))", wrap([this](const httplib::Request& r, httplib::Response& w) {
      reply(w, session(r.matches[1]));
    }));
    srv.Post(R"(/api/session/([A-Za-z0-9_-]+)/correction)", wrap([this](const httplib::Request& r, httplib::Response& w) {
      reply(w, correct(r.matches[1], body_of(r)));
    }));
    srv.Post(R"(/api/session/([A-Za-z0-9_-]+)/finalize)", wrap([this](const httplib::Request& r, httplib::Response& w) {
      reply(w, finalize(r.matches[1]));
    }));
    srv.Get(R"(/api/session/([A-Za-z0-9_-]+)/export)", wrap([this](const httplib::Request& r, httplib::Response& w) {
      const auto [doc, type] = export_session(r.matches[1], r.has_param("format") ? r.get_param_value("format") : "json");
      w.set_content(doc, type.c_str());
    }));
    srv.Post("/api/chat", wrap([this](const httplib::Request& r, httplib::Response& w) { reply(w, chat(body_of(r))); }));
    srv.Get("/api/leaderboard", wrap([this](const httplib::Request&, httplib::Response& w) { reply(w, leaderboard()); }));
    srv.Get("/api/health", wrap([this](const httplib::Request&, httplib::Response& w) { reply(w, health()); }));
  }

 private:
  static Script parse_script_request(const std::string& s) {
    try {
      return parse_script(s);
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidRequest, e.detail());
    }
  }

  static json body_of(const httplib::Request& r) {
    if (r.body.empty()) return json::object();
    json j = json::parse(r.body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kInvalidRequest, "body is not valid JSON");
    return j;
  }

  static void reply(httplib::Response& w, const json& j) { w.set_content(j.dump(), "application/json"); }

  static httplib::Server::Handler wrap(std::function<void(const httplib::Request&, httplib::Response&)> f) {
    return [f = std::move(f)](const httplib::Request& r, httplib::Response& w) {
      try {
        f(r, w);
      } catch (const Error& e) {
        w.status = http_status(e.code());
        reply(w, error_json(e));
      } catch (const std::exception& e) {
        w.status = 500;
        reply(w, {{"error", {{"code", "Internal"}, {"message", e.what()}}}});
      }
    };
  }

  std::shared_ptr<const Analyzer> analyzer_;
  std::shared_ptr<SessionStore> store_;
  ChatBot bot_;
  json board_;
};

}  // namespace sshala
