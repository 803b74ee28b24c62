#pragma once

// Annotation sessions. Each session is an append-only JSON-lines event log
// (<dir>/<id>.jsonl): one "created" event carrying the prediction bundle,
// then "correction" and "finalized" events. State is rebuilt by replaying
// the log. Corrections never overwrite predictions; the effective view
// applies them in order on top.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sanskritshala/conllu.hpp"
#include "sanskritshala/parser.hpp"
#include "sanskritshala/pipeline.hpp"

namespace sshala {

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

// 128 random bits, base64url without padding (22 characters).
inline std::string new_session_id() {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::random_device rd;
  std::array<std::uint8_t, 16> b{};
  for (std::size_t i = 0; i < b.size(); i += 4) {
    const std::uint32_t x = rd();
    for (std::size_t k = 0; k < 4; ++k) b[i + k] = static_cast<std::uint8_t>(x >> (8 * k));
  }
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (auto byte : b) {
    acc = (acc << 8) | byte;
    bits += 8;
    while (bits >= 6) {
      bits -= 6;
      out += kAlphabet[(acc >> bits) & 63];
    }
  }
  if (bits > 0) out += kAlphabet[(acc << (6 - bits)) & 63];
  return out;
}

inline bool valid_session_id(std::string_view id) {
  if (id.size() != 22) return false;
  return std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'; });
}

enum class SessionStatus { kOpen, kFinalized };

inline std::string_view to_string(SessionStatus s) { return s == SessionStatus::kOpen ? "OPEN" : "FINALIZED"; }

struct CorrectionRecord {
  std::size_t seq = 0;
  Task task = Task::kSegment;
  json body;
  std::string note;
  std::string at;

  json to_json() const { return {{"seq", seq}, {"task", to_string(task)}, {"correction", body}, {"note", note}, {"at", at}}; }
};

// What a correction is checked against beyond the session itself.
struct CorrectionContext {
  std::vector<std::string> labels;
  std::vector<std::string> compound_classes;
  // Resolves a SEGMENT path for a chunk's surface to its words, or nullopt.
  std::function<std::optional<std::vector<std::string>>(const std::string& surface, const std::vector<std::size_t>& path)>
      segment_path;
};

namespace session_detail {

inline std::size_t index_field(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_number_integer() || body[key].get<long long>() < 0) {
    throw Error(ErrorCode::kInvalidCorrection, std::string("missing or invalid '") + key + "'");
  }
  return body[key].get<std::size_t>();
}

inline void require_task(const json& state, const char* key, Task t) {
  if (!state.contains(key)) {
    throw Error(ErrorCode::kInvalidCorrection, std::string(to_string(t)) + " was not predicted in this session");
  }
}

inline void rebuild_tokens(json& state) {
  json tokens = json::array();
  for (const auto& c : state["segment"]) {
    for (const auto& w : c["words"]) tokens.push_back(w);
  }
  if (tokens.size() != state["tokens"].size()) {
    // Downstream analyses no longer align with the corrected tokens.
    for (const char* k : {"morph", "parse", "compound"}) {
      if (state.contains(k)) {
        state.erase(k);
        state["stale"].push_back(k);
      }
    }
  }
  state["tokens"] = tokens;
}

}  // namespace session_detail

// Applies one correction to an effective state. With a context the
// correction is validated (and SEGMENT words resolved into `body`); without
// one it is assumed to have been validated when it was recorded.
inline void apply_correction(json& state, Task task, json& body, const CorrectionContext* ctx) {
  using namespace session_detail;
  if (!body.is_object()) throw Error(ErrorCode::kInvalidCorrection, "correction must be an object");
  switch (task) {
    case Task::kSegment: {
      require_task(state, "segment", task);
      const std::size_t c = index_field(body, "chunk");
      if (c >= state["segment"].size()) throw Error(ErrorCode::kInvalidCorrection, "chunk out of range");
      auto& chunk = state["segment"][c];
      if (ctx) {
        if (chunk.value("compound", false)) throw Error(ErrorCode::kInvalidCorrection, "compound chunks are not segmented");
        if (!body.contains("path") || !body["path"].is_array()) throw Error(ErrorCode::kInvalidCorrection, "missing 'path'");
        std::vector<std::size_t> path;
        for (const auto& e : body["path"]) {
          if (!e.is_number_unsigned()) throw Error(ErrorCode::kInvalidCorrection, "path entries must be edge ids");
          path.push_back(e.get<std::size_t>());
        }
        auto words = ctx->segment_path(chunk["surface"].get<std::string>(), path);
        if (!words) throw Error(ErrorCode::kInvalidCorrection, "not a full lattice path re-joining to the surface");
        body["words"] = *words;
      }
      chunk["path"] = body["path"];
      chunk["words"] = body["words"];
      chunk["corrected"] = true;
      rebuild_tokens(state);
      break;
    }
    case Task::kMorph: {
      require_task(state, "morph", task);
      const std::size_t i = index_field(body, "token");
      if (i >= state["morph"].size()) throw Error(ErrorCode::kInvalidCorrection, "token out of range");
      if (!body.contains("tag") || !body["tag"].is_string()) throw Error(ErrorCode::kInvalidCorrection, "missing 'tag'");
      std::string spec;
      try {
        spec = MorphTag::parse(body["tag"].get<std::string>()).spec();
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidCorrection, "bad tag: " + e.detail());
      }
      auto& m = state["morph"][i];
      m["tag"] = spec;
      if (body.contains("lemma")) {
        if (!body["lemma"].is_string()) throw Error(ErrorCode::kInvalidCorrection, "'lemma' must be a string");
        m["lemma"] = body["lemma"];
      }
      const auto& cands = m["candidates"];
      m["in_candidates"] = std::find(cands.begin(), cands.end(), json(spec)) != cands.end();
      m["corrected"] = true;
      break;
    }
    case Task::kParse: {
      require_task(state, "parse", task);
      auto heads = state["parse"]["heads"].get<std::vector<std::size_t>>();
      auto labels = state["parse"]["labels"].get<std::vector<std::string>>();
      json arcs = body.contains("arcs") ? body["arcs"] : json::array({body});
      if (!arcs.is_array() || arcs.empty()) throw Error(ErrorCode::kInvalidCorrection, "no arcs given");
      for (const auto& a : arcs) {
        const std::size_t d = index_field(a, "token");
        const std::size_t h = index_field(a, "head");
        if (d == 0 || d > heads.size()) throw Error(ErrorCode::kInvalidCorrection, "dependent out of range");
        if (h > heads.size()) throw Error(ErrorCode::kInvalidCorrection, "head out of range");
        heads[d - 1] = h;
        if (a.contains("label")) {
          const auto l = a["label"].is_string() ? a["label"].get<std::string>() : std::string{};
          if (ctx && std::find(ctx->labels.begin(), ctx->labels.end(), l) == ctx->labels.end()) {
            throw Error(ErrorCode::kInvalidCorrection, "unknown label '" + l + "'");
          }
          labels[d - 1] = l;
        }
      }
      if (auto why = tree_violation(heads)) throw Error(ErrorCode::kInvalidCorrection, *why);
      state["parse"]["heads"] = heads;
      state["parse"]["labels"] = labels;
      state["parse"]["corrected"] = true;
      break;
    }
    case Task::kCompound: {
      require_task(state, "compound", task);
      const std::size_t i = index_field(body, "token");
      if (!body.contains("label") || !body["label"].is_string()) throw Error(ErrorCode::kInvalidCorrection, "missing 'label'");
      const auto l = body["label"].get<std::string>();
      if (ctx && std::find(ctx->compound_classes.begin(), ctx->compound_classes.end(), l) == ctx->compound_classes.end()) {
        throw Error(ErrorCode::kInvalidCorrection, "class '" + l + "' not in inventory");
      }
      bool found = false;
      for (auto& c : state["compound"]) {
        if (c["token"].get<std::size_t>() == i) {
          c["label"] = l;
          c["corrected"] = true;
          found = true;
        }
      }
      if (!found) throw Error(ErrorCode::kInvalidCorrection, "token " + std::to_string(i) + " is not a compound");
      break;
    }
  }
}

struct Session {
  std::string id;
  std::string text;
  Script script = Script::kIast;
  json predictions;
  std::vector<CorrectionRecord> corrections;
  SessionStatus status = SessionStatus::kOpen;
  std::string created, updated;

  // Predictions with all corrections applied.
  json effective() const {
    json state = predictions;
    for (const auto& c : corrections) {
      json body = c.body;
      apply_correction(state, c.task, body, nullptr);
    }
    return state;
  }

  json to_json() const {
    json cs = json::array();
    for (const auto& c : corrections) cs.push_back(c.to_json());
    return {{"id", id},           {"text", text},       {"script", to_string(script)},
            {"status", to_string(status)}, {"created", created}, {"updated", updated},
            {"predictions", predictions},  {"corrections", cs}, {"effective", effective()}};
  }

  bool operator==(const Session& o) const { return to_json() == o.to_json(); }
};

inline std::string_view upos_of(const MorphTag& t) {
  switch (t.pos) {
    case Pos::kNoun: return "NOUN";
    case Pos::kVerb: return "VERB";
    case Pos::kAdj: return "ADJ";
    case Pos::kPron: return "PRON";
    case Pos::kIndecl: return "ADV";
  }
  return "X";
}

inline ConlluSentence export_conllu(const Session& s) {
  const json st = s.effective();
  ConlluSentence out;
  out.comments = {"# sent_id = " + s.id, "# text = " + s.text, "# script = " + std::string(to_string(s.script))};
  const auto& tokens = st["tokens"];
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ConlluToken t;
    t[conllu::kId] = std::to_string(i + 1);
    t[conllu::kForm] = tokens[i].get<std::string>();
    if (st.contains("morph")) {
      const auto& m = st["morph"][i];
      const auto tag = MorphTag::parse(m["tag"].get<std::string>());
      t[conllu::kLemma] = m["lemma"].get<std::string>();
      t[conllu::kUpos] = std::string(upos_of(tag));
      t[conllu::kXpos] = tag.spec();
    }
    if (st.contains("parse")) {
      t[conllu::kHead] = std::to_string(st["parse"]["heads"][i].get<std::size_t>());
      t[conllu::kDeprel] = st["parse"]["labels"][i].get<std::string>();
    }
    if (st.contains("compound")) {
      for (const auto& c : st["compound"]) {
        if (c["token"].get<std::size_t>() == i) t[conllu::kMisc] = "Compound=" + c["label"].get<std::string>();
      }
    }
    out.tokens.push_back(std::move(t));
  }
  return out;
}

inline constexpr int kExportSchemaVersion = 1;

inline json export_json(const Session& s) {
  json j = s.effective();
  json cs = json::array();
  for (const auto& c : s.corrections) cs.push_back(c.to_json());
  j["schema_version"] = kExportSchemaVersion;
  j["session"] = s.id;
  j["status"] = to_string(s.status);
  j["corrections"] = cs;
  return j;
}

class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }

  Session create(const std::string& text, Script script, json predictions) {
    Session s;
    s.id = new_session_id();
    s.text = text;
    s.script = script;
    s.predictions = std::move(predictions);
    s.created = s.updated = utc_now();
    auto lock = lock_session(s.id);
    append(s.id, {{"event", "created"},
                  {"at", s.created},
                  {"id", s.id},
                  {"text", s.text},
                  {"script", to_string(script)},
                  {"predictions", s.predictions}});
    std::lock_guard g(mu_);
    cache_[s.id] = s;
    return s;
  }

  Session get(const std::string& id) {
    auto lock = lock_session(id);
    return load_locked(id);
  }

  Session correct(const std::string& id, Task task, json body, const std::string& note, const CorrectionContext& ctx) {
    auto lock = lock_session(id);
    Session s = load_locked(id);
    if (s.status == SessionStatus::kFinalized) throw Error(ErrorCode::kSessionFinalized, id);
    json state = s.effective();
    apply_correction(state, task, body, &ctx);
    CorrectionRecord r{s.corrections.size() + 1, task, body, note, utc_now()};
    append(id, {{"event", "correction"},
                {"at", r.at},
                {"seq", r.seq},
                {"task", to_string(task)},
                {"correction", body},
                {"note", note}});
    s.corrections.push_back(std::move(r));
    s.updated = s.corrections.back().at;
    store(s);
    return s;
  }

  Session finalize(const std::string& id) {
    auto lock = lock_session(id);
    Session s = load_locked(id);
    if (s.status == SessionStatus::kFinalized) throw Error(ErrorCode::kSessionFinalized, id);
    s.status = SessionStatus::kFinalized;
    s.updated = utc_now();
    append(id, {{"event", "finalized"}, {"at", s.updated}});
    store(s);
    return s;
  }

  // Rebuilds a session from its log, bypassing the cache.
  Session replay(const std::string& id) const {
    if (!valid_session_id(id)) throw Error(ErrorCode::kSessionNotFound, id);
    std::ifstream in(path_of(id));
    if (!in) throw Error(ErrorCode::kSessionNotFound, id);
    Session s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const json e = json::parse(line);
        const auto kind = e.at("event").get<std::string>();
        if (kind == "created") {
          s.id = e.at("id").get<std::string>();
          s.text = e.at("text").get<std::string>();
          s.script = parse_script(e.at("script").get<std::string>());
          s.predictions = e.at("predictions");
          s.created = s.updated = e.at("at").get<std::string>();
        } else if (kind == "correction") {
          s.corrections.push_back({e.at("seq").get<std::size_t>(), parse_task(e.at("task").get<std::string>()),
                                   e.at("correction"), e.at("note").get<std::string>(), e.at("at").get<std::string>()});
          s.updated = s.corrections.back().at;
        } else if (kind == "finalized") {
          s.status = SessionStatus::kFinalized;
          s.updated = e.at("at").get<std::string>();
        } else {
          throw Error(ErrorCode::kCorruptFile, "unknown event '" + kind + "'", lineno);
        }
      } catch (const json::exception& ex) {
        throw Error(ErrorCode::kCorruptFile, std::string("session log: ") + ex.what(), lineno);
      }
    }
    if (s.id != id) throw Error(ErrorCode::kCorruptFile, "session log without creation event");
    return s;
  }

 private:
  std::filesystem::path path_of(const std::string& id) const { return dir_ / (id + ".jsonl"); }

  std::unique_lock<std::mutex> lock_session(const std::string& id) {
    if (!valid_session_id(id)) throw Error(ErrorCode::kSessionNotFound, id);
    std::shared_ptr<std::mutex> m;
    {
      std::lock_guard g(mu_);
      auto& slot = locks_[id];
      if (!slot) slot = std::make_shared<std::mutex>();
      m = slot;
    }
    return std::unique_lock<std::mutex>(*m);
  }

  Session load_locked(const std::string& id) {
    {
      std::lock_guard g(mu_);
      if (auto it = cache_.find(id); it != cache_.end()) return it->second;
    }
    Session s = replay(id);
    store(s);
    return s;
  }

  void store(const Session& s) {
    std::lock_guard g(mu_);
    cache_[s.id] = s;
  }

  void append(const std::string& id, const json& event) {
    std::ofstream out(path_of(id), std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoError, "cannot append to session log " + id);
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "write failed for session log " + id);
  }

  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, Session> cache_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

}  // namespace sshala
