#pragma once

// Rule-based help bot. A pattern is a case-insensitive keyword, or a
// regular expression when prefixed with "re:". Rules are tried in file
// order; the first rule with any matching pattern answers.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "sanskritshala/error.hpp"

namespace sshala {

struct ChatRule {
  std::string id;
  std::vector<std::string> patterns;
  std::string response;
  std::vector<std::string> links;
};

struct ChatReply {
  std::optional<std::string> rule_id;  // absent for the fallback
  std::string response;
  std::vector<std::string> links;

  nlohmann::json to_json() const {
    return {{"rule", rule_id ? nlohmann::json(*rule_id) : nlohmann::json(nullptr)},
            {"response", response},
            {"links", links}};
  }
};

class ChatBot {
 public:
  ChatBot() = default;
  ChatBot(std::vector<ChatRule> rules, std::string fallback) : fallback_(std::move(fallback)) {
    for (auto& r : rules) add(std::move(r));
  }

  // {"fallback": "...", "rules": [{"id", "patterns", "response", "links"?}]}
  static ChatBot from_json(const nlohmann::json& j) {
    try {
      std::vector<ChatRule> rules;
      for (const auto& r : j.at("rules")) {
        rules.push_back({r.at("id").get<std::string>(), r.at("patterns").get<std::vector<std::string>>(),
                         r.at("response").get<std::string>(),
                         r.value("links", std::vector<std::string>{})});
      }
      return ChatBot(std::move(rules), j.at("fallback").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, std::string("chat rules: ") + e.what());
    }
  }

  static ChatBot load(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + p.string());
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParseError, std::string("chat rules: ") + e.what());
    }
  }

  const std::vector<ChatRule>& rules() const { return rules_; }
  const std::string& fallback() const { return fallback_; }

  ChatReply respond(const std::string& message) const {
    if (!message.empty()) {
      const std::string low = lower(message);
      for (std::size_t r = 0; r < rules_.size(); ++r) {
        for (const auto& m : matchers_[r]) {
          if (m.regex ? std::regex_search(message, *m.regex) : low.find(m.keyword) != std::string::npos) {
            return {rules_[r].id, rules_[r].response, rules_[r].links};
          }
        }
      }
    }
    return {std::nullopt, fallback_, {}};
  }

 private:
  struct Matcher {
    std::string keyword;
    std::optional<std::regex> regex;
  };

  static std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  }

  void add(ChatRule r) {
    if (r.patterns.empty()) throw Error(ErrorCode::kInvalidArgument, "rule '" + r.id + "' has no patterns");
    std::vector<Matcher> ms;
    for (const auto& p : r.patterns) {
      if (p.starts_with("re:")) {
        try {
          ms.push_back({{}, std::regex(p.substr(3), std::regex::ECMAScript | std::regex::icase)});
        } catch (const std::regex_error& e) {
          throw Error(ErrorCode::kParseError, "rule '" + r.id + "': bad regex '" + p.substr(3) + "'");
        }
      } else {
        if (p.empty()) throw Error(ErrorCode::kInvalidArgument, "rule '" + r.id + "' has an empty keyword");
        ms.push_back({lower(p), std::nullopt});
      }
    }
    matchers_.push_back(std::move(ms));
    rules_.push_back(std::move(r));
  }

  std::vector<ChatRule> rules_;
  std::vector<std::vector<Matcher>> matchers_;
  std::string fallback_;
};

}  // namespace sshala
