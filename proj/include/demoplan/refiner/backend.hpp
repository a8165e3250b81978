#pragma once

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "demoplan/core/errors.hpp"
#include "demoplan/core/transform.hpp" // Eigen must precede httplib, whose resolv.h defines _res

#include <httplib.h>
#include <json.hpp>

namespace demoplan::refiner {

/// One chat-completion call: the static system text, the user message and
/// the bare request that the user message embeds.
struct Prompt {
    std::string system;
    std::string user;
    std::string request;
};

class LLMBackend {
public:
    virtual ~LLMBackend() = default;
    virtual std::string complete(const Prompt& prompt) = 0;
    virtual std::string name() const = 0;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string getenv_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

} // namespace detail

/// Deterministic mock: the first rule whose pattern occurs in the request
/// (case-insensitive) supplies the response.
class ScriptedBackend : public LLMBackend {
public:
    struct Rule {
        std::string pattern;
        std::string response;
    };

    explicit ScriptedBackend(std::vector<Rule> rules, std::optional<std::string> fallback = std::nullopt)
        : rules_(std::move(rules)), fallback_(std::move(fallback)) {
        for (const auto& r : rules_) compiled_.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::icase);
    }

    /// {"rules": [{"match": regex, "response": text | "response_file": path}], "default": text}
    /// Response files are resolved against the script's directory.
    static ScriptedBackend from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
        if (!j.is_object() || !j.contains("rules") || !j["rules"].is_array())
            throw SchemaError("mock script needs a \"rules\" array");
        std::vector<Rule> rules;
        for (const auto& r : j["rules"]) {
            if (!r.contains("match") || !r["match"].is_string()) throw SchemaError("mock rule needs a \"match\" regex");
            Rule rule{r["match"].get<std::string>(), {}};
            if (r.contains("response")) rule.response = r["response"].get<std::string>();
            else if (r.contains("response_file")) rule.response = detail::read_file(base / r["response_file"].get<std::string>());
            else throw SchemaError("mock rule \"" + rule.pattern + "\" has no response");
            rules.push_back(std::move(rule));
        }
        std::optional<std::string> fallback;
        if (j.contains("default")) fallback = j["default"].get<std::string>();
        try {
            return ScriptedBackend(std::move(rules), std::move(fallback));
        } catch (const std::regex_error& e) {
            throw SchemaError(std::string("mock script has an invalid regex: ") + e.what());
        }
    }

    static ScriptedBackend load(const std::filesystem::path& path) {
        try {
            return from_json(nlohmann::json::parse(detail::read_file(path)), path.parent_path());
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError("mock script " + path.string() + ": " + e.what());
        }
    }

    std::string complete(const Prompt& prompt) override {
        for (std::size_t i = 0; i < rules_.size(); ++i)
            if (std::regex_search(prompt.request, compiled_[i])) return rules_[i].response;
        if (fallback_) return *fallback_;
        throw TransportError("mock backend has no response for \"" + prompt.request + "\"");
    }

    std::string name() const override { return "mock"; }

private:
    std::vector<Rule> rules_;
    std::vector<std::regex> compiled_;
    std::optional<std::string> fallback_;
};

/// Replays recorded transcripts: JSON lines of {"system", "user", "response"}.
/// Identical prompts recorded more than once are answered in recording order.
class ReplayBackend : public LLMBackend {
public:
    ReplayBackend() = default;
    ReplayBackend(ReplayBackend&& other) noexcept : answers_(std::move(other.answers_)) {}

    static ReplayBackend load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open transcript " + path.string());
        ReplayBackend out;
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(std::string("transcript: ") + e.what(), number);
            }
            out.add(j.at("system").get<std::string>(), j.at("user").get<std::string>(), j.at("response").get<std::string>());
        }
        return out;
    }

    void add(const std::string& system, const std::string& user, std::string response) {
        answers_[{system, user}].push_back(std::move(response));
    }

    std::string complete(const Prompt& prompt) override {
        std::lock_guard lock(mutex_);
        auto it = answers_.find({prompt.system, prompt.user});
        if (it == answers_.end() || it->second.empty())
            throw TransportError("transcript has no recorded response for \"" + prompt.request + "\"");
        std::string out = std::move(it->second.front());
        it->second.pop_front();
        return out;
    }

    std::string name() const override { return "replay"; }

private:
    std::map<std::pair<std::string, std::string>, std::deque<std::string>> answers_;
    std::mutex mutex_;
};

/// Forwards to another backend and appends every exchange to a transcript
/// that ReplayBackend can read.
class RecordingBackend : public LLMBackend {
public:
    RecordingBackend(std::shared_ptr<LLMBackend> inner, std::filesystem::path transcript)
        : inner_(std::move(inner)), path_(std::move(transcript)) {}

    std::string complete(const Prompt& prompt) override {
        std::string response = inner_->complete(prompt);
        nlohmann::json line{{"request", prompt.request}, {"system", prompt.system}, {"user", prompt.user}, {"response", response}};
        std::lock_guard lock(mutex_);
        std::ofstream out(path_, std::ios::app);
        if (!out) throw Error("cannot append to transcript " + path_.string());
        out << line.dump() << '\n';
        return response;
    }

    std::string name() const override { return inner_->name() + "+recording"; }

private:
    std::shared_ptr<LLMBackend> inner_;
    std::filesystem::path path_;
    std::mutex mutex_;
};

struct ChatEndpoint {
    std::string url = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key;
    double temperature = 0.0;
    int timeout_seconds = 120;

    /// DEMOPLAN_LLM_ENDPOINT, DEMOPLAN_LLM_MODEL, DEMOPLAN_LLM_API_KEY (or OPENAI_API_KEY).
    static ChatEndpoint from_env() {
        ChatEndpoint e;
        e.url = detail::getenv_or("DEMOPLAN_LLM_ENDPOINT", e.url);
        e.model = detail::getenv_or("DEMOPLAN_LLM_MODEL", e.model);
        e.api_key = detail::getenv_or("DEMOPLAN_LLM_API_KEY", detail::getenv_or("OPENAI_API_KEY", ""));
        return e;
    }
};

/// Client for an OpenAI-compatible chat-completion endpoint.
class OpenAIBackend : public LLMBackend {
public:
    explicit OpenAIBackend(ChatEndpoint endpoint) : endpoint_(std::move(endpoint)) {
        static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
        std::smatch m;
        if (!std::regex_match(endpoint_.url, m, url)) throw ValidationError("bad LLM endpoint URL " + endpoint_.url);
        origin_ = m[1];
        path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
    }

    nlohmann::json request_body(const Prompt& prompt) const {
        return {{"model", endpoint_.model},
                {"temperature", endpoint_.temperature},
                {"messages",
                 {{{"role", "system"}, {"content", prompt.system}}, {{"role", "user"}, {"content", prompt.user}}}}};
    }

    std::string complete(const Prompt& prompt) override {
        httplib::Client client(origin_);
        client.set_connection_timeout(10);
        client.set_read_timeout(endpoint_.timeout_seconds);
        httplib::Headers headers;
        if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
        const auto res = client.Post(path_, headers, request_body(prompt).dump(), "application/json");
        if (!res) throw TransportError("LLM endpoint " + endpoint_.url + " unreachable: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw TransportError("LLM endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
        try {
            const auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("LLM endpoint sent an unexpected body: ") + e.what());
        }
    }

    std::string name() const override { return "openai:" + endpoint_.model; }

private:
    ChatEndpoint endpoint_;
    std::string origin_;
    std::string path_;
};

/// "mock:<script.json>", "replay:<transcript.jsonl>" or "openai".
inline std::shared_ptr<LLMBackend> make_backend(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
    if (kind == "mock") return std::make_shared<ScriptedBackend>(ScriptedBackend::load(arg));
    if (kind == "replay") return std::make_shared<ReplayBackend>(ReplayBackend::load(arg));
    if (kind == "openai") return std::make_shared<OpenAIBackend>(ChatEndpoint::from_env());
    throw ValidationError("unknown backend \"" + spec + "\"; use mock:<script>, replay:<transcript> or openai");
}

} // namespace demoplan::refiner
