#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ryno/error.hpp"
#include "ryno/gateway.hpp"
#include "ryno/text.hpp"

namespace ryno {

using nlohmann::json;

std::string request_subject(const ChatRequest& request) {
    if (request.purpose == Purpose::Dialogue) return request.user_text;
    std::string_view prompt = request.user_text;
    auto pos = prompt.rfind("Question:");
    if (pos == std::string_view::npos) return std::string(prompt);
    std::string_view slot = prompt.substr(pos + 9);
    auto answer = slot.rfind("Answer:");
    if (answer != std::string_view::npos) slot = slot.substr(0, answer);
    return std::string(text::trim(slot));
}

bool MockRule::matches(const ChatRequest& request, std::size_t ordinal) const {
    if (purpose && *purpose != request.purpose) return false;
    if (index && *index != ordinal) return false;
    if (contains && !text::contains_ci(request_subject(request), *contains)) return false;
    if (context_contains) {
        const std::string context = request.purpose == Purpose::Classification
                                        ? request.user_text
                                        : request.system_text + "\n" + request.context_text;
        if (!text::contains_ci(context, *context_contains)) return false;
    }
    return true;
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {}

ChatResponse MockBackend::complete(const ChatRequest& request) {
    request.validate();
    std::lock_guard lock(mutex_);
    const std::size_t ordinal = ordinal_++;
    for (const auto& rule : script_.rules) {
        if (rule.matches(request, ordinal)) {
            return ChatResponse{rule.reply, std::chrono::milliseconds(0), backend_id(), false};
        }
    }
    ++fallbacks_;
    spdlog::info("mock backend: no rule matched request #{} ({}): '{}'", ordinal,
                 to_string(request.purpose), request.user_text);
    return ChatResponse{script_.fallback, std::chrono::milliseconds(0), backend_id(), false};
}

std::size_t MockBackend::requests_seen() const {
    std::lock_guard lock(mutex_);
    return ordinal_;
}

std::size_t MockBackend::fallbacks_served() const {
    std::lock_guard lock(mutex_);
    return fallbacks_;
}

namespace {

Purpose parse_purpose(const std::string& s) {
    if (s == "dialogue") return Purpose::Dialogue;
    if (s == "classification") return Purpose::Classification;
    throw ParseError("unknown purpose '" + s + "'");
}

}  // namespace

MockScript parse_mock_script(std::string_view document) {
    MockScript script;
    try {
        json doc = json::parse(document);
        const json& rules = doc.is_array() ? doc : doc.at("rules");
        if (doc.is_object() && doc.contains("fallback")) script.fallback = doc.at("fallback").get<std::string>();
        for (const auto& r : rules) {
            MockRule rule;
            if (r.contains("contains")) rule.contains = r.at("contains").get<std::string>();
            if (r.contains("context_contains")) rule.context_contains = r.at("context_contains").get<std::string>();
            if (r.contains("index")) rule.index = r.at("index").get<std::size_t>();
            if (r.contains("purpose")) rule.purpose = parse_purpose(r.at("purpose").get<std::string>());
            rule.reply = r.at("reply").get<std::string>();
            script.rules.push_back(std::move(rule));
        }
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed mock script: ") + ex.what());
    }
    if (script.rules.empty()) throw ValidationError("mock script has no rules");
    return script;
}

MockScript load_mock_script_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open mock script '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_mock_script(ss.str());
}

std::string serialize_mock_script(const MockScript& script) {
    json rules = json::array();
    for (const auto& r : script.rules) {
        json j;
        if (r.index) j["index"] = *r.index;
        if (r.purpose) j["purpose"] = std::string(to_string(*r.purpose));
        if (r.contains) j["contains"] = *r.contains;
        if (r.context_contains) j["context_contains"] = *r.context_contains;
        j["reply"] = r.reply;
        rules.push_back(std::move(j));
    }
    return json{{"fallback", script.fallback}, {"rules", rules}}.dump(2) + "\n";
}

MockScript origin_demonstration_script() {
    MockScript script;
    auto classify = [&](std::string q, std::string answer) {
        MockRule r;
        r.purpose = Purpose::Classification;
        r.contains = std::move(q);
        r.reply = std::move(answer);
        script.rules.push_back(std::move(r));
    };
    classify("Can you recollect your place of origin?", "True");
    classify("Where do you think am I?", "False");
    classify("Could you jog your memory about the place you come from?", "True");
    classify("How do you think?", "False");
    MockRule chat;
    chat.purpose = Purpose::Dialogue;
    chat.reply = "I... fragments of a red sky. Does that mean anything to you?";
    script.rules.push_back(std::move(chat));
    script.fallback = "False";
    return script;
}

RecordingBackend::RecordingBackend(std::shared_ptr<ChatBackend> inner) : inner_(std::move(inner)) {}

ChatResponse RecordingBackend::complete(const ChatRequest& request) {
    // Serialized so the recorded order equals the order the inner backend saw.
    std::lock_guard lock(mutex_);
    ChatResponse response = inner_->complete(request);
    exchanges_.emplace_back(request, response.text);
    return response;
}

MockScript RecordingBackend::to_script() const {
    std::lock_guard lock(mutex_);
    MockScript script;
    for (std::size_t i = 0; i < exchanges_.size(); ++i) {
        MockRule r;
        r.index = i;
        r.reply = exchanges_[i].second;
        script.rules.push_back(std::move(r));
    }
    return script;
}

std::vector<std::pair<ChatRequest, std::string>> RecordingBackend::exchanges() const {
    std::lock_guard lock(mutex_);
    return exchanges_;
}

}  // namespace ryno
