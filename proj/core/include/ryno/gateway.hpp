#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ryno {

enum class Purpose { Dialogue, Classification };
std::string_view to_string(Purpose p);

struct ChatRequest {
    Purpose purpose = Purpose::Dialogue;
    std::string system_text;
    std::string context_text;
    std::string user_text;
    std::string model_id;
    double temperature = 0.0;        // [0, 2]
    int max_reply_tokens = 256;      // >= 1
    std::chrono::milliseconds timeout{30000};

    // Throws ValidationError on out-of-range temperature or max_reply_tokens.
    void validate() const;
};

struct ChatResponse {
    std::string text;
    std::chrono::milliseconds latency{0};
    std::string backend_id;
    bool truncated = false;
};

// Shareable handle; complete() may be called concurrently.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Throws GatewayError (Timeout, Auth, RateLimit, MalformedPayload,
    // Transport) on failure.
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string backend_id() const = 0;
};

// --- scripted mock -------------------------------------------------------

// Rules match case-insensitively against the request's subject: the
// user_text of a dialogue request, or the text in the final
// "Question: ...\nAnswer:" slot of a classification prompt.
// context_contains looks at everything else (system and context text, or the
// full classification prompt).
struct MockRule {
    std::optional<std::string> contains;
    std::optional<std::string> context_contains;
    std::optional<std::size_t> index;             // zero-based request ordinal
    std::optional<Purpose> purpose;
    std::string reply;

    bool matches(const ChatRequest& request, std::size_t ordinal) const;
};

struct MockScript {
    std::vector<MockRule> rules;
    std::string fallback = "Hmm... I lost the thread there. Could you say that another way?";
};

MockScript parse_mock_script(std::string_view document);
MockScript load_mock_script_file(const std::string& path);
std::string serialize_mock_script(const MockScript& script);

// Deterministic backend: the first matching rule wins; unmatched requests
// get the script's fallback and are logged. A pure function of (script,
// request sequence).
class MockBackend final : public ChatBackend {
public:
    explicit MockBackend(MockScript script);

    ChatResponse complete(const ChatRequest& request) override;
    std::string backend_id() const override { return "mock"; }

    std::size_t requests_seen() const;
    std::size_t fallbacks_served() const;

private:
    MockScript script_;
    mutable std::mutex mutex_;
    std::size_t ordinal_ = 0;
    std::size_t fallbacks_ = 0;
};

// Classifies the four labelled origin demonstrations with their own labels
// and answers every dialogue request with one fixed line.
MockScript origin_demonstration_script();

// Wraps a backend and records every (request, reply) pair so that a live or
// mocked playthrough can be frozen into an index-keyed MockScript.
class RecordingBackend final : public ChatBackend {
public:
    explicit RecordingBackend(std::shared_ptr<ChatBackend> inner);

    ChatResponse complete(const ChatRequest& request) override;
    std::string backend_id() const override { return "recording:" + inner_->backend_id(); }

    MockScript to_script() const;
    std::vector<std::pair<ChatRequest, std::string>> exchanges() const;

private:
    std::shared_ptr<ChatBackend> inner_;
    mutable std::mutex mutex_;
    std::vector<std::pair<ChatRequest, std::string>> exchanges_;
};

// The player utterance inside a classification prompt (text after the last
// "Question:" marker, without the trailing "Answer:"), or user_text for a
// dialogue request.
std::string request_subject(const ChatRequest& request);

// --- live HTTP backend ---------------------------------------------------

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{200};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{5000};
    std::chrono::milliseconds rate_limit_backoff{2000};  // used when retry-after is absent

    std::chrono::milliseconds backoff_for(int attempt) const;  // attempt is 1-based
};

struct HttpBackendConfig {
    std::string base_url;  // e.g. https://api.openai.com
    std::string api_key;
    std::string model_id = "gpt-4";
    std::string path = "/v1/chat/completions";
    RetryPolicy retry;
    std::chrono::milliseconds connect_timeout{5000};
    std::size_t max_connections = 4;

    // Reads credentials from the environment. Variable names are
    // configurable; missing variables raise ConfigError.
    static HttpBackendConfig from_environment(const std::string& key_var = "RYNO_API_KEY",
                                              const std::string& url_var = "RYNO_BASE_URL",
                                              const std::string& model_var = "RYNO_MODEL");
};

// Chat-completions over HTTP(S). Transport failures that happen before any
// response bytes arrive are retried with exponential backoff; anything after
// a response starts is surfaced without retry.
class HttpChatBackend final : public ChatBackend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit HttpChatBackend(HttpBackendConfig config, Sleeper sleeper = {});
    ~HttpChatBackend() override;

    ChatResponse complete(const ChatRequest& request) override;
    std::string backend_id() const override { return "http:" + config_.model_id; }

    // Request body for the wire format; exposed for golden tests.
    std::string request_body(const ChatRequest& request) const;

private:
    HttpBackendConfig config_;
    Sleeper sleeper_;
    std::mutex slots_mutex_;
    std::size_t in_flight_ = 0;
    std::condition_variable_any slots_cv_;
};

}  // namespace ryno
