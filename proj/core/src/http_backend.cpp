#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ryno/error.hpp"
#include "ryno/gateway.hpp"

namespace ryno {

using nlohmann::json;

HttpBackendConfig HttpBackendConfig::from_environment(const std::string& key_var,
                                                      const std::string& url_var,
                                                      const std::string& model_var) {
    auto get = [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
    HttpBackendConfig cfg;
    auto key = get(key_var);
    if (!key) throw ConfigError("environment variable " + key_var + " is not set");
    cfg.api_key = *key;
    cfg.base_url = get(url_var).value_or("https://api.openai.com");
    if (auto model = get(model_var)) cfg.model_id = *model;
    return cfg;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
    if (config_.base_url.empty()) throw ConfigError("live backend: base_url is empty");
    if (config_.max_connections == 0) throw ConfigError("live backend: max_connections must be >= 1");
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

HttpChatBackend::~HttpChatBackend() = default;

std::string HttpChatBackend::request_body(const ChatRequest& request) const {
    json messages = json::array();
    std::string system = request.system_text;
    if (!request.context_text.empty()) {
        if (!system.empty()) system += "\n\n";
        system += request.context_text;
    }
    if (!system.empty()) messages.push_back({{"role", "system"}, {"content", system}});
    messages.push_back({{"role", "user"}, {"content", request.user_text}});
    json body{{"model", request.model_id.empty() ? config_.model_id : request.model_id},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_reply_tokens}};
    return body.dump();
}

namespace {

// Errors raised before any response bytes were read.
bool before_response(httplib::Error err) {
    switch (err) {
        case httplib::Error::Connection:
        case httplib::Error::ConnectionTimeout:
        case httplib::Error::BindIPAddress:
        case httplib::Error::SSLConnection:
        case httplib::Error::ProxyConnection:
        case httplib::Error::Write:
            return true;
        default:
            return false;
    }
}

std::optional<std::chrono::milliseconds> parse_retry_after(const httplib::Result& res) {
    if (!res->has_header("Retry-After")) return std::nullopt;
    const auto value = res->get_header_value("Retry-After");
    char* end = nullptr;
    double secs = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || secs < 0) return std::nullopt;
    return std::chrono::milliseconds(static_cast<long long>(secs * 1000.0));
}

ChatResponse parse_completion(const std::string& body, const std::string& backend_id,
                              std::chrono::milliseconds latency) {
    try {
        json doc = json::parse(body);
        const auto& choice = doc.at("choices").at(0);
        std::string text = choice.at("message").at("content").get<std::string>();
        if (text.empty()) throw GatewayError(ErrorKind::MalformedPayload, "backend returned an empty reply");
        bool truncated = choice.value("finish_reason", std::string{}) == "length";
        return ChatResponse{std::move(text), latency, backend_id, truncated};
    } catch (const json::exception& ex) {
        throw GatewayError(ErrorKind::MalformedPayload, std::string("malformed backend payload: ") + ex.what());
    }
}

}  // namespace

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
    request.validate();

    std::unique_lock slot(slots_mutex_);
    slots_cv_.wait(slot, [&] { return in_flight_ < config_.max_connections; });
    ++in_flight_;
    slot.unlock();
    struct Release {
        HttpChatBackend* self;
        ~Release() {
            {
                std::lock_guard lock(self->slots_mutex_);
                --self->in_flight_;
            }
            self->slots_cv_.notify_one();
        }
    } release{this};

    const std::string body = request_body(request);
    httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};

    for (int attempt = 0;; ++attempt) {
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.connect_timeout);
        client.set_read_timeout(request.timeout);
        client.set_write_timeout(request.timeout);

        const auto started = std::chrono::steady_clock::now();
        auto res = client.Post(config_.path, headers, body, "application/json");
        const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);

        if (!res) {
            const auto err = res.error();
            if (before_response(err) && attempt < config_.retry.max_retries) {
                auto wait = config_.retry.backoff_for(attempt + 1);
                spdlog::warn("chat backend transport error ({}); retry {}/{} in {} ms",
                             httplib::to_string(err), attempt + 1, config_.retry.max_retries, wait.count());
                sleeper_(wait);
                continue;
            }
            if (err == httplib::Error::Read) {
                throw GatewayError(ErrorKind::Timeout, "chat backend read failed or timed out after " +
                                                           std::to_string(latency.count()) + " ms");
            }
            throw GatewayError(ErrorKind::Transport,
                               "chat backend unreachable after " + std::to_string(attempt + 1) +
                                   " attempt(s): " + httplib::to_string(err));
        }

        const int status = res->status;
        if (status == 200) return parse_completion(res->body, backend_id(), latency);
        if (status == 401 || status == 403)
            throw GatewayError(ErrorKind::Auth, "chat backend rejected credentials (HTTP " + std::to_string(status) + ")");
        if (status == 429) {
            auto retry_after = parse_retry_after(res).value_or(config_.retry.rate_limit_backoff);
            throw GatewayError(ErrorKind::RateLimit, "chat backend rate limit (HTTP 429)", retry_after);
        }
        if (status == 408 || status == 504)
            throw GatewayError(ErrorKind::Timeout, "chat backend timed out (HTTP " + std::to_string(status) + ")");
        if (status >= 500)
            throw GatewayError(ErrorKind::Transport, "chat backend error (HTTP " + std::to_string(status) + ")");
        throw GatewayError(ErrorKind::MalformedPayload,
                           "chat backend refused the request (HTTP " + std::to_string(status) + ")");
    }
}

}  // namespace ryno
