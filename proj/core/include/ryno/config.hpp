#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "ryno/gateway.hpp"
#include "ryno/narrative.hpp"
#include "ryno/session_service.hpp"

namespace ryno {

enum class BackendKind { Mock, Live };

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::size_t threads = 8;

    BackendKind backend = BackendKind::Mock;
    std::string mock_script;  // empty: the built-in demonstration script
    std::string live_base_url = "https://api.openai.com";
    std::string live_model = "gpt-4";
    std::string api_key;  // environment only
    RetryPolicy retry;

    std::string campaign_path;
    std::string corpus_path;
    std::string instrument_dir;
    std::string data_dir;

    NarrativeOptions narrative;
    std::chrono::milliseconds idle_timeout{0};
    std::string research_token;  // environment only; empty disables the check
    std::string log_level = "info";

    // Throws ConfigError naming the first bad field. Checks that the
    // referenced files exist; the data directory is checked by the store.
    void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;
EnvLookup process_environment();

// Relative paths in the document resolve against `base_dir`. Environment:
// RYNO_API_KEY, RYNO_RESEARCH_TOKEN (credentials are never read from the
// file), plus RYNO_BASE_URL and RYNO_MODEL overrides for the live backend.
ServiceConfig parse_service_config(std::string_view document, const std::string& base_dir,
                                   const EnvLookup& env = process_environment());
ServiceConfig load_service_config(const std::string& path, const EnvLookup& env = process_environment());

// Everything a server needs, wired from a config.
struct Runtime {
    std::shared_ptr<ChatBackend> backend;
    std::shared_ptr<EventStore> store;
    std::shared_ptr<const NarrativeEngine> engine;
    std::shared_ptr<SessionService> service;
};

// Loads campaign, corpus and instruments, opens the store and replays it.
// `backend` and `clock` override what the config would build.
Runtime build_runtime(const ServiceConfig& config, std::shared_ptr<ChatBackend> backend = nullptr,
                      Clock clock = nullptr);

}  // namespace ryno
