#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include "ryno/session_service.hpp"

namespace ryno {

struct HttpApiOptions {
    std::string research_token;  // empty: no Authorization check
    std::size_t threads = 8;
    // How often idle sessions are swept; ignored when the service has no idle timeout.
    std::chrono::milliseconds sweep_interval{5000};
};

// JSON-over-HTTP front of a SessionService.
//
//   GET  /health
//   POST /sessions                         {participant_id, seed?, campaign_id?}
//   GET  /sessions/{id}                    state + event log
//   GET  /sessions/{id}/transcript         text/plain
//   POST /sessions/{id}/messages           {text}
//   POST /sessions/{id}/advance            {from?}
//   GET  /sessions/{id}/survey/current
//   POST /sessions/{id}/survey/answers     {item_id, option}
//   POST /responses                        ResponseRecord
//   GET  /export?campaign_id=&from=&to=&format=csv|json|exclusions|responses
//   GET  /report?campaign_id=&from=&to=&format=json|text
//   GET  /report/scatter?wave=pre|post
class HttpApi {
public:
    HttpApi(std::shared_ptr<SessionService> service, HttpApiOptions options = {});
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    // Port 0 binds an ephemeral port. Returns the bound port; throws
    // ConfigError when the address cannot be bound.
    int bind(const std::string& host, int port);
    // Serves on the calling thread until stop().
    void run();
    // Serves on a background thread; returns once the listener is ready.
    void start();
    // Stops accepting, lets in-flight requests finish, joins threads.
    void stop();

    int port() const noexcept { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = -1;
    std::thread server_thread_;
    std::thread sweeper_thread_;
    std::atomic<bool> stopping_{false};
};

}  // namespace ryno
