#include "ryno/http_api.hpp"

#include <algorithm>
#include <condition_variable>
#include <ctime>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ryno/error.hpp"
#include "ryno/report.hpp"
#include "ryno/text.hpp"

namespace ryno {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

int status_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Parse:
        case ErrorKind::Validation:
            return 400;
        case ErrorKind::NotFound:
            return 404;
        case ErrorKind::Precondition:
        case ErrorKind::Integrity:
            return 409;
        case ErrorKind::Rejected:
        case ErrorKind::Scoring:
        case ErrorKind::UndefinedCorrelation:
            return 422;
        case ErrorKind::Auth:
        case ErrorKind::MalformedPayload:
            return 502;
        case ErrorKind::Storage:
        case ErrorKind::Timeout:
        case ErrorKind::RateLimit:
        case ErrorKind::Transport:
            return 503;
        default:
            return 500;
    }
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const Error& e) {
    const int status = status_for(e);
    if (status == 503) {
        long secs = 1;
        if (const auto* g = dynamic_cast<const GatewayError*>(&e); g && g->retry_after())
            secs = std::max<long>(1, static_cast<long>((g->retry_after()->count() + 999) / 1000));
        res.set_header("Retry-After", std::to_string(secs));
    }
    if (status >= 500) spdlog::warn("request failed: {}", e.what());
    send_json(res, status, {{"error", to_string(e.kind())}, {"message", e.what()}, {"retryable", e.retryable()}});
}

json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) throw ValidationError("request body must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
    }
}

template <typename T>
T field(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null()) throw ValidationError(std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field '") + key + "' has the wrong type");
    }
}

// "YYYY-MM-DD" (start of that UTC day) or epoch milliseconds.
std::int64_t parse_time(const std::string& s, const char* name, bool end_of_day) {
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        return std::stoll(s);
    std::tm tm{};
    if (s.size() == 10 && strptime(s.c_str(), "%Y-%m-%d", &tm)) {
        const std::int64_t day = static_cast<std::int64_t>(timegm(&tm)) * 1000;
        return end_of_day ? day + 86'400'000 : day;
    }
    throw ValidationError(std::string("query '") + name + "': expected YYYY-MM-DD or epoch milliseconds");
}

ExportFilter filter_of(const httplib::Request& req) {
    ExportFilter f;
    if (req.has_param("campaign_id")) f.campaign_id = req.get_param_value("campaign_id");
    if (req.has_param("from")) f.from_ms = parse_time(req.get_param_value("from"), "from", false);
    // a bare date for `to` includes that whole day
    if (req.has_param("to")) f.to_ms = parse_time(req.get_param_value("to"), "to", true);
    return f;
}

json events_json(const std::vector<EventRecord>& events) {
    json a = json::array();
    for (const auto& e : events) a.push_back(e);
    return a;
}

json item_json(const assessment::NextItem& next) {
    if (std::holds_alternative<assessment::SurveyDone>(next)) return json{{"done", true}, {"item", nullptr}};
    const auto& item = std::get<assessment::InGameItem>(next);
    json options = json::array();
    for (std::size_t i = 0; i < item.options.size(); ++i)
        options.push_back({{"option", i + 1}, {"label", item.options[i].label}});
    return json{{"done", false}, {"item", {{"id", item.id}, {"npc_text", item.npc_text}, {"options", options}}}};
}

}  // namespace

struct HttpApi::Impl {
    std::shared_ptr<SessionService> service;
    HttpApiOptions options;
    httplib::Server server;
    std::mutex sweep_mutex;
    std::condition_variable sweep_cv;

    // Wraps a handler with auth and error translation.
    httplib::Server::Handler guard(std::function<void(const httplib::Request&, httplib::Response&)> fn,
                                   bool open = false) {
        return [this, fn = std::move(fn), open](const httplib::Request& req, httplib::Response& res) {
            if (!open && !options.research_token.empty() &&
                req.get_header_value("Authorization") != "Bearer " + options.research_token) {
                send_json(res, 401, {{"error", "auth"}, {"message", "missing or wrong research token"},
                                     {"retryable", false}});
                return;
            }
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_error(res, e);
            } catch (const std::exception& e) {
                spdlog::error("unhandled: {}", e.what());
                send_json(res, 500, {{"error", "internal"}, {"message", e.what()}, {"retryable", false}});
            }
        };
    }

    void routes() {
        server.Get("/health", guard(
                                  [this](const httplib::Request&, httplib::Response& res) {
                                      const auto& eng = service->engine();
                                      send_json(res, 200,
                                                {{"status", "ready"},
                                                 {"campaign_id", eng.campaign().id},
                                                 {"levels", eng.campaign().level_count()},
                                                 {"sessions", service->session_ids().size()}});
                                  },
                                  true));

        server.Post("/sessions", guard([this](const httplib::Request& req, httplib::Response& res) {
            const json body = body_of(req);
            const auto participant = field<std::string>(body, "participant_id");
            std::uint64_t seed = body.contains("seed") ? field<std::uint64_t>(body, "seed") : 0;
            if (body.contains("campaign_id") &&
                field<std::string>(body, "campaign_id") != service->engine().campaign().id)
                throw NotFound("campaign '" + body["campaign_id"].get<std::string>() + "' is not served here");
            std::optional<std::string> id;
            if (body.contains("session_id")) id = field<std::string>(body, "session_id");
            auto t = service->create_session(participant, seed, id);
            send_json(res, 201, {{"session_id", t.state.session_id}, {"state", t.state}, {"events", events_json(t.events)}});
        }));

        server.Get("/sessions/:id", guard([this](const httplib::Request& req, httplib::Response& res) {
            auto snap = service->snapshot(req.path_params.at("id"));
            send_json(res, 200, {{"state", snap.state}, {"events", events_json(snap.events)}});
        }));

        server.Get("/sessions/:id/transcript", guard([this](const httplib::Request& req, httplib::Response& res) {
            res.set_content(render_transcript(service->state(req.path_params.at("id"))), "text/plain; charset=utf-8");
        }));

        server.Post("/sessions/:id/messages", guard([this](const httplib::Request& req, httplib::Response& res) {
            const json body = body_of(req);
            auto r = service->post_message(req.path_params.at("id"), field<std::string>(body, "text"));
            send_json(res, 200, {{"reply", r.reply},
                                 {"trigger_fired", r.trigger_fired},
                                 {"state", r.state},
                                 {"events", events_json(r.events)}});
        }));

        server.Post("/sessions/:id/advance", guard([this](const httplib::Request& req, httplib::Response& res) {
            const json body = body_of(req);
            std::optional<Phase> from;
            if (body.contains("from")) {
                try {
                    from = parse_phase(field<std::string>(body, "from"));
                } catch (const ParseError& e) {
                    throw ValidationError(std::string("field 'from': ") + e.what());
                }
            }
            auto r = service->advance(req.path_params.at("id"), from);
            send_json(res, 200, {{"changed", r.changed}, {"state", r.state}, {"events", events_json(r.events)}});
        }));

        server.Get("/sessions/:id/survey/current", guard([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, item_json(service->current_item(req.path_params.at("id"))));
        }));

        server.Post("/sessions/:id/survey/answers", guard([this](const httplib::Request& req, httplib::Response& res) {
            const json body = body_of(req);
            const auto& id = req.path_params.at("id");
            auto t = service->answer(id, field<std::string>(body, "item_id"), field<int>(body, "option"));
            send_json(res, 200, {{"state", t.state},
                                 {"events", events_json(t.events)},
                                 {"next", item_json(assessment::next_ingame_item(t.state, service->engine().ingame_survey()))}});
        }));

        server.Post("/responses", guard([this](const httplib::Request& req, httplib::Response& res) {
            assessment::ResponseRecord record;
            try {
                record = body_of(req).get<assessment::ResponseRecord>();
            } catch (const json::exception& e) {
                throw ValidationError(std::string("response record: ") + e.what());
            }
            service->upload_response(record);
            send_json(res, 201, {{"stored", true}, {"participant_id", record.participant_id}});
        }));

        server.Get("/export", guard([this](const httplib::Request& req, httplib::Response& res) {
            const auto filter = filter_of(req);
            const std::string format = req.has_param("format") ? req.get_param_value("format") : "csv";
            if (format == "responses") {
                res.set_content(service->export_responses_csv(filter), "text/csv");
                return;
            }
            auto ds = service->export_dataset(filter);
            if (format == "csv") {
                res.set_content(stats::dataset_to_csv(ds.rows), "text/csv");
            } else if (format == "exclusions") {
                res.set_content(stats::exclusions_to_csv(ds.exclusions), "text/csv");
            } else if (format == "json") {
                json ex = json::array();
                for (const auto& e : ds.exclusions) ex.push_back(e);
                send_json(res, 200, {{"columns", stats::dataset_columns()},
                                     {"csv", stats::dataset_to_csv(ds.rows)},
                                     {"row_count", ds.rows.size()},
                                     {"exclusions", ex}});
            } else {
                throw ValidationError("format: expected csv, json, exclusions or responses");
            }
        }));

        server.Get("/report", guard([this](const httplib::Request& req, httplib::Response& res) {
            auto ds = service->export_dataset(filter_of(req));
            auto rep = stats::correlation_report(ds.rows);
            const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
            if (format == "text") res.set_content(stats::render_report_text(rep), "text/plain; charset=utf-8");
            else if (format == "json") send_json(res, 200, stats::report_to_json(rep));
            else throw ValidationError("format: expected json or text");
        }));

        server.Get("/report/scatter", guard([this](const httplib::Request& req, httplib::Response& res) {
            auto ds = service->export_dataset(filter_of(req));
            auto rep = stats::correlation_report(ds.rows);
            const std::string wave = req.has_param("wave") ? req.get_param_value("wave") : "post";
            if (wave != "pre" && wave != "post") throw ValidationError("wave: expected pre or post");
            res.set_content(stats::scatter_csv(wave == "pre" ? rep.scatter_pre : rep.scatter_post), "text/csv");
        }));
    }
};

HttpApi::HttpApi(std::shared_ptr<SessionService> service, HttpApiOptions options) : impl_(std::make_unique<Impl>()) {
    if (!service) throw ConfigError("http api: missing session service");
    impl_->service = std::move(service);
    impl_->options = std::move(options);
    const std::size_t threads = std::max<std::size_t>(1, impl_->options.threads);
    impl_->server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    impl_->routes();
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        if (port_ < 0) throw ConfigError("listen: cannot bind " + host + " to an ephemeral port");
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw ConfigError("listen: cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    return port_;
}

void HttpApi::run() {
    if (port_ < 0) throw PreconditionError("http api: bind() before run()");
    stopping_ = false;
    sweeper_thread_ = std::thread([this] {
        std::unique_lock lock(impl_->sweep_mutex);
        while (!stopping_) {
            impl_->sweep_cv.wait_for(lock, impl_->options.sweep_interval);
            if (stopping_) break;
            lock.unlock();
            try {
                impl_->service->expire_idle();
            } catch (const std::exception& e) {
                spdlog::warn("idle sweep failed: {}", e.what());
            }
            lock.lock();
        }
    });
    spdlog::debug("listening on port {}", port_);
    impl_->server.listen_after_bind();
}

void HttpApi::start() {
    server_thread_ = std::thread([this] { run(); });
    impl_->server.wait_until_ready();
}

void HttpApi::stop() {
    {
        std::lock_guard lock(impl_->sweep_mutex);
        stopping_ = true;
    }
    impl_->sweep_cv.notify_all();
    impl_->server.stop();
    if (server_thread_.joinable()) server_thread_.join();
    if (sweeper_thread_.joinable()) sweeper_thread_.join();
}

}  // namespace ryno
