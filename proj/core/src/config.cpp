#include "ryno/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ryno/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ryno {

EnvLookup process_environment() {
    return [](std::string_view name) -> std::optional<std::string> {
        const char* v = std::getenv(std::string(name).c_str());
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
}

namespace {

const json* member(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

template <typename T>
void read(const json& obj, const char* key, const std::string& path, T& out) {
    const json* v = member(obj, key);
    if (!v) return;
    try {
        out = v->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + key + ": wrong type (" + std::string(v->type_name()) + ")");
    }
}

void read_ms(const json& obj, const char* key, const std::string& path, std::chrono::milliseconds& out) {
    std::int64_t ms = out.count();
    read(obj, key, path, ms);
    if (ms < 0) throw ConfigError(path + key + ": must be >= 0");
    out = std::chrono::milliseconds(ms);
}

std::string resolve(const std::string& p, const std::string& base) {
    if (p.empty()) return p;
    fs::path path(p);
    if (path.is_absolute() || base.empty()) return path.lexically_normal().string();
    return (fs::path(base) / path).lexically_normal().string();
}

void check_known(const json& obj, std::initializer_list<const char*> keys, const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : keys) ok = ok || it.key() == k;
        if (!ok) throw ConfigError(path + it.key() + ": unknown field");
    }
}

void require_file(const std::string& field, const std::string& path) {
    if (path.empty()) throw ConfigError(field + ": required");
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw ConfigError(field + ": cannot read " + path);
}

}  // namespace

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535) throw ConfigError("listen.port: out of range");
    if (host.empty()) throw ConfigError("listen.host: required");
    if (threads == 0) throw ConfigError("listen.threads: must be > 0");
    require_file("campaign", campaign_path);
    require_file("corpus", corpus_path);
    if (instrument_dir.empty()) throw ConfigError("instruments: required");
    std::error_code ec;
    if (!fs::is_directory(instrument_dir, ec)) throw ConfigError("instruments: not a directory: " + instrument_dir);
    if (data_dir.empty()) throw ConfigError("data_dir: required");
    if (backend == BackendKind::Mock && !mock_script.empty()) require_file("backend.mock.script", mock_script);
    if (backend == BackendKind::Live) {
        if (live_base_url.empty()) throw ConfigError("backend.live.base_url: required");
        if (api_key.empty()) throw ConfigError("backend.live: RYNO_API_KEY is not set");
    }
    if (narrative.prompt_token_budget == 0) throw ConfigError("budgets.prompt_tokens: must be > 0");
    if (narrative.story_word_budget == 0) throw ConfigError("budgets.story_words: must be > 0");
    if (retry.max_retries < 0) throw ConfigError("retry.max_retries: must be >= 0");
    if (retry.multiplier < 1.0) throw ConfigError("retry.multiplier: must be >= 1");
    static const char* levels[] = {"trace", "debug", "info", "warn", "error", "critical", "off"};
    bool level_ok = false;
    for (const char* l : levels) level_ok = level_ok || log_level == l;
    if (!level_ok) throw ConfigError("log_level: unknown level '" + log_level + "'");
}

ServiceConfig parse_service_config(std::string_view document, const std::string& base_dir, const EnvLookup& env) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: expected an object");
    check_known(doc, {"listen", "backend", "campaign", "corpus", "instruments", "data_dir", "budgets", "retry",
                      "idle_timeout_ms", "log_level", "model"},
                "");

    ServiceConfig c;
    if (const json* l = member(doc, "listen")) {
        check_known(*l, {"host", "port", "threads"}, "listen.");
        read(*l, "host", "listen.", c.host);
        read(*l, "port", "listen.", c.port);
        read(*l, "threads", "listen.", c.threads);
    }
    if (const json* b = member(doc, "backend")) {
        check_known(*b, {"kind", "mock", "live"}, "backend.");
        std::string kind = "mock";
        read(*b, "kind", "backend.", kind);
        if (kind == "mock") c.backend = BackendKind::Mock;
        else if (kind == "live") c.backend = BackendKind::Live;
        else throw ConfigError("backend.kind: expected 'mock' or 'live', got '" + kind + "'");
        if (const json* m = member(*b, "mock")) {
            check_known(*m, {"script"}, "backend.mock.");
            read(*m, "script", "backend.mock.", c.mock_script);
            c.mock_script = resolve(c.mock_script, base_dir);
        }
        if (const json* lv = member(*b, "live")) {
            check_known(*lv, {"base_url", "model"}, "backend.live.");
            read(*lv, "base_url", "backend.live.", c.live_base_url);
            read(*lv, "model", "backend.live.", c.live_model);
        }
    }
    read(doc, "campaign", "", c.campaign_path);
    read(doc, "corpus", "", c.corpus_path);
    read(doc, "instruments", "", c.instrument_dir);
    read(doc, "data_dir", "", c.data_dir);
    c.campaign_path = resolve(c.campaign_path, base_dir);
    c.corpus_path = resolve(c.corpus_path, base_dir);
    c.instrument_dir = resolve(c.instrument_dir, base_dir);
    c.data_dir = resolve(c.data_dir, base_dir);

    if (const json* bu = member(doc, "budgets")) {
        check_known(*bu, {"prompt_tokens", "story_words", "max_reply_tokens"}, "budgets.");
        read(*bu, "prompt_tokens", "budgets.", c.narrative.prompt_token_budget);
        read(*bu, "story_words", "budgets.", c.narrative.story_word_budget);
        read(*bu, "max_reply_tokens", "budgets.", c.narrative.max_reply_tokens);
    }
    if (const json* m = member(doc, "model")) {
        check_known(*m, {"dialogue_temperature", "timeout_ms"}, "model.");
        read(*m, "dialogue_temperature", "model.", c.narrative.dialogue_temperature);
        read_ms(*m, "timeout_ms", "model.", c.narrative.timeout);
    }
    if (const json* r = member(doc, "retry")) {
        check_known(*r, {"max_retries", "initial_backoff_ms", "multiplier", "max_backoff_ms", "rate_limit_backoff_ms"},
                    "retry.");
        read(*r, "max_retries", "retry.", c.retry.max_retries);
        read_ms(*r, "initial_backoff_ms", "retry.", c.retry.initial_backoff);
        read(*r, "multiplier", "retry.", c.retry.multiplier);
        read_ms(*r, "max_backoff_ms", "retry.", c.retry.max_backoff);
        read_ms(*r, "rate_limit_backoff_ms", "retry.", c.retry.rate_limit_backoff);
    }
    read_ms(doc, "idle_timeout_ms", "", c.idle_timeout);
    read(doc, "log_level", "", c.log_level);

    if (auto v = env("RYNO_API_KEY")) c.api_key = *v;
    if (auto v = env("RYNO_RESEARCH_TOKEN")) c.research_token = *v;
    if (auto v = env("RYNO_BASE_URL")) c.live_base_url = *v;
    if (auto v = env("RYNO_MODEL")) c.live_model = *v;
    c.narrative.model_id = c.backend == BackendKind::Live ? c.live_model : "mock";

    c.validate();
    return c;
}

ServiceConfig load_service_config(const std::string& path, const EnvLookup& env) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_service_config(buf.str(), fs::path(path).parent_path().string(), env);
}

Runtime build_runtime(const ServiceConfig& config, std::shared_ptr<ChatBackend> backend, Clock clock) {
    config.validate();
    if (!clock) clock = system_clock();

    if (!backend) {
        if (config.backend == BackendKind::Mock) {
            backend = std::make_shared<MockBackend>(config.mock_script.empty() ? origin_demonstration_script()
                                                                               : load_mock_script_file(config.mock_script));
        } else {
            HttpBackendConfig hc;
            hc.base_url = config.live_base_url;
            hc.api_key = config.api_key;
            hc.model_id = config.live_model;
            hc.retry = config.retry;
            backend = std::make_shared<HttpChatBackend>(hc);
        }
    }

    auto registry = assessment::InstrumentRegistry::load_directory(config.instrument_dir);
    auto campaign = std::make_shared<const CampaignSpec>(load_campaign_file(config.campaign_path));
    validate_campaign(*campaign, registry.ids());
    auto corpus = std::make_shared<const WorldCorpus>(load_corpus_file(config.corpus_path));
    auto ingame = std::make_shared<const assessment::SurveyInstrument>(registry.get(campaign->ingame_survey_ref));

    Runtime rt;
    rt.backend = backend;
    rt.store = std::make_shared<FileEventStore>(config.data_dir);
    rt.engine = std::make_shared<const NarrativeEngine>(campaign, corpus, backend, ingame, config.narrative, clock);
    rt.service = std::make_shared<SessionService>(rt.engine, std::move(registry), rt.store, clock,
                                                  ServiceOptions{config.idle_timeout});
    rt.service->recover();
    return rt;
}

}  // namespace ryno
