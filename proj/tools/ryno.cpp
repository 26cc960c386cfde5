// ryno: command-line front end for the engine, service and analysis pipeline.

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ryno/assessment.hpp"
#include "ryno/campaign.hpp"
#include "ryno/config.hpp"
#include "ryno/corpus.hpp"
#include "ryno/dataset.hpp"
#include "ryno/error.hpp"
#include "ryno/event_store.hpp"
#include "ryno/gateway.hpp"
#include "ryno/http_api.hpp"
#include "ryno/narrative.hpp"
#include "ryno/prompts.hpp"
#include "ryno/report.hpp"
#include "ryno/session.hpp"
#include "ryno/session_service.hpp"
#include "ryno/stats.hpp"
#include "ryno/text.hpp"

using nlohmann::json;
using namespace ryno;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::istringstream in(slurp(path));
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!text::trim(line).empty()) lines.emplace_back(text::trim(line));
    return lines;
}

struct DataPaths {
    std::string campaign = RYNO_DEFAULT_DATA "/campaign/default_campaign.json";
    std::string corpus = RYNO_DEFAULT_DATA "/corpus/world.txt";
    std::string instruments = RYNO_DEFAULT_DATA "/instruments";
    std::string script = RYNO_DEFAULT_DATA "/mock/playthrough_script.json";

    void add_to(CLI::App* app, bool with_script) {
        app->add_option("--campaign", campaign, "campaign JSON")->capture_default_str();
        app->add_option("--corpus", corpus, "world corpus (JSON or front-matter text)")->capture_default_str();
        app->add_option("--instruments", instruments, "instrument directory")->capture_default_str();
        if (with_script) app->add_option("--script", script, "mock backend script")->capture_default_str();
    }
};

std::shared_ptr<NarrativeEngine> make_engine(const DataPaths& p, std::shared_ptr<ChatBackend> backend,
                                             assessment::InstrumentRegistry& registry, Clock clock) {
    registry = assessment::InstrumentRegistry::load_directory(p.instruments);
    auto campaign = std::make_shared<const CampaignSpec>(load_campaign_file(p.campaign));
    validate_campaign(*campaign, registry.ids());
    auto corpus = std::make_shared<const WorldCorpus>(load_corpus_file(p.corpus));
    auto survey = std::make_shared<const assessment::SurveyInstrument>(registry.get(campaign->ingame_survey_ref));
    NarrativeOptions opts;
    opts.model_id = backend->backend_id();
    return std::make_shared<NarrativeEngine>(campaign, corpus, backend, survey, opts, clock);
}

int cmd_serve(const std::string& config_path, int port_override) {
    // every thread inherits the blocked mask; the waiter below takes the signals
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    auto cfg = load_service_config(config_path);
    if (port_override >= 0) cfg.port = port_override;
    spdlog::set_level(spdlog::level::from_str(cfg.log_level));
    auto rt = build_runtime(cfg);
    HttpApiOptions opts;
    opts.research_token = cfg.research_token;
    opts.threads = cfg.threads;
    HttpApi api(rt.service, opts);
    int port = api.bind(cfg.host, cfg.port);
    spdlog::info("listening on {}:{} (campaign {}, backend {})", cfg.host, port, rt.engine->campaign().id,
                 rt.backend->backend_id());

    std::atomic<bool> finished{false};
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        if (finished) return;
        spdlog::info("signal {}: draining and shutting down", sig);
        api.stop();
    });
    api.run();
    finished = true;
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

// Offline playthrough against the mock backend. Player lines are sent until
// the session leaves dialogue; cutscenes are acknowledged automatically.
int cmd_play(const DataPaths& paths, const std::string& input, std::uint64_t seed, std::vector<int> answers,
             const std::string& events_out, bool show_state) {
    auto backend = std::make_shared<MockBackend>(load_mock_script_file(paths.script));
    assessment::InstrumentRegistry registry;
    auto engine = make_engine(paths, backend, registry, stepping_clock(1700000000000, 1000));
    auto store = std::make_shared<MemoryEventStore>();
    SessionService service(engine, std::move(registry), store, stepping_clock(1700000000000, 1000));

    auto lines = read_lines(input);
    auto t = service.create_session("cli-player", seed, "cli-" + std::to_string(seed));
    const std::string id = t.state.session_id;
    service.advance(id, Phase::Prologue);

    std::size_t next_line = 0;
    for (;;) {
        auto st = service.state(id);
        if (st.phase == Phase::Dialogue) {
            if (next_line >= lines.size()) {
                std::cerr << "ran out of player lines at level " << st.current_level << "\n";
                break;
            }
            service.post_message(id, lines[next_line++]);
        } else if (st.phase == Phase::Cutscene || st.phase == Phase::Finale) {
            service.advance(id, st.phase);
        } else if (st.phase == Phase::InGameSurvey) {
            auto item = service.current_item(id);
            if (auto* it = std::get_if<assessment::InGameItem>(&item)) {
                std::size_t k = st.ingame_answers.size();
                int option = k < answers.size() ? answers[k] : 1;
                service.answer(id, it->id, option);
            } else {
                service.advance(id, Phase::InGameSurvey);
            }
        } else {
            break;
        }
    }
    auto snap = service.snapshot(id);
    std::cout << render_transcript(snap.state);
    if (show_state) std::cout << json(snap.state).dump(2) << "\n";
    if (!events_out.empty()) {
        std::string log;
        for (const auto& e : snap.events) log += serialize_event(e) + "\n";
        write_out(events_out, log);
    }
    return snap.state.phase == Phase::Closed ? 0 : 3;
}

int cmd_corpus_validate(const std::string& path, std::size_t min_words, std::size_t min_per_category) {
    auto corpus = load_corpus_file(path);
    std::cout << corpus.size() << " entries, " << corpus.total_words() << " words\n";
    for (auto c : kAllCategories) {
        auto it = corpus.per_category_counts().find(c);
        std::cout << "  " << to_string(c) << ": " << (it == corpus.per_category_counts().end() ? 0 : it->second)
                  << "\n";
    }
    auto report = validate_corpus(corpus, {min_words, min_per_category});
    for (const auto& v : report.violations) std::cout << "violation " << v.code << ": " << v.message << "\n";
    std::cout << (report.ok() ? "ok\n" : "FAILED\n");
    return report.ok() ? 0 : 1;
}

int cmd_corpus_convert(const std::string& in, const std::string& out, const std::string& to) {
    auto corpus = load_corpus_file(in);
    write_out(out, to == "json" ? serialize_corpus_json(corpus) : serialize_corpus_front_matter(corpus));
    return 0;
}

int cmd_prompt(const DataPaths& paths, int level_id, const std::string& text, bool trigger,
               const std::string& history_path, std::size_t budget) {
    auto campaign = load_campaign_file(paths.campaign);
    const LevelSpec& level = campaign.level(level_id);
    if (trigger) {
        std::cout << prompts::build_trigger_prompt(level.trigger, text).text << "\n";
        return 0;
    }
    auto corpus = load_corpus_file(paths.corpus);
    std::vector<HistoryEntry> history;
    if (!history_path.empty()) history = json::parse(slurp(history_path)).get<std::vector<HistoryEntry>>();
    NarrativeOptions defaults;
    auto story = select_story_context(corpus, level.context_tags, defaults.story_word_budget);
    prompts::PromptOptions po;
    po.npc_name = campaign.npc_name;
    auto bundle = prompts::build_dialogue_prompt(level, history, story, text, budget, po);
    std::cout << "=== system ===\n" << bundle.system_text << "\n\n=== context ===\n" << bundle.context_text
              << "\n\n=== user ===\n" << bundle.user_text << "\n\n"
              << "tokens~" << bundle.token_estimate << " turns=" << bundle.turns_kept
              << " story_entries=" << bundle.story_entries_kept << "\n";
    return 0;
}

int cmd_score(const std::string& instruments, const std::string& record_path) {
    auto registry = assessment::InstrumentRegistry::load_directory(instruments);
    auto doc = json::parse(slurp(record_path));
    std::vector<assessment::ResponseRecord> records;
    if (doc.is_array())
        records = doc.get<std::vector<assessment::ResponseRecord>>();
    else
        records.push_back(doc.get<assessment::ResponseRecord>());

    json out = json::array();
    for (const auto& r : records) {
        const auto& in = registry.get(r.instrument_id);
        assessment::check_complete(in, r);
        json s{{"participant_id", r.participant_id}, {"instrument", in.id},
               {"wave", std::string(assessment::to_string(r.wave))}};
        if (in.construct == assessment::kClimate) {
            s["climate"] = assessment::score_climate(in, r).mean;
        } else if (in.construct == assessment::kInGame) {
            s["ingame"] = assessment::score_ingame(in, r).mean;
        } else if (in.construct == assessment::kBigFive) {
            s["big_five"] = assessment::score_big_five(in, r);
        } else if (in.construct == assessment::kPolitical) {
            auto p = assessment::code_political(in, r);
            s["political"] = {{"democracy_enthusiasm", p.democracy_enthusiasm},
                              {"status_quo_eval", p.status_quo_eval},
                              {"collective_action", p.collective_action}};
        } else {
            s["likert"] = assessment::score_likert(in, r).mean;
        }
        out.push_back(std::move(s));
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_report(const std::string& dataset, bool exact, const std::string& format, const std::string& scatter,
               const std::string& out) {
    auto rows = stats::rows_from_csv(slurp(dataset));
    auto report = stats::correlation_report(
        rows, exact ? stats::CorrelationMethod::ExactPermutation : stats::CorrelationMethod::TApprox);
    if (scatter == "pre") write_out(out, stats::scatter_csv(report.scatter_pre));
    else if (scatter == "post") write_out(out, stats::scatter_csv(report.scatter_post));
    else if (format == "json") write_out(out, stats::report_to_json(report).dump(2) + "\n");
    else write_out(out, stats::render_report_text(report));
    return 0;
}

int cmd_replay(const std::string& path, const std::string& session, bool as_json) {
    std::istringstream in(slurp(path));
    std::map<std::string, std::vector<EventRecord>> by_session;
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) {
        ++n;
        if (text::trim(line).empty()) continue;
        try {
            auto e = parse_event(line);
            by_session[e.session_id].push_back(std::move(e));
        } catch (const Error& ex) {
            throw ParseError(ex.what(), n);
        }
    }
    int rc = 0;
    for (auto& [id, events] : by_session) {
        if (!session.empty() && id != session) continue;
        std::stable_sort(events.begin(), events.end(),
                         [](const EventRecord& a, const EventRecord& b) { return a.sequence < b.sequence; });
        try {
            auto st = replay(events);
            if (as_json) std::cout << json(st).dump(2) << "\n";
            else std::cout << "# " << id << " (" << to_string(st.phase) << ", " << events.size() << " events)\n"
                           << render_transcript(st);
        } catch (const ReplayError& ex) {
            std::cerr << id << ": " << ex.what() << "\n";
            rc = 2;
        }
    }
    return rc;
}

int cmd_export(const std::string& config_path, const std::string& format, const std::string& campaign_id,
               const std::string& out) {
    auto cfg = load_service_config(config_path);
    auto rt = build_runtime(cfg);
    ExportFilter f;
    if (!campaign_id.empty()) f.campaign_id = campaign_id;
    if (format == "responses") {
        write_out(out, rt.service->export_responses_csv(f));
        return 0;
    }
    auto ds = rt.service->export_dataset(f);
    if (format == "exclusions") write_out(out, stats::exclusions_to_csv(ds.exclusions));
    else write_out(out, stats::dataset_to_csv(ds.rows));
    spdlog::info("{} complete rows, {} excluded", ds.rows.size(), ds.exclusions.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ryno: trigger-gated NPC dialogue assessment engine"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

    std::string config_path = RYNO_DEFAULT_DATA "/config/service.example.json";
    int port = -1;
    auto* serve = app.add_subcommand("serve", "run the HTTP session service");
    serve->add_option("-c,--config", config_path, "service config")->capture_default_str();
    serve->add_option("-p,--port", port, "override listen.port");

    DataPaths paths;
    std::string input;
    std::uint64_t seed = 42;
    std::vector<int> answers;
    std::string events_out;
    bool show_state = false;
    auto* play = app.add_subcommand("play", "scripted offline playthrough with the mock backend");
    paths.add_to(play, true);
    play->add_option("-i,--input", input, "player lines, one per line")->required();
    play->add_option("--seed", seed)->capture_default_str();
    play->add_option("--answers", answers, "1-based options for the in-game items")->delimiter(',');
    play->add_option("--events", events_out, "write the event log (JSONL)");
    play->add_flag("--state", show_state, "print the final state as JSON");

    auto* corpus = app.add_subcommand("corpus", "world corpus utilities");
    corpus->require_subcommand(1);
    std::string corpus_in, corpus_out, corpus_to = "json";
    std::size_t min_words = 8000, min_per_category = 8;
    auto* validate = corpus->add_subcommand("validate", "check size and category balance");
    validate->add_option("file", corpus_in)->required();
    validate->add_option("--min-words", min_words)->capture_default_str();
    validate->add_option("--min-per-category", min_per_category)->capture_default_str();
    auto* convert = corpus->add_subcommand("convert", "convert between JSON and front-matter text");
    convert->add_option("input", corpus_in)->required();
    convert->add_option("-o,--output", corpus_out, "output file (default stdout)");
    convert->add_option("--to", corpus_to)->check(CLI::IsMember({"json", "text"}))->capture_default_str();

    int level = 1;
    std::string text, history_path;
    bool trigger = false;
    std::size_t budget = 3000;
    auto* prompt = app.add_subcommand("prompt", "render a level prompt or trigger prompt");
    paths.add_to(prompt, false);
    prompt->add_option("-l,--level", level)->capture_default_str();
    prompt->add_option("-t,--text", text, "player utterance")->required();
    prompt->add_flag("--trigger", trigger, "render the few-shot trigger prompt instead");
    prompt->add_option("--history", history_path, "JSON array of history entries");
    prompt->add_option("--budget", budget, "token budget")->capture_default_str();

    std::string instruments = paths.instruments, record_path;
    auto* score = app.add_subcommand("score", "score response records");
    score->add_option("--instruments", instruments)->capture_default_str();
    score->add_option("record", record_path, "response record JSON (object or array)")->required();

    std::string dataset, format = "text", scatter, out;
    bool exact = false;
    auto* report = app.add_subcommand("report", "correlation report from a dataset CSV");
    report->add_option("dataset", dataset)->required();
    report->add_flag("--exact", exact, "exact permutation p-values (n <= 8)");
    report->add_option("--format", format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
    report->add_option("--scatter", scatter, "emit scatter CSV instead")->check(CLI::IsMember({"pre", "post"}));
    report->add_option("-o,--output", out);

    std::string log_path, session;
    bool as_json = false;
    auto* rep = app.add_subcommand("replay", "rebuild sessions from an event log");
    rep->add_option("log", log_path, "JSONL event log")->required();
    rep->add_option("--session", session);
    rep->add_flag("--json", as_json, "print states as JSON");

    std::string export_format = "csv", campaign_id;
    auto* exp = app.add_subcommand("export", "complete-case dataset from a service data directory");
    exp->add_option("-c,--config", config_path)->capture_default_str();
    exp->add_option("--format", export_format)
        ->check(CLI::IsMember({"csv", "exclusions", "responses"}))
        ->capture_default_str();
    exp->add_option("--campaign-id", campaign_id);
    exp->add_option("-o,--output", out);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_default_logger(spdlog::stderr_color_mt("ryno"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*serve) return cmd_serve(config_path, port);
        if (*play) return cmd_play(paths, input, seed, answers, events_out, show_state);
        if (*validate) return cmd_corpus_validate(corpus_in, min_words, min_per_category);
        if (*convert) return cmd_corpus_convert(corpus_in, corpus_out, corpus_to);
        if (*prompt) return cmd_prompt(paths, level, text, trigger, history_path, budget);
        if (*score) return cmd_score(instruments, record_path);
        if (*report) return cmd_report(dataset, exact, format, scatter, out);
        if (*rep) return cmd_replay(log_path, session, as_json);
        if (*exp) return cmd_export(config_path, export_format, campaign_id, out);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
