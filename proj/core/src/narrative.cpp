#include "ryno/narrative.hpp"

#include <atomic>

#include <spdlog/spdlog.h>

#include "ryno/error.hpp"
#include "ryno/text.hpp"

namespace ryno {

using nlohmann::json;

Clock system_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

Clock stepping_clock(std::int64_t start_ms, std::int64_t step_ms) {
    auto next = std::make_shared<std::atomic<std::int64_t>>(start_ms);
    return [next, step_ms] { return next->fetch_add(step_ms); };
}

NarrativeEngine::NarrativeEngine(std::shared_ptr<const CampaignSpec> campaign,
                                 std::shared_ptr<const WorldCorpus> corpus, std::shared_ptr<ChatBackend> backend,
                                 std::shared_ptr<const assessment::SurveyInstrument> ingame_survey,
                                 NarrativeOptions options, Clock clock)
    : campaign_(std::move(campaign)),
      corpus_(std::move(corpus)),
      backend_(std::move(backend)),
      survey_(std::move(ingame_survey)),
      options_(std::move(options)),
      clock_(std::move(clock)) {
    if (!campaign_ || !corpus_ || !backend_ || !survey_) throw ConfigError("narrative engine: missing dependency");
    validate_campaign(*campaign_, {survey_->id});
    if (!survey_->is_ingame()) throw ConfigError("'" + survey_->id + "' is not an in-game instrument");
    if (options_.story_word_budget == 0) throw ConfigError("story_word_budget must be > 0");
    if (!clock_) clock_ = system_clock();
    options_.prompt.npc_name = campaign_->npc_name;
}

EventRecord NarrativeEngine::make_event(const SessionState& state, std::uint64_t offset, EventKind kind,
                                        json payload, std::int64_t ts) const {
    return EventRecord{state.session_id, state.last_sequence + offset, kind, std::move(payload), ts};
}

Transition NarrativeEngine::fold(const SessionState& state, std::vector<EventRecord> events) const {
    std::optional<SessionState> next = state;
    for (const auto& e : events) next = apply_event(next, e);
    return Transition{std::move(*next), std::move(events)};
}

Transition NarrativeEngine::start_session(std::string session_id, std::string participant_id,
                                          std::uint64_t seed) const {
    if (session_id.empty()) throw ValidationError("session id must not be empty");
    if (text::trim(participant_id).empty()) throw ValidationError("participant id must not be empty");
    EventRecord e{std::move(session_id), 1, EventKind::SessionStarted,
                  json{{"participant_id", participant_id},
                       {"campaign_id", campaign_->id},
                       {"seed", seed},
                       {"level_count", campaign_->level_count()},
                       {"survey_items", survey_->item_count()},
                       {"prologue", campaign_->prologue}},
                  clock_()};
    SessionState s = apply_event(std::nullopt, e);
    return Transition{std::move(s), {std::move(e)}};
}

bool NarrativeEngine::classify(const LevelSpec& level, std::string_view text, bool& unparseable) const {
    auto prompt = prompts::build_trigger_prompt(level.trigger, text);
    ChatRequest req;
    req.purpose = Purpose::Classification;
    req.user_text = std::move(prompt.text);
    req.model_id = options_.model_id;
    req.temperature = options_.classifier_temperature;
    req.max_reply_tokens = options_.classifier_max_tokens;
    req.timeout = options_.timeout;
    const auto response = backend_->complete(req);
    try {
        return prompts::parse_classifier_reply(response.text);
    } catch (const UnparseableReply& ex) {
        unparseable = true;
        spdlog::warn("trigger '{}': {}; treating as no-fire", level.trigger.id, ex.what());
        return false;
    }
}

std::string NarrativeEngine::generate_reply(const LevelSpec& level, const SessionState& state,
                                            std::string_view text) const {
    auto story = select_story_context(*corpus_, level.context_tags, options_.story_word_budget);
    auto bundle = prompts::build_dialogue_prompt(level, state.history, story, text, options_.prompt_token_budget,
                                                 options_.prompt);
    ChatRequest req;
    req.purpose = Purpose::Dialogue;
    req.system_text = std::move(bundle.system_text);
    req.context_text = std::move(bundle.context_text);
    req.user_text = std::move(bundle.user_text);
    req.model_id = options_.model_id;
    req.temperature = options_.dialogue_temperature;
    req.max_reply_tokens = options_.max_reply_tokens;
    req.timeout = options_.timeout;
    auto response = backend_->complete(req);
    std::string reply(text::trim(response.text));
    if (reply.empty()) throw GatewayError(ErrorKind::MalformedPayload, "backend returned a blank reply");
    return reply;
}

TurnResult NarrativeEngine::handle_player_message(const SessionState& state, std::string_view raw_text) const {
    if (state.phase == Phase::Closed) throw PreconditionError("session is closed");
    if (state.phase != Phase::Dialogue) {
        throw PreconditionError("player messages are accepted only in Dialogue (phase is " +
                                std::string(to_string(state.phase)) + ")");
    }
    const std::string text{text::trim(raw_text)};
    if (text.empty()) throw RejectedInput("empty message");

    const LevelSpec& level = campaign_->level(state.current_level);
    bool unparseable = false;
    const bool fired = !state.fired_triggers.count(level.trigger.id) && classify(level, text, unparseable);
    const bool more_levels = state.current_level < static_cast<int>(campaign_->level_count());
    const LevelSpec& reply_level = fired && more_levels ? campaign_->level(state.current_level + 1) : level;

    const std::int64_t player_ts = clock_();
    std::string reply = generate_reply(reply_level, state, text);
    const std::int64_t reply_ts = clock_();

    std::vector<EventRecord> events;
    std::uint64_t n = 0;
    events.push_back(make_event(state, ++n, EventKind::PlayerMessage, {{"text", text}, {"level", level.id}}, player_ts));
    events.push_back(make_event(state, ++n, EventKind::NpcReply, {{"text", reply}, {"level", reply_level.id}}, reply_ts));
    if (fired) {
        events.push_back(make_event(state, ++n, EventKind::TriggerFired,
                                    {{"trigger_id", level.trigger.id}, {"level", level.id}}, reply_ts));
        events.push_back(make_event(state, ++n, EventKind::PhaseChanged,
                                    {{"from", "Dialogue"}, {"to", "Cutscene"}, {"narration", level.end_cutscene}},
                                    reply_ts));
        if (more_levels) {
            events.push_back(make_event(state, ++n, EventKind::LevelAdvanced,
                                        {{"from", level.id}, {"to", level.id + 1}, {"narration", reply_level.goal_text}},
                                        reply_ts));
        }
    }
    auto t = fold(state, std::move(events));
    return TurnResult{std::move(t.state), std::move(t.events), std::move(reply), fired, unparseable};
}

Transition NarrativeEngine::advance_phase(const SessionState& state) const {
    const std::int64_t ts = clock_();
    auto changed = [&](Phase from, Phase to, std::string narration = {}) {
        json payload{{"from", to_string(from)}, {"to", to_string(to)}};
        if (!narration.empty()) payload["narration"] = std::move(narration);
        return make_event(state, 1, EventKind::PhaseChanged, std::move(payload), ts);
    };

    switch (state.phase) {
        case Phase::Prologue:
            return fold(state, {changed(Phase::Prologue, Phase::Dialogue, campaign_->level(1).goal_text)});
        case Phase::Dialogue:
            throw PreconditionError("level " + std::to_string(state.current_level) + " trigger '" +
                                    campaign_->level(state.current_level).trigger.id + "' has not fired");
        case Phase::Cutscene:
            if (static_cast<int>(state.fired_triggers.size()) < state.level_count)
                return fold(state, {changed(Phase::Cutscene, Phase::Dialogue)});
            return fold(state, {changed(Phase::Cutscene, Phase::InGameSurvey)});
        case Phase::InGameSurvey: {
            const std::size_t total = survey_->item_count();
            if (state.survey_cursor < total) {
                const std::size_t missing = total - state.survey_cursor;
                throw PreconditionError(std::to_string(missing) + (missing == 1 ? " item" : " items") + " unanswered");
            }
            return fold(state, {changed(Phase::InGameSurvey, Phase::Finale, campaign_->finale)});
        }
        case Phase::Finale: {
            auto closed = changed(Phase::Finale, Phase::Closed);
            auto done = make_event(state, 2, EventKind::SessionClosed, {{"reason", "completed"}}, ts);
            return fold(state, {std::move(closed), std::move(done)});
        }
        case Phase::Closed:
            throw PreconditionError("session is closed");
    }
    throw PreconditionError("unknown phase");
}

Transition NarrativeEngine::answer_survey_item(const SessionState& state, std::string_view item_id, int option) const {
    auto next = assessment::next_ingame_item(state, *survey_);
    if (std::holds_alternative<assessment::SurveyDone>(next))
        throw PreconditionError("all in-game items are already answered");
    const auto& item = std::get<assessment::InGameItem>(next);
    if (item.id != item_id)
        throw PreconditionError("expected an answer to " + item.id + ", got " + std::string(item_id));
    if (option < 1 || option > static_cast<int>(item.options.size()))
        throw RejectedInput(item.id + ": unknown option index " + std::to_string(option));
    return fold(state, {make_event(state, 1, EventKind::SurveyAnswer, {{"item_id", item.id}, {"option", option}},
                                   clock_())});
}

Transition NarrativeEngine::expire(const SessionState& state) const {
    if (state.phase == Phase::Closed) return Transition{state, {}};
    const std::int64_t ts = clock_();
    auto changed = make_event(state, 1, EventKind::PhaseChanged,
                              {{"from", to_string(state.phase)}, {"to", "Closed"}, {"reason", "expired"}}, ts);
    auto done = make_event(state, 2, EventKind::SessionClosed, {{"reason", "expired"}}, ts);
    return fold(state, {std::move(changed), std::move(done)});
}

}  // namespace ryno
