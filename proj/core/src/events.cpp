#include <sstream>

#include "ryno/error.hpp"
#include "ryno/session.hpp"
#include "ryno/text.hpp"

namespace ryno {

using nlohmann::json;

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::Prologue: return "Prologue";
        case Phase::Dialogue: return "Dialogue";
        case Phase::Cutscene: return "Cutscene";
        case Phase::InGameSurvey: return "InGameSurvey";
        case Phase::Finale: return "Finale";
        case Phase::Closed: return "Closed";
    }
    return "?";
}

std::string_view to_string(Speaker s) {
    switch (s) {
        case Speaker::Player: return "Player";
        case Speaker::Npc: return "Npc";
        case Speaker::System: return "System";
    }
    return "?";
}

Phase parse_phase(std::string_view s) {
    for (Phase p : {Phase::Prologue, Phase::Dialogue, Phase::Cutscene, Phase::InGameSurvey,
                    Phase::Finale, Phase::Closed}) {
        if (s == to_string(p)) return p;
    }
    throw ParseError("unknown phase '" + std::string(s) + "'");
}

Speaker parse_speaker(std::string_view s) {
    for (Speaker sp : {Speaker::Player, Speaker::Npc, Speaker::System}) {
        if (s == to_string(sp)) return sp;
    }
    throw ParseError("unknown speaker '" + std::string(s) + "'");
}

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::SessionStarted: return "SessionStarted";
        case EventKind::PlayerMessage: return "PlayerMessage";
        case EventKind::NpcReply: return "NpcReply";
        case EventKind::TriggerFired: return "TriggerFired";
        case EventKind::LevelAdvanced: return "LevelAdvanced";
        case EventKind::PhaseChanged: return "PhaseChanged";
        case EventKind::SurveyAnswer: return "SurveyAnswer";
        case EventKind::SessionClosed: return "SessionClosed";
    }
    return "?";
}

EventKind parse_event_kind(std::string_view s) {
    for (EventKind k : {EventKind::SessionStarted, EventKind::PlayerMessage, EventKind::NpcReply,
                        EventKind::TriggerFired, EventKind::LevelAdvanced, EventKind::PhaseChanged,
                        EventKind::SurveyAnswer, EventKind::SessionClosed}) {
        if (s == to_string(k)) return k;
    }
    throw ParseError("unknown event kind '" + std::string(s) + "'");
}

void to_json(json& j, const EventRecord& e) {
    j = json{{"session_id", e.session_id},
             {"seq", e.sequence},
             {"kind", to_string(e.kind)},
             {"payload", e.payload},
             {"ts", e.timestamp_ms}};
}

void from_json(const json& j, EventRecord& e) {
    e.session_id = j.at("session_id").get<std::string>();
    e.sequence = j.at("seq").get<std::uint64_t>();
    e.kind = parse_event_kind(j.at("kind").get<std::string>());
    e.payload = j.value("payload", json::object());
    e.timestamp_ms = j.at("ts").get<std::int64_t>();
}

void to_json(json& j, const HistoryEntry& h) {
    j = json{{"speaker", to_string(h.speaker)}, {"text", h.text}, {"ts", h.timestamp_ms}};
}

void from_json(const json& j, HistoryEntry& h) {
    h.speaker = parse_speaker(j.at("speaker").get<std::string>());
    h.text = j.at("text").get<std::string>();
    h.timestamp_ms = j.at("ts").get<std::int64_t>();
}

void to_json(json& j, const SessionState& s) {
    j = json{{"session_id", s.session_id},
             {"participant_id", s.participant_id},
             {"campaign_id", s.campaign_id},
             {"current_level", s.current_level},
             {"level_count", s.level_count},
             {"phase", to_string(s.phase)},
             {"history", s.history},
             {"fired_triggers", s.fired_triggers},
             {"survey_cursor", s.survey_cursor},
             {"survey_item_count", s.survey_item_count},
             {"ingame_answers", s.ingame_answers},
             {"rng_seed", s.rng_seed},
             {"last_sequence", s.last_sequence},
             {"started_at", s.started_at_ms},
             {"updated_at", s.updated_at_ms}};
}

void from_json(const json& j, SessionState& s) {
    s.session_id = j.at("session_id").get<std::string>();
    s.participant_id = j.at("participant_id").get<std::string>();
    s.campaign_id = j.at("campaign_id").get<std::string>();
    s.current_level = j.at("current_level").get<int>();
    s.level_count = j.at("level_count").get<int>();
    s.phase = parse_phase(j.at("phase").get<std::string>());
    s.history = j.at("history").get<std::vector<HistoryEntry>>();
    s.fired_triggers = j.at("fired_triggers").get<std::set<std::string>>();
    s.survey_cursor = j.at("survey_cursor").get<std::size_t>();
    s.survey_item_count = j.at("survey_item_count").get<std::size_t>();
    s.ingame_answers = j.at("ingame_answers").get<std::map<std::string, int>>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    s.last_sequence = j.at("last_sequence").get<std::uint64_t>();
    s.started_at_ms = j.at("started_at").get<std::int64_t>();
    s.updated_at_ms = j.at("updated_at").get<std::int64_t>();
}

std::string serialize_event(const EventRecord& e) {
    return json(e).dump();
}

EventRecord parse_event(std::string_view line) {
    try {
        return json::parse(line).get<EventRecord>();
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed event record: ") + ex.what());
    }
}

namespace {

[[noreturn]] void illegal(const EventRecord& e, const std::string& why) {
    throw IntegrityError("session '" + e.session_id + "' seq " + std::to_string(e.sequence) + " (" +
                         std::string(to_string(e.kind)) + "): " + why);
}

bool legal_transition(const SessionState& s, Phase from, Phase to) {
    const auto completed = static_cast<int>(s.fired_triggers.size());
    switch (from) {
        case Phase::Prologue: return to == Phase::Dialogue;
        case Phase::Dialogue: return to == Phase::Cutscene;
        case Phase::Cutscene:
            if (to == Phase::Dialogue) return completed < s.level_count;
            if (to == Phase::InGameSurvey) return completed == s.level_count;
            return false;
        case Phase::InGameSurvey:
            return to == Phase::Finale && s.survey_cursor >= s.survey_item_count;
        case Phase::Finale: return to == Phase::Closed;
        case Phase::Closed: return false;
    }
    return false;
}

void append_narration(SessionState& s, const json& payload, std::int64_t ts) {
    if (payload.contains("narration")) {
        auto text = payload.at("narration").get<std::string>();
        if (!text.empty()) s.history.push_back({Speaker::System, std::move(text), ts});
    }
}

}  // namespace

SessionState apply_event(const std::optional<SessionState>& prior, const EventRecord& e) {
    if (e.kind == EventKind::SessionStarted) {
        if (prior) illegal(e, "session already started");
        if (e.sequence != 1) illegal(e, "SessionStarted must carry sequence 1");
        SessionState s;
        const auto& p = e.payload;
        s.session_id = e.session_id;
        s.participant_id = p.at("participant_id").get<std::string>();
        s.campaign_id = p.at("campaign_id").get<std::string>();
        s.level_count = p.at("level_count").get<int>();
        s.survey_item_count = p.at("survey_items").get<std::size_t>();
        s.rng_seed = p.at("seed").get<std::uint64_t>();
        s.current_level = 1;
        s.phase = Phase::Prologue;
        s.history.push_back({Speaker::System, p.at("prologue").get<std::string>(), e.timestamp_ms});
        s.last_sequence = 1;
        s.started_at_ms = s.updated_at_ms = e.timestamp_ms;
        if (s.level_count < 1) illegal(e, "level_count must be >= 1");
        return s;
    }

    if (!prior) illegal(e, "no session start event");
    if (e.session_id != prior->session_id) illegal(e, "event belongs to another session");
    if (e.sequence != prior->last_sequence + 1) {
        illegal(e, "sequence gap: expected " + std::to_string(prior->last_sequence + 1));
    }

    SessionState s = *prior;
    const auto& p = e.payload;
    try {
        switch (e.kind) {
            case EventKind::SessionStarted: break;  // handled above
            case EventKind::PlayerMessage:
                if (s.phase != Phase::Dialogue) illegal(e, "player message outside Dialogue");
                s.history.push_back({Speaker::Player, p.at("text").get<std::string>(), e.timestamp_ms});
                break;
            case EventKind::NpcReply:
                if (s.phase != Phase::Dialogue) illegal(e, "NPC reply outside Dialogue");
                s.history.push_back({Speaker::Npc, p.at("text").get<std::string>(), e.timestamp_ms});
                break;
            case EventKind::TriggerFired: {
                if (s.phase != Phase::Dialogue) illegal(e, "trigger fired outside Dialogue");
                auto id = p.at("trigger_id").get<std::string>();
                if (p.value("level", s.current_level) != s.current_level)
                    illegal(e, "trigger belongs to another level");
                if (!s.fired_triggers.insert(id).second) illegal(e, "trigger '" + id + "' already fired");
                break;
            }
            case EventKind::LevelAdvanced: {
                int to = p.at("to").get<int>();
                if (to != s.current_level + 1 || to > s.level_count)
                    illegal(e, "level may only advance by one within the campaign");
                s.current_level = to;
                append_narration(s, p, e.timestamp_ms);
                break;
            }
            case EventKind::PhaseChanged: {
                Phase from = parse_phase(p.at("from").get<std::string>());
                Phase to = parse_phase(p.at("to").get<std::string>());
                if (from != s.phase) illegal(e, "phase is " + std::string(to_string(s.phase)));
                const bool expiry = to == Phase::Closed && p.value("reason", std::string{}) == "expired";
                if (!expiry && !legal_transition(s, from, to)) {
                    illegal(e, "illegal transition " + std::string(to_string(from)) + " -> " +
                                   std::string(to_string(to)));
                }
                s.phase = to;
                append_narration(s, p, e.timestamp_ms);
                break;
            }
            case EventKind::SurveyAnswer: {
                if (s.phase != Phase::InGameSurvey) illegal(e, "survey answer outside InGameSurvey");
                auto item = p.at("item_id").get<std::string>();
                int option = p.at("option").get<int>();
                if (s.ingame_answers.count(item)) illegal(e, "item '" + item + "' already answered");
                s.ingame_answers[item] = option;
                ++s.survey_cursor;
                break;
            }
            case EventKind::SessionClosed:
                if (s.phase != Phase::Closed) illegal(e, "SessionClosed before phase Closed");
                break;
        }
    } catch (const json::exception& ex) {
        illegal(e, std::string("malformed payload: ") + ex.what());
    }
    s.last_sequence = e.sequence;
    s.updated_at_ms = e.timestamp_ms;
    return s;
}

SessionState replay(std::span<const EventRecord> transcript) {
    if (transcript.empty()) throw ReplayError("no session start event", 0);
    if (transcript.front().kind != EventKind::SessionStarted)
        throw ReplayError("no session start event", 0);
    std::optional<SessionState> state;
    for (std::size_t i = 0; i < transcript.size(); ++i) {
        try {
            state = apply_event(state, transcript[i]);
        } catch (const IntegrityError& ex) {
            throw ReplayError(ex.what(), i);
        }
    }
    return *state;
}

std::string render_transcript(const SessionState& state) {
    std::ostringstream out;
    for (const auto& h : state.history) {
        std::string line = h.text;
        for (auto& c : line) {
            if (c == '\n') c = ' ';
        }
        out << text::iso8601_utc(h.timestamp_ms) << ' ' << to_string(h.speaker) << ": " << line << '\n';
    }
    return out.str();
}

}  // namespace ryno
