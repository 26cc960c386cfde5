#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ryno {

// Prologue < Dialogue/Cutscene* < InGameSurvey < Finale < Closed
enum class Phase { Prologue, Dialogue, Cutscene, InGameSurvey, Finale, Closed };
enum class Speaker { Player, Npc, System };

std::string_view to_string(Phase p);
std::string_view to_string(Speaker s);
Phase parse_phase(std::string_view s);
Speaker parse_speaker(std::string_view s);

struct HistoryEntry {
    Speaker speaker = Speaker::System;
    std::string text;
    std::int64_t timestamp_ms = 0;

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct SessionState {
    std::string session_id;
    std::string participant_id;
    std::string campaign_id;
    int current_level = 1;
    int level_count = 1;
    Phase phase = Phase::Prologue;
    std::vector<HistoryEntry> history;
    std::set<std::string> fired_triggers;
    std::size_t survey_cursor = 0;
    std::size_t survey_item_count = 0;
    std::map<std::string, int> ingame_answers;  // item id -> chosen option (1-based)
    std::uint64_t rng_seed = 0;
    std::uint64_t last_sequence = 0;
    std::int64_t started_at_ms = 0;
    std::int64_t updated_at_ms = 0;

    friend bool operator==(const SessionState&, const SessionState&) = default;
};

enum class EventKind {
    SessionStarted,
    PlayerMessage,
    NpcReply,
    TriggerFired,
    LevelAdvanced,
    PhaseChanged,
    SurveyAnswer,
    SessionClosed,
};

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

// One line of the append-only session log. Payloads carry every text that
// enters history so a log replays without the campaign definition.
struct EventRecord {
    std::string session_id;
    std::uint64_t sequence = 0;  // contiguous from 1 per session
    EventKind kind = EventKind::SessionStarted;
    nlohmann::json payload = nlohmann::json::object();
    std::int64_t timestamp_ms = 0;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

void to_json(nlohmann::json& j, const EventRecord& e);
void from_json(const nlohmann::json& j, EventRecord& e);
void to_json(nlohmann::json& j, const HistoryEntry& h);
void from_json(const nlohmann::json& j, HistoryEntry& h);
void to_json(nlohmann::json& j, const SessionState& s);
void from_json(const nlohmann::json& j, SessionState& s);

std::string serialize_event(const EventRecord& e);  // single line, no trailing newline
EventRecord parse_event(std::string_view line);

// Folds one event into a state. `state` is empty (nullopt) before
// SessionStarted. Throws IntegrityError on a sequence gap or an event that
// is illegal in the current phase.
SessionState apply_event(const std::optional<SessionState>& state, const EventRecord& event);

// Rebuilds session state from a log prefix. Throws ReplayError carrying the
// zero-based offset of the offending record.
SessionState replay(std::span<const EventRecord> transcript);

// Stable, human-readable rendering of a session's history, one line per
// entry: "<iso time> <Speaker>: <text>".
std::string render_transcript(const SessionState& state);

}  // namespace ryno
