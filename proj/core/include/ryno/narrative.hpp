#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ryno/assessment.hpp"
#include "ryno/campaign.hpp"
#include "ryno/corpus.hpp"
#include "ryno/gateway.hpp"
#include "ryno/prompts.hpp"
#include "ryno/session.hpp"

namespace ryno {

// Milliseconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;
Clock system_clock();
// Starts at `start_ms` and advances `step_ms` per reading; thread-safe.
Clock stepping_clock(std::int64_t start_ms, std::int64_t step_ms = 1000);

struct NarrativeOptions {
    std::size_t prompt_token_budget = 3000;
    std::size_t story_word_budget = 600;
    std::string model_id;
    double dialogue_temperature = 0.8;
    double classifier_temperature = 0.0;
    int max_reply_tokens = 300;
    int classifier_max_tokens = 3;
    std::chrono::milliseconds timeout{30000};
    prompts::PromptOptions prompt;
};

// Result of one operation: the successor state and the events that produce
// it from the input state. Nothing is committed until the caller persists
// the events and adopts the state.
struct Transition {
    SessionState state;
    std::vector<EventRecord> events;
};

struct TurnResult {
    SessionState state;
    std::vector<EventRecord> events;
    std::string reply;
    bool trigger_fired = false;
    bool classifier_unparseable = false;
};

// Drives one campaign. Stateless between calls: every operation maps an
// input SessionState to a Transition and never mutates its argument, so a
// failed backend call leaves the caller's state untouched.
class NarrativeEngine {
public:
    NarrativeEngine(std::shared_ptr<const CampaignSpec> campaign, std::shared_ptr<const WorldCorpus> corpus,
                    std::shared_ptr<ChatBackend> backend,
                    std::shared_ptr<const assessment::SurveyInstrument> ingame_survey,
                    NarrativeOptions options = {}, Clock clock = system_clock());

    const CampaignSpec& campaign() const noexcept { return *campaign_; }
    const assessment::SurveyInstrument& ingame_survey() const noexcept { return *survey_; }
    const NarrativeOptions& options() const noexcept { return options_; }

    // Level 1, phase Prologue, prologue text as the first System entry.
    Transition start_session(std::string session_id, std::string participant_id, std::uint64_t seed) const;

    // Classifies the utterance against the current level's trigger, then
    // generates the NPC reply (conditioned on the post-trigger level). On a
    // fresh trigger the end cutscene and the next level goal are narrated and
    // the phase moves to Cutscene.
    //
    // Throws RejectedInput for blank text, PreconditionError outside
    // Dialogue, and GatewayError when the backend fails; none of these
    // produce events.
    TurnResult handle_player_message(const SessionState& state, std::string_view text) const;

    // One step of Prologue->Dialogue, Cutscene->Dialogue|InGameSurvey,
    // InGameSurvey->Finale, Finale->Closed. Throws PreconditionError when the
    // current phase's exit condition is unmet.
    Transition advance_phase(const SessionState& state) const;

    // Records the answer to the current in-game item. `option` is 1-based.
    Transition answer_survey_item(const SessionState& state, std::string_view item_id, int option) const;

    // Forces an idle session to Closed.
    Transition expire(const SessionState& state) const;

private:
    EventRecord make_event(const SessionState& state, std::uint64_t offset, EventKind kind,
                           nlohmann::json payload, std::int64_t ts) const;
    Transition fold(const SessionState& state, std::vector<EventRecord> events) const;
    bool classify(const LevelSpec& level, std::string_view text, bool& unparseable) const;
    std::string generate_reply(const LevelSpec& level, const SessionState& state, std::string_view text) const;

    std::shared_ptr<const CampaignSpec> campaign_;
    std::shared_ptr<const WorldCorpus> corpus_;
    std::shared_ptr<ChatBackend> backend_;
    std::shared_ptr<const assessment::SurveyInstrument> survey_;
    NarrativeOptions options_;
    Clock clock_;
};

}  // namespace ryno
