#include <doctest.h>

#include <algorithm>
#include <functional>

#include "fixtures.hpp"
#include "ryno/error.hpp"
#include "ryno/narrative.hpp"
#include "ryno/session.hpp"
#include "ryno/text.hpp"

using namespace ryno;
using nlohmann::json;

namespace {

// Answers with whatever the function returns.
class FnBackend final : public ChatBackend {
public:
    explicit FnBackend(std::function<std::string(const ChatRequest&)> fn) : fn_(std::move(fn)) {}
    ChatResponse complete(const ChatRequest& r) override {
        requests.push_back(r);
        ChatResponse out;
        out.text = fn_(r);
        return out;
    }
    std::string backend_id() const override { return "fn"; }
    std::vector<ChatRequest> requests;

private:
    std::function<std::string(const ChatRequest&)> fn_;
};

// Classifies "yes" utterances as True, replies "ok" in dialogue.
std::string yes_means_true(const ChatRequest& r) {
    if (r.purpose == Purpose::Classification) return text::contains_ci(request_subject(r), "yes") ? "True" : "False";
    return "ok";
}

SessionState in_dialogue(const NarrativeEngine& engine) {
    auto t = engine.start_session("s1", "p1", 9);
    return engine.advance_phase(t.state).state;
}

}  // namespace

TEST_CASE("event records round-trip through their line form") {
    EventRecord e{"s", 4, EventKind::TriggerFired, json{{"trigger_id", "t"}, {"level", 2}}, fixtures::kEpoch};
    auto line = serialize_event(e);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(parse_event(line) == e);
    CHECK_THROWS_AS(parse_event("{\"session_id\": 3}"), ParseError);
    CHECK_THROWS_AS(parse_event("not json"), ParseError);
    CHECK(parse_phase(to_string(Phase::InGameSurvey)) == Phase::InGameSurvey);
    CHECK_THROWS_AS(parse_event_kind("Teleported"), ParseError);
}

TEST_CASE("apply_event rejects gaps, foreign sessions and illegal phases") {
    auto engine = fixtures::make_engine(std::make_shared<FnBackend>(yes_means_true));
    auto start = engine->start_session("s1", "p1", 1);
    const auto& s = start.state;
    CHECK(s.phase == Phase::Prologue);
    CHECK(s.history.size() == 1);
    CHECK(s.history[0].text == fixtures::campaign()->prologue);

    EventRecord gap{"s1", 3, EventKind::PhaseChanged, json{{"from", "Prologue"}, {"to", "Dialogue"}}, 0};
    CHECK_THROWS_AS(apply_event(s, gap), IntegrityError);
    EventRecord other{"s2", 2, EventKind::PhaseChanged, json{{"from", "Prologue"}, {"to", "Dialogue"}}, 0};
    CHECK_THROWS_AS(apply_event(s, other), IntegrityError);
    EventRecord msg{"s1", 2, EventKind::PlayerMessage, json{{"text", "hi"}}, 0};
    CHECK_THROWS_AS(apply_event(s, msg), IntegrityError);
    EventRecord skip{"s1", 2, EventKind::PhaseChanged, json{{"from", "Prologue"}, {"to", "Finale"}}, 0};
    CHECK_THROWS_AS(apply_event(s, skip), IntegrityError);
    CHECK_THROWS_AS(apply_event(in_dialogue(*engine), EventRecord{"s1", 3, EventKind::PlayerMessage, json::object(), 0}),
                    IntegrityError);
    CHECK_THROWS_AS(apply_event(std::nullopt, msg), IntegrityError);
    CHECK_THROWS_AS(apply_event(s, start.events[0]), IntegrityError);
}

TEST_CASE("replay reports the offset of the first bad record") {
    auto h = fixtures::make_harness();
    auto final_state = fixtures::play_through(*h.service, "p1", 3);
    auto log = h.store->load_events();
    CHECK(replay(log) == final_state);

    auto broken = log;
    broken.erase(broken.begin() + 5);
    try {
        replay(broken);
        FAIL("expected ReplayError");
    } catch (const ReplayError& e) {
        CHECK(e.offset() == 5);
    }
    std::vector<EventRecord> headless(log.begin() + 1, log.end());
    CHECK_THROWS_AS(replay(headless), ReplayError);
    CHECK_THROWS_AS(replay(std::span<const EventRecord>{}), ReplayError);
}

TEST_CASE("session state JSON round-trip and transcript rendering") {
    auto h = fixtures::make_harness();
    auto s = fixtures::play_through(*h.service, "p1", 3);
    CHECK(json(s).get<SessionState>() == s);
    auto t = render_transcript(s);
    CHECK(t.rfind("2023-11-14T22:13:20", 0) == 0);
    CHECK(t.find("Player: Hi! Who are you?") != std::string::npos);
    CHECK(t.find(" Npc: ") != std::string::npos);
    CHECK(std::count(t.begin(), t.end(), '\n') == static_cast<long>(s.history.size()));
}

TEST_CASE("player messages: blank text and wrong phase produce no events") {
    auto engine = fixtures::make_engine(std::make_shared<FnBackend>(yes_means_true));
    auto start = engine->start_session("s1", "p1", 1);
    CHECK_THROWS_AS(engine->handle_player_message(start.state, "hello"), PreconditionError);
    auto s = engine->advance_phase(start.state).state;
    CHECK(s.phase == Phase::Dialogue);
    CHECK_THROWS_AS(engine->handle_player_message(s, "  \n\t "), RejectedInput);
    CHECK_THROWS_AS(engine->advance_phase(s), PreconditionError);
    CHECK_THROWS_AS(engine->answer_survey_item(s, "x", 1), PreconditionError);
    CHECK_THROWS_AS(engine->start_session("", "p", 1), ValidationError);
    CHECK_THROWS_AS(engine->start_session("s", " ", 1), ValidationError);
}

TEST_CASE("a fired trigger narrates the cutscene and moves to the next level") {
    auto backend = std::make_shared<FnBackend>(yes_means_true);
    auto engine = fixtures::make_engine(backend);
    auto s = in_dialogue(*engine);

    auto quiet = engine->handle_player_message(s, "tell me something");
    CHECK_FALSE(quiet.trigger_fired);
    CHECK(quiet.events.size() == 2);
    CHECK(quiet.state.phase == Phase::Dialogue);
    CHECK(quiet.reply == "ok");

    auto hit = engine->handle_player_message(quiet.state, "yes, where are you from?");
    CHECK(hit.trigger_fired);
    CHECK(hit.state.phase == Phase::Cutscene);
    CHECK(hit.state.current_level == 2);
    CHECK(hit.state.fired_triggers.count(fixtures::campaign()->level(1).trigger.id));
    REQUIRE(hit.events.size() == 5);
    CHECK(hit.events[2].kind == EventKind::TriggerFired);
    CHECK(hit.events[4].kind == EventKind::LevelAdvanced);
    // sequences continue the input state
    CHECK(hit.events.front().sequence == quiet.state.last_sequence + 1);
    // the input state is untouched
    CHECK(quiet.state.phase == Phase::Dialogue);

    auto back = engine->advance_phase(hit.state).state;
    CHECK(back.phase == Phase::Dialogue);
}

TEST_CASE("level two replies carry devastation context from the corpus") {
    auto rec = std::make_shared<RecordingBackend>(std::make_shared<FnBackend>(yes_means_true));
    auto engine = fixtures::make_engine(rec);
    auto s = in_dialogue(*engine);
    s = engine->handle_player_message(s, "yes").state;
    s = engine->advance_phase(s).state;
    REQUIRE(s.current_level == 2);
    engine->handle_player_message(s, "and then?");
    const auto last = rec->exchanges().back().first;
    REQUIRE(last.purpose == Purpose::Dialogue);
    auto picked = select_story_context(*fixtures::corpus(), fixtures::campaign()->level(2).context_tags, 600);
    REQUIRE_FALSE(picked.empty());
    CHECK(picked.front().tags.count("devastation") + picked.front().tags.count("cause") +
              picked.front().tags.count("past") > 0);
    CHECK(last.context_text.find(picked.front().body) != std::string::npos);
    CHECK(last.system_text.rfind(fixtures::campaign()->level(2).role_description, 0) == 0);
}

TEST_CASE("unparseable classifier replies count as no-fire") {
    auto engine = fixtures::make_engine(std::make_shared<FnBackend>([](const ChatRequest& r) {
        return r.purpose == Purpose::Classification ? std::string("I cannot say") : std::string("hm");
    }));
    auto t = engine->handle_player_message(in_dialogue(*engine), "where are you from?");
    CHECK_FALSE(t.trigger_fired);
    CHECK(t.classifier_unparseable);
    CHECK(t.state.phase == Phase::Dialogue);
}

TEST_CASE("backend failures leave the state unchanged and emit nothing") {
    int calls = 0;
    auto engine = fixtures::make_engine(std::make_shared<FnBackend>([&](const ChatRequest& r) -> std::string {
        ++calls;
        if (r.purpose == Purpose::Dialogue) throw GatewayError(ErrorKind::Timeout, "slow");
        return "True";
    }));
    auto s = in_dialogue(*engine);
    const auto before = s;
    CHECK_THROWS_AS(engine->handle_player_message(s, "where are you from?"), GatewayError);
    CHECK(s == before);
    CHECK(calls == 2);

    auto blank = fixtures::make_engine(std::make_shared<FnBackend>([](const ChatRequest& r) {
        return r.purpose == Purpose::Classification ? std::string("False") : std::string("   ");
    }));
    CHECK_THROWS_AS(blank->handle_player_message(in_dialogue(*blank), "hi"), GatewayError);
}

TEST_CASE("a trigger is not re-classified once it has fired") {
    auto backend = std::make_shared<FnBackend>(yes_means_true);
    auto engine = fixtures::make_engine(backend);
    // a state that fired level one's trigger but somehow still sits in level one dialogue
    auto s = in_dialogue(*engine);
    s.fired_triggers.insert(fixtures::campaign()->level(1).trigger.id);
    backend->requests.clear();
    auto t = engine->handle_player_message(s, "yes");
    CHECK_FALSE(t.trigger_fired);
    REQUIRE(backend->requests.size() == 1);
    CHECK(backend->requests[0].purpose == Purpose::Dialogue);
}

TEST_CASE("in-game survey: order, wrong item, bad option, completion") {
    auto h = fixtures::make_harness();
    auto engine = h.engine;
    auto s = in_dialogue(*engine);
    // walk to the survey through the engine alone
    auto walk = [&](const std::string& line) {
        auto t = engine->handle_player_message(s, line);
        s = t.state;
        while (s.phase == Phase::Cutscene) s = engine->advance_phase(s).state;
    };
    for (const auto& line : fixtures::playthrough_lines()) {
        if (s.phase != Phase::Dialogue) break;
        walk(line);
    }
    REQUIRE(s.phase == Phase::InGameSurvey);
    CHECK_THROWS_AS(engine->advance_phase(s), PreconditionError);

    const auto& survey = engine->ingame_survey();
    REQUIRE(survey.ingame_items.size() >= 2);
    const auto first = survey.ingame_items[0].id;
    CHECK_THROWS_AS(engine->answer_survey_item(s, survey.ingame_items[1].id, 1), PreconditionError);
    CHECK_THROWS_AS(engine->answer_survey_item(s, first, 0), RejectedInput);
    CHECK_THROWS_AS(engine->answer_survey_item(s, first, 4), RejectedInput);
    for (const auto& item : survey.ingame_items) s = engine->answer_survey_item(s, item.id, 2).state;
    CHECK(std::holds_alternative<assessment::SurveyDone>(assessment::next_ingame_item(s, survey)));
    CHECK_THROWS_AS(engine->answer_survey_item(s, first, 2), PreconditionError);

    s = engine->advance_phase(s).state;
    CHECK(s.phase == Phase::Finale);
    CHECK(s.history.back().text == fixtures::campaign()->finale);
    auto closed = engine->advance_phase(s);
    CHECK(closed.state.phase == Phase::Closed);
    CHECK(closed.events.back().kind == EventKind::SessionClosed);
    CHECK_THROWS_AS(engine->advance_phase(closed.state), PreconditionError);
    CHECK_THROWS_AS(engine->handle_player_message(closed.state, "hi"), PreconditionError);
}

TEST_CASE("expire closes from any open phase and is a no-op when closed") {
    auto engine = fixtures::make_engine(std::make_shared<FnBackend>(yes_means_true));
    auto s = in_dialogue(*engine);
    auto t = engine->expire(s);
    CHECK(t.state.phase == Phase::Closed);
    REQUIRE(t.events.size() == 2);
    CHECK(t.events[1].payload["reason"] == "expired");
    CHECK(engine->expire(t.state).events.empty());
}
