#include <doctest.h>

#include "fixtures.hpp"
#include "ryno/error.hpp"
#include "ryno/prompts.hpp"
#include "ryno/text.hpp"

using namespace ryno;
using namespace ryno::prompts;

namespace {

std::vector<HistoryEntry> turns(int n) {
    std::vector<HistoryEntry> h;
    h.push_back({Speaker::System, "narration that never enters the prompt", 0});
    for (int i = 0; i < n; ++i)
        h.push_back({i % 2 ? Speaker::Npc : Speaker::Player, "turn number " + std::to_string(i), i});
    return h;
}

}  // namespace

TEST_CASE("trigger prompt for the origin level is byte-identical to the golden text") {
    auto golden = fixtures::read_file(fixtures::golden_path("trigger_origin.txt"));
    while (!golden.empty() && golden.back() == '\n') golden.pop_back();
    const auto& trigger = fixtures::campaign()->level(1).trigger;
    CHECK(build_trigger_prompt(trigger, "Where do you come from?").text == golden);
    // whitespace and line breaks in the input are normalised
    CHECK(build_trigger_prompt(trigger, "  Where do you\ncome from?  ").text ==
          build_trigger_prompt(trigger, "Where do you come from?").text);
}

TEST_CASE("trigger prompt needs both labels") {
    TriggerSpec t;
    t.id = "x";
    t.preamble = "p";
    t.demonstrations = {{"q", true}};
    CHECK_THROWS_AS(build_trigger_prompt(t, "hi"), ValidationError);
    t.demonstrations.push_back({"r", false});
    CHECK_NOTHROW(build_trigger_prompt(t, "hi"));
}

TEST_CASE("classifier reply parsing") {
    CHECK(parse_classifier_reply("True"));
    CHECK(parse_classifier_reply("  true."));
    CHECK(parse_classifier_reply("Answer: True"));
    CHECK(parse_classifier_reply("TRUE, because it asks about origin"));
    CHECK_FALSE(parse_classifier_reply("False"));
    CHECK_FALSE(parse_classifier_reply("\"false\""));
    CHECK_THROWS_AS(parse_classifier_reply("Maybe"), UnparseableReply);
    CHECK_THROWS_AS(parse_classifier_reply("Truest"), UnparseableReply);
    CHECK_THROWS_AS(parse_classifier_reply(""), UnparseableReply);
}

TEST_CASE("slot filling") {
    CHECK(fill_slots("a /{x}/ b /{y}/", {{"x", "1"}, {"y", "2"}}) == "a 1 b 2");
    CHECK_THROWS_AS(fill_slots("a /{z}/", {{"x", "1"}}), ConfigError);
    CHECK_THROWS_AS(fill_slots("a /{x", {{"x", "1"}}), ConfigError);
    CHECK(has_unfilled_slot("hello /{conversation}/"));
    CHECK_FALSE(has_unfilled_slot("hello"));
}

TEST_CASE("history helpers drop narration and keep the newest turns") {
    auto h = turns(6);
    auto d = dialogue_turns(h);
    CHECK(d.size() == 6);
    PromptOptions o;
    CHECK(render_turn(d[0], o) == "Player: turn number 0");
    CHECK(render_turn(d[1], o) == "Ryno: turn number 1");
    const std::size_t last_two = chars_per_four(render_turn(d[4], o)) + chars_per_four(render_turn(d[5], o));
    auto kept = truncate_history(d, last_two, o);
    REQUIRE(kept.size() == 2);
    CHECK(kept.back().text == "turn number 5");
    CHECK(truncate_history(d, 0, o).empty());
    CHECK(estimate_history(d, o) >= last_two * 3);
    CHECK(truncate_history(d, last_two - 1, o).size() == 1);
    CHECK(chars_per_four("abcde") == 2);
}

TEST_CASE("dialogue prompt layout") {
    const auto& level = fixtures::campaign()->level(2);
    auto story = select_story_context(*fixtures::corpus(), level.context_tags, 600);
    auto b = build_dialogue_prompt(level, turns(4), story, "  What happened?  ", 3000);
    CHECK(b.system_text.rfind(level.role_description, 0) == 0);
    CHECK(b.system_text.find(std::string(kDefaultResponseFormat)) != std::string::npos);
    CHECK(b.user_text == "What happened?");
    CHECK(b.context_text.find("Your earlier conversations:") != std::string::npos);
    CHECK(b.context_text.find("narration that never enters") == std::string::npos);
    CHECK(b.context_text.find(story.front().body) != std::string::npos);
    CHECK_FALSE(has_unfilled_slot(b.context_text));
    CHECK(b.turns_kept == 4);
    CHECK(b.story_entries_kept == story.size());
    CHECK(b.token_estimate <= 3000);
}

TEST_CASE("level one role description keeps the plea-for-help wording") {
    CHECK(text::contains_ci(fixtures::campaign()->level(1).role_description,
                            "Remember, each interaction is a hidden plea for help"));
}

TEST_CASE("tight budgets drop old turns first, then story, then fail") {
    const auto& level = fixtures::campaign()->level(1);
    auto story = select_story_context(*fixtures::corpus(), level.context_tags, 600);
    auto h = turns(40);
    auto full = build_dialogue_prompt(level, h, story, "hi", 100000);
    CHECK(full.turns_kept == 40);

    const std::size_t no_turns = build_dialogue_prompt(level, {}, story, "hi", 100000).token_estimate;
    auto some = build_dialogue_prompt(level, h, story, "hi", no_turns + 30);
    CHECK(some.turns_kept > 0);
    CHECK(some.turns_kept < 40);
    CHECK(some.story_entries_kept == story.size());
    CHECK(some.context_text.find("turn number 39") != std::string::npos);
    CHECK(some.context_text.find("turn number 0\n") == std::string::npos);
    CHECK(some.token_estimate <= no_turns + 30);

    const std::size_t system = chars_per_four(full.system_text);
    auto bare = build_dialogue_prompt(level, h, story, "hi", system + 60);
    CHECK(bare.turns_kept == 0);
    CHECK(bare.story_entries_kept < story.size());

    CHECK_THROWS_AS(build_dialogue_prompt(level, h, story, "hi", system), ConfigError);
    CHECK_THROWS_AS(build_dialogue_prompt(level, h, story, "hi", system + 5), ConfigError);
}
