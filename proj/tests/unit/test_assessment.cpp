#include <doctest.h>

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "ryno/assessment.hpp"
#include "ryno/error.hpp"

using namespace ryno;
using namespace ryno::assessment;
using nlohmann::json;

TEST_CASE("bundled instruments load with their published item counts") {
    auto reg = fixtures::registry();
    CHECK(reg.ids() == std::vector<std::string>{"climate_v1", "ingame_v1", "ipip50_v1", "political_v1"});
    CHECK(reg.by_construct(kClimate).item_count() == 15);
    CHECK(reg.by_construct(kInGame).item_count() == 9);
    CHECK(reg.by_construct(kBigFive).item_count() == 50);
    CHECK(reg.by_construct(kPolitical).item_count() == 19);
    CHECK_NOTHROW(reg.validate_links());
    CHECK_THROWS_AS(reg.get("nope"), NotFound);
    CHECK(reg.find("nope") == nullptr);

    std::map<std::string, int> per_trait;
    for (const auto& item : reg.get("ipip50_v1").items) ++per_trait[item.subscale];
    for (auto trait : kBigFiveTraits) CHECK(per_trait[std::string(trait)] == 10);
}

TEST_CASE("instrument documents round-trip and keep a stable content hash") {
    auto reg = fixtures::registry();
    for (const auto& id : reg.ids()) {
        const auto& in = reg.get(id);
        auto again = parse_instrument(serialize_instrument(in));
        CHECK(again.item_ids() == in.item_ids());
        CHECK(again.content_hash == in.content_hash);
        CHECK(in.content_hash.size() == 16);
    }
    CHECK(reg.get("climate_v1").content_hash != reg.get("political_v1").content_hash);
}

TEST_CASE("instrument validation") {
    auto in = fixtures::registry().get("ingame_v1");
    auto dup = in;
    dup.ingame_items[1].id = dup.ingame_items[0].id;
    CHECK_THROWS_AS(dup.validate(), ValidationError);
    auto two = in;
    two.ingame_items[0].options.pop_back();
    CHECK_THROWS_AS(two.validate(), ValidationError);
    auto same = in;
    same.ingame_items[0].options[0].score = same.ingame_items[0].options[1].score;
    CHECK_THROWS_AS(same.validate(), ValidationError);
    auto four = in;
    four.ingame_items[0].options[0].score = 4;
    CHECK_THROWS_AS(four.validate(), ValidationError);

    auto likert = fixtures::registry().get("climate_v1");
    likert.items[0].scale_min = 5;
    CHECK_THROWS_AS(likert.validate(), ValidationError);

    CHECK_THROWS_AS(parse_instrument("{"), ParseError);
    CHECK_THROWS_AS(parse_instrument(R"({"id": "x"})"), ParseError);
    CHECK_THROWS_AS(InstrumentRegistry::load_directory("/nonexistent/instruments"), ConfigError);

    InstrumentRegistry reg;
    reg.add(fixtures::registry().get("climate_v1"));
    CHECK_THROWS_AS(reg.add(fixtures::registry().get("climate_v1")), ValidationError);
}

TEST_CASE("validate_links catches in-game items pointing at missing climate items") {
    auto base = fixtures::registry();
    auto ingame = base.get("ingame_v1");
    ingame.ingame_items[2].source_item = "PreQ99";
    InstrumentRegistry reg;
    reg.add(base.get("climate_v1"));
    reg.add(ingame);
    CHECK_THROWS_WITH_AS(reg.validate_links(), doctest::Contains("PreQ99"), ValidationError);
}

TEST_CASE("check_complete names the offending item") {
    auto reg = fixtures::registry();
    const auto& climate = reg.get("climate_v1");
    auto r = fixtures::likert_record(climate, "p", Wave::Pre, [](std::size_t) { return 4; });
    CHECK_NOTHROW(check_complete(climate, r));

    auto missing = r;
    missing.answers.erase(climate.items[3].id);
    try {
        check_complete(climate, missing);
        FAIL("expected ScoringError");
    } catch (const ScoringError& e) {
        CHECK(e.item_id() == climate.items[3].id);
    }
    auto out = r;
    out.answers[climate.items[0].id] = 6;
    CHECK_THROWS_WITH_AS(check_complete(climate, out), doctest::Contains("out of scale"), ScoringError);
    auto stray = r;
    stray.answers["Bogus"] = 3;
    CHECK_THROWS_WITH_AS(check_complete(climate, stray), doctest::Contains("Bogus"), ScoringError);
    auto other = r;
    other.instrument_id = "political_v1";
    CHECK_THROWS_AS(check_complete(climate, other), ScoringError);
    auto old = r;
    old.instrument_version = "0.9";
    CHECK_THROWS_AS(check_complete(climate, old), ScoringError);

    const auto& ingame = reg.get("ingame_v1");
    ResponseRecord g{"p", ingame.id, ingame.version, 0, Wave::InGame, {}, {}};
    for (const auto& item : ingame.ingame_items) g.answers[item.id] = 2;
    CHECK_NOTHROW(check_complete(ingame, g));
    g.answers[ingame.ingame_items[0].id] = 4;
    CHECK_THROWS_WITH_AS(check_complete(ingame, g), doctest::Contains("unknown option"), ScoringError);
}

TEST_CASE("reverse coding and score families") {
    SurveyItem item;
    item.reverse_coded = true;
    CHECK(item.coded(1) == 5);
    CHECK(item.coded(4) == 2);
    item.reverse_coded = false;
    item.key_direction = KeyDirection::AntiConstruct;
    CHECK(item.coded(2) == 4);
    item.key_direction = KeyDirection::ProConstruct;
    CHECK(item.coded(2) == 2);

    auto reg = fixtures::registry();
    auto r = fixtures::likert_record(reg.get("climate_v1"), "p", Wave::Pre, [](std::size_t) { return 3; });
    CHECK_THROWS_AS(score_big_five(reg.get("climate_v1"), r), ScoringError);
    CHECK_THROWS_AS(score_ingame(reg.get("climate_v1"), r), ScoringError);
    CHECK(score_climate(reg.get("climate_v1"), r).mean == 3.0);

    auto b5 = fixtures::likert_record(reg.get("ipip50_v1"), "p", Wave::Pre, [](std::size_t) { return 3; });
    for (const auto& [trait, mean] : score_big_five(reg.get("ipip50_v1"), b5)) CHECK(mean == 3.0);
}

TEST_CASE("presentation order is authored unless randomized, and seeded when it is") {
    auto reg = fixtures::registry();
    const auto& climate = reg.get("climate_v1");
    REQUIRE(climate.randomize_order);
    auto a = presentation_order(climate, 7);
    CHECK(a == presentation_order(climate, 7));
    CHECK(a != presentation_order(climate, 8));
    auto sorted_a = a, ids = climate.item_ids();
    std::sort(sorted_a.begin(), sorted_a.end());
    std::sort(ids.begin(), ids.end());
    CHECK(sorted_a == ids);
    CHECK(presentation_order(reg.get("ingame_v1"), 7) == reg.get("ingame_v1").item_ids());

    auto p = seeded_permutation(10, 1);
    std::vector<bool> seen(10);
    for (auto i : p) seen.at(i) = true;
    CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
    CHECK(seeded_permutation(0, 1).empty());
}

TEST_CASE("demographics accept coded categories only") {
    CHECK_NOTHROW(validate_demographics(fixtures::sample_demographics()));
    CHECK_NOTHROW(validate_demographics({}));
    CHECK_THROWS_AS(validate_demographics({{"gender", "a lot"}}), ValidationError);
    CHECK_THROWS_AS(validate_demographics({{"shoe_size", "42"}}), ValidationError);
}

TEST_CASE("response record JSON round-trip") {
    ResponseRecord r{"p1", "climate_v1", "1.0.0", fixtures::kEpoch, Wave::Post, {{"PreQ1", 4}},
                     fixtures::sample_demographics()};
    auto back = json(r).get<ResponseRecord>();
    CHECK(back.participant_id == r.participant_id);
    CHECK(back.wave == Wave::Post);
    CHECK(back.answers == r.answers);
    CHECK(back.demographics == r.demographics);
    CHECK(back.timestamp_ms == r.timestamp_ms);
    CHECK_THROWS(json{{"participant_id", "p"}, {"wave", "Later"}}.get<ResponseRecord>());
}

TEST_CASE("responses CSV: one row per participant and wave, derived scores appended") {
    auto reg = fixtures::registry();
    auto records = fixtures::survey_uploads(reg, "p1", 0);
    auto more = fixtures::survey_uploads(reg, "p2", 1);
    records.insert(records.end(), more.begin(), more.end());
    auto csv = export_responses_csv(records, reg);
    std::istringstream in(csv);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    REQUIRE(lines.size() == 5);  // header + 2 participants x (Pre, Post)
    const auto columns = std::count(lines[0].begin(), lines[0].end(), ',') + 1;
    CHECK(columns == 2 + 15 + 9 + 50 + 19 + 10);
    CHECK(lines[0].rfind("participant_id,wave,", 0) == 0);
    CHECK(lines[0].find(",climate_mean,ingame_mean,Openness") != std::string::npos);
    for (std::size_t i = 1; i < lines.size(); ++i)
        CHECK(std::count(lines[i].begin(), lines[i].end(), ',') + 1 == columns);
    CHECK(lines[1].rfind("p1,Pre,", 0) == 0);
    CHECK(lines[2].rfind("p1,Post,", 0) == 0);
}
