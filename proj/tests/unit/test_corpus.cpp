#include <doctest.h>

#include "fixtures.hpp"
#include "ryno/corpus.hpp"
#include "ryno/error.hpp"
#include "ryno/text.hpp"

using namespace ryno;

namespace {

const char* kSmall = R"(---
id: a
category: Event
title: First
tags: origin, home

one two three four

five six
---
id: b
category: Thing
title: Second
tags: past

alpha beta gamma
---
id: c
category: Inhabitant
title: Third
tags: origin

x y z w v u
)";

}  // namespace

TEST_CASE("front-matter corpus parses headers, tags and multi-paragraph bodies") {
    auto c = load_corpus(kSmall);
    REQUIRE(c.size() == 3);
    const auto* a = c.find("a");
    REQUIRE(a);
    CHECK(a->category == Category::Event);
    CHECK(a->title == "First");
    CHECK(a->tags == std::set<std::string>{"origin", "home"});
    CHECK(a->word_count == 6);
    CHECK(a->body.find("\n\n") != std::string::npos);
    CHECK(c.total_words() == 15);
    CHECK(c.per_category_counts().at(Category::Thing) == 1);
    CHECK(c.find("nope") == nullptr);
}

TEST_CASE("corpus JSON and text forms round-trip") {
    auto c = load_corpus(kSmall);
    auto via_json = load_corpus(serialize_corpus_json(c));
    CHECK(via_json.entries() == c.entries());
    auto via_text = load_corpus(serialize_corpus_front_matter(via_json));
    CHECK(via_text.entries() == c.entries());
}

TEST_CASE("bundled corpus text and JSON forms hold the same entries") {
    auto txt = load_corpus_file(fixtures::data_path("corpus/world.txt"));
    auto js = load_corpus_file(fixtures::data_path("corpus/world.json"));
    CHECK(txt.entries() == js.entries());
}

TEST_CASE("corpus parse errors point at the problem") {
    CHECK_THROWS_AS(load_corpus("---\nid: a\ncategory: Weather\ntitle: t\n\nbody\n"), ValidationError);
    CHECK_THROWS_WITH_AS(load_corpus("---\nid: a\ncategory: Event\ncolour: red\n\nbody\n"),
                         "line 4: unknown header 'colour'", ParseError);
    CHECK_THROWS_AS(load_corpus("---\nid: a\ncategory: Event\n\n"), ParseError);
    CHECK_THROWS_AS(load_corpus("stray\n---\nid: a\ncategory: Event\n\nbody\n"), ParseError);
    CHECK_THROWS_AS(load_corpus(R"({"entries": []})"), ParseError);
    CHECK_THROWS_AS(load_corpus(R"({"entries": [{"id": "a"}]})"), ParseError);
    CHECK_THROWS_WITH_AS(WorldCorpus({make_entry("a", Category::Event, "t", "x"), make_entry("a", Category::Thing, "t", "y")}),
                         "duplicate entry id 'a'", ValidationError);
    CHECK_THROWS_AS(load_corpus_file("/nonexistent/world.txt"), ConfigError);
}

TEST_CASE("validate_corpus reports size and balance violations") {
    auto c = load_corpus(kSmall);
    auto ok = validate_corpus(c, {10, 1});
    CHECK(ok.ok());
    auto bad = validate_corpus(c, {100, 2});
    REQUIRE_FALSE(bad.ok());
    std::set<std::string> codes;
    for (const auto& v : bad.violations) codes.insert(v.code);
    CHECK(codes == std::set<std::string>{"total_words", "category_count"});
}

TEST_CASE("select_story_context keeps corpus order and stops at the first overflow") {
    auto c = load_corpus(kSmall);
    auto all = select_story_context(c, {"origin"}, 100);
    REQUIRE(all.size() == 2);
    CHECK(all[0].id == "a");
    CHECK(all[1].id == "c");
    // a (6 words) fits, c (6) would make 12 > 10: stop
    auto first = select_story_context(c, {"origin"}, 10);
    REQUIRE(first.size() == 1);
    CHECK(first[0].id == "a");
    CHECK(select_story_context(c, {"origin"}, 5).empty());
    CHECK(select_story_context(c, {"nothing"}, 100).empty());
    CHECK(select_story_context(c, {}, 100).empty());
}

TEST_CASE("every level of the default campaign finds story context in the bundled corpus") {
    auto corpus = fixtures::corpus();
    for (const auto& level : fixtures::campaign()->levels) {
        auto picked = select_story_context(*corpus, level.context_tags, 600);
        CHECK_MESSAGE(!picked.empty(), "level ", level.id);
        std::size_t words = 0;
        for (const auto& e : picked) words += e.word_count;
        CHECK(words <= 600);
    }
    // the Peak Source passage lives in the Source entry
    const auto* source = corpus->find("thing-01-the-source");
    REQUIRE(source);
    CHECK(text::contains_ci(source->body, "People additionally refer to this Source as the Peak Source."));
}
