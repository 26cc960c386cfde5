#include <doctest.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "ryno/http_api.hpp"

using namespace ryno;
using nlohmann::json;

namespace {

struct Server {
    fixtures::Harness h = fixtures::make_harness();
    std::unique_ptr<HttpApi> api;
    std::unique_ptr<httplib::Client> client;

    explicit Server(HttpApiOptions opts = {}) {
        opts.threads = 4;
        api = std::make_unique<HttpApi>(h.service, opts);
        const int port = api->bind("127.0.0.1", 0);
        api->start();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_read_timeout(10, 0);
    }

    json post(const std::string& path, const json& body, int want = 200) {
        auto r = client->Post(path, body.dump(), "application/json");
        REQUIRE(r);
        CHECK_MESSAGE(r->status == want, path, " -> ", r->body);
        return r->body.empty() ? json{} : json::parse(r->body);
    }
    json get(const std::string& path, int want = 200) {
        auto r = client->Get(path);
        REQUIRE(r);
        CHECK_MESSAGE(r->status == want, path, " -> ", r->body);
        return json::parse(r->body);
    }
};

// Drives one participant from session creation to Closed over HTTP.
std::string play(Server& s, const std::string& participant) {
    auto created = s.post("/sessions", {{"participant_id", participant}, {"seed", 4}}, 201);
    const std::string id = created["session_id"];
    const std::string base = "/sessions/" + id;
    auto lines = fixtures::playthrough_lines();
    std::size_t next = 0;
    for (int guard = 0; guard < 100; ++guard) {
        auto st = s.get(base)["state"];
        const std::string phase = st["phase"];
        if (phase == "Closed") return id;
        if (phase == "Dialogue") {
            s.post(base + "/messages", {{"text", lines.at(next++)}});
        } else if (phase == "InGameSurvey") {
            auto cur = s.get(base + "/survey/current");
            if (cur["done"]) s.post(base + "/advance", {{"from", phase}});
            else s.post(base + "/survey/answers", {{"item_id", cur["item"]["id"]}, {"option", 2}});
        } else {
            s.post(base + "/advance", {{"from", phase}});
        }
    }
    FAIL("playthrough did not close");
    return id;
}

}  // namespace

TEST_CASE("http: health and a full playthrough") {
    Server s;
    auto health = s.get("/health");
    CHECK(health["status"] == "ready");
    CHECK(health["campaign_id"] == fixtures::campaign()->id);

    auto id = play(s, "web-1");
    auto snap = s.get("/sessions/" + id);
    CHECK(snap["state"]["phase"] == "Closed");
    CHECK(snap["events"].back()["kind"] == "SessionClosed");
    auto t = s.client->Get("/sessions/" + id + "/transcript");
    REQUIRE(t);
    CHECK(t->status == 200);
    CHECK(t->body.find("Thank you for listening") != std::string::npos);
    CHECK(t->body == render_transcript(s.h.service->state(id)));

    // a repeated acknowledgement after close changes nothing
    auto again = s.post("/sessions/" + id + "/advance", {{"from", "Finale"}});
    CHECK(again["changed"] == false);
}

TEST_CASE("http: error statuses") {
    Server s;
    s.get("/sessions/nope", 404);
    s.post("/sessions", json::object(), 400);
    s.post("/sessions", {{"participant_id", 5}}, 400);
    s.post("/sessions", {{"participant_id", "p"}, {"campaign_id", "elsewhere"}}, 404);
    auto raw = s.client->Post("/sessions", "{not json", "application/json");
    REQUIRE(raw);
    CHECK(raw->status == 400);

    auto id = s.post("/sessions", {{"participant_id", "p"}}, 201)["session_id"].get<std::string>();
    auto base = "/sessions/" + id;
    auto early = s.post(base + "/messages", {{"text", "hi"}}, 409);
    CHECK(early["error"] == "precondition");
    s.post(base + "/advance", {{"from", "Sideways"}}, 400);
    s.post(base + "/advance", json::object());
    auto blank = s.post(base + "/messages", {{"text", "   "}}, 422);
    CHECK(blank["retryable"] == true);
    s.post(base + "/survey/answers", {{"item_id", "IngameQ1"}, {"option", 1}}, 409);
    s.get("/export?format=xml", 400);
    s.get("/export?from=yesterday", 400);
    s.get("/report", 400);  // fewer than three complete participants
}

TEST_CASE("http: research token guards everything but health") {
    HttpApiOptions opts;
    opts.research_token = "s3cret";
    Server s(opts);
    s.get("/health");
    auto denied = s.post("/sessions", {{"participant_id", "p"}}, 401);
    CHECK(denied["error"] == "auth");
    s.client->set_bearer_token_auth("wrong");
    s.get("/export?format=json", 401);
    s.client->set_bearer_token_auth("s3cret");
    s.post("/sessions", {{"participant_id", "p"}}, 201);
}

TEST_CASE("http: uploads, export and report") {
    Server s;
    for (int i = 1; i <= 3; ++i) {
        const std::string pid = "web-" + std::to_string(i);
        play(s, pid);
        for (const auto& r : fixtures::survey_uploads(s.h.service->registry(), pid, i)) {
            auto body = s.post("/responses", json(r), 201);
            CHECK(body["stored"] == true);
        }
    }
    auto bad = fixtures::survey_uploads(s.h.service->registry(), "web-9", 0)[0];
    bad.answers.begin()->second = 0;
    s.post("/responses", json(bad), 422);
    s.post("/responses", {{"participant_id", "x"}}, 400);

    auto ex = s.get("/export?format=json");
    CHECK(ex["row_count"] == 3);
    CHECK(ex["exclusions"].empty());
    auto csv = s.client->Get("/export");
    REQUIRE(csv);
    CHECK(stats::rows_from_csv(csv->body).size() == 3);
    auto by_campaign = s.get("/export?format=json&campaign_id=" + fixtures::campaign()->id);
    CHECK(by_campaign["row_count"] == 3);
    CHECK(s.get("/export?format=json&campaign_id=other")["row_count"] == 0);
    CHECK(s.get("/export?format=json&to=2023-11-13")["row_count"] == 0);
    CHECK(s.get("/export?format=json&from=2023-11-14&to=2023-11-14")["row_count"] == 3);

    auto rep = s.get("/report");
    CHECK(rep["n"] == 3);
    CHECK(rep["tables"].size() == 3);
    auto text = s.client->Get("/report?format=text");
    REQUIRE(text);
    CHECK(text->body.find("Conscientiousness") != std::string::npos);
    auto scatter = s.client->Get("/report/scatter?wave=pre");
    REQUIRE(scatter);
    CHECK(scatter->body.rfind("x,y\n", 0) == 0);
    s.get("/report/scatter?wave=sideways", 400);
}
