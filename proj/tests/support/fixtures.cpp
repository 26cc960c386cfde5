#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ryno/text.hpp"

using namespace ryno;

namespace fixtures {

std::string data_path(const std::string& rel) { return std::string(RYNO_TEST_DATA) + "/" + rel; }
std::string golden_path(const std::string& rel) { return std::string(RYNO_TEST_GOLDEN) + "/" + rel; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fixture missing: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

assessment::InstrumentRegistry registry() {
    return assessment::InstrumentRegistry::load_directory(data_path("instruments"));
}

std::shared_ptr<const CampaignSpec> campaign() {
    static auto c = std::make_shared<const CampaignSpec>(load_campaign_file(data_path("campaign/default_campaign.json")));
    return c;
}

std::shared_ptr<const WorldCorpus> corpus() {
    static auto c = std::make_shared<const WorldCorpus>(load_corpus_file(data_path("corpus/world.json")));
    return c;
}

MockScript playthrough_script() { return load_mock_script_file(data_path("mock/playthrough_script.json")); }

std::vector<std::string> playthrough_lines() {
    std::istringstream in(read_file(golden_path("playthrough_lines.txt")));
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);)
        if (!text::trim(line).empty()) out.emplace_back(text::trim(line));
    return out;
}

std::shared_ptr<const NarrativeEngine> make_engine(std::shared_ptr<ChatBackend> backend, Clock clock) {
    if (!backend) backend = std::make_shared<MockBackend>(playthrough_script());
    if (!clock) clock = stepping_clock(kEpoch, 1000);
    auto reg = registry();
    auto survey = std::make_shared<const assessment::SurveyInstrument>(reg.get(campaign()->ingame_survey_ref));
    NarrativeOptions opts;
    opts.model_id = "mock";
    return std::make_shared<const NarrativeEngine>(campaign(), corpus(), backend, survey, opts, clock);
}

Harness make_harness(std::shared_ptr<ChatBackend> backend, std::shared_ptr<EventStore> store, ServiceOptions options,
                     Clock clock) {
    Harness h;
    h.backend = backend ? backend : std::make_shared<MockBackend>(playthrough_script());
    if (!clock) clock = stepping_clock(kEpoch, 1000);
    h.engine = make_engine(h.backend, clock);
    h.store = store ? store : std::make_shared<MemoryEventStore>();
    h.service = std::make_shared<SessionService>(h.engine, registry(), h.store, clock, options);
    return h;
}

SessionState play_through(SessionService& service, const std::string& participant, std::uint64_t seed,
                          const std::vector<int>& answers) {
    auto lines = playthrough_lines();
    const std::string id = service.create_session(participant, seed).state.session_id;
    std::size_t next = 0, answered = 0;
    for (int guard = 0; guard < 200; ++guard) {
        auto st = service.state(id);
        switch (st.phase) {
            case Phase::Prologue:
            case Phase::Cutscene:
            case Phase::Finale:
                service.advance(id, st.phase);
                break;
            case Phase::Dialogue:
                if (next >= lines.size()) throw std::runtime_error("playthrough ran out of lines");
                service.post_message(id, lines[next++]);
                break;
            case Phase::InGameSurvey: {
                auto item = service.current_item(id);
                if (auto* it = std::get_if<assessment::InGameItem>(&item))
                    service.answer(id, it->id, answers[answered++ % answers.size()]);
                else
                    service.advance(id, Phase::InGameSurvey);
                break;
            }
            case Phase::Closed:
                return st;
        }
    }
    throw std::runtime_error("playthrough did not finish");
}

std::map<std::string, std::string> sample_demographics() {
    return {{"gender", "Female"}, {"age", "18-24"}, {"education", "Bachelor's degree"},
            {"occupation", "Student"}, {"ethnicity", "Asian/Pacific Islander"}};
}

std::vector<assessment::ResponseRecord> survey_uploads(const assessment::InstrumentRegistry& reg,
                                                       const std::string& participant, int base) {
    using assessment::Wave;
    auto v = [base](int shift) { return [base, shift](std::size_t i) { return 1 + int((i + base + shift) % 5); }; };
    std::vector<assessment::ResponseRecord> out;
    auto pre = likert_record(reg.get("climate_v1"), participant, Wave::Pre, v(0));
    pre.demographics = sample_demographics();
    out.push_back(pre);
    out.push_back(likert_record(reg.get("climate_v1"), participant, Wave::Post, v(1)));
    out.push_back(likert_record(reg.get("ipip50_v1"), participant, Wave::Pre, v(2)));
    out.push_back(likert_record(reg.get("political_v1"), participant, Wave::Pre, v(3)));
    out.push_back(likert_record(reg.get("political_v1"), participant, Wave::Post, v(4)));
    return out;
}

std::vector<stats::ParticipantRow> synthetic_rows(std::size_t n, std::uint64_t seed, bool monotone_post) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1.0, 5.0);
    std::normal_distribution<double> noise(0.0, 0.6);
    std::vector<stats::ParticipantRow> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = rows[i];
        char id[32];
        std::snprintf(id, sizeof id, "p%03zu", i + 1);
        r.participant_id = id;
        r.ingame = u(rng);
        r.pre_climate = std::clamp(r.ingame + noise(rng), 1.0, 5.0) + 1e-7 * double(i);
        r.post_climate = monotone_post ? 0.5 + 0.8 * r.pre_climate + 0.01 * r.pre_climate * r.pre_climate
                                       : std::clamp(r.ingame + 0.5 * noise(rng), 1.0, 5.0) + 2e-7 * double(i);
        for (auto trait : assessment::kBigFiveTraits) r.big_five[std::string(trait)] = u(rng);
        r.political_pre = {u(rng), u(rng), u(rng)};
        r.political_post = {u(rng), u(rng), u(rng)};
        r.demographics = sample_demographics();
    }
    return rows;
}

}  // namespace fixtures
