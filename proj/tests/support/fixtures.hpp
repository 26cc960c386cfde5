#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ryno/assessment.hpp"
#include "ryno/campaign.hpp"
#include "ryno/corpus.hpp"
#include "ryno/dataset.hpp"
#include "ryno/event_store.hpp"
#include "ryno/gateway.hpp"
#include "ryno/narrative.hpp"
#include "ryno/session_service.hpp"

namespace fixtures {

std::string data_path(const std::string& rel);
std::string golden_path(const std::string& rel);
std::string read_file(const std::string& path);

ryno::assessment::InstrumentRegistry registry();
std::shared_ptr<const ryno::CampaignSpec> campaign();
std::shared_ptr<const ryno::WorldCorpus> corpus();
ryno::MockScript playthrough_script();
std::vector<std::string> playthrough_lines();

inline constexpr std::int64_t kEpoch = 1700000000000;  // 2023-11-14T22:13:20Z

struct Harness {
    std::shared_ptr<ryno::ChatBackend> backend;
    std::shared_ptr<const ryno::NarrativeEngine> engine;
    std::shared_ptr<ryno::EventStore> store;
    std::shared_ptr<ryno::SessionService> service;
};

// Default campaign, bundled corpus and instruments, stepping clock from
// kEpoch. Backend defaults to the playthrough mock script; store to memory.
Harness make_harness(std::shared_ptr<ryno::ChatBackend> backend = nullptr,
                     std::shared_ptr<ryno::EventStore> store = nullptr, ryno::ServiceOptions options = {},
                     ryno::Clock clock = nullptr);

std::shared_ptr<const ryno::NarrativeEngine> make_engine(std::shared_ptr<ryno::ChatBackend> backend,
                                                         ryno::Clock clock = nullptr);

// Drives a session from creation to Closed with the bundled player lines.
// `answers` are 1-based options for the in-game items (cycled).
ryno::SessionState play_through(ryno::SessionService& service, const std::string& participant, std::uint64_t seed,
                                const std::vector<int>& answers = {1, 2, 3});

// Every item of `instrument` answered with value(item_index).
template <typename F>
ryno::assessment::ResponseRecord likert_record(const ryno::assessment::SurveyInstrument& instrument,
                                               const std::string& participant, ryno::assessment::Wave wave,
                                               F value, std::int64_t ts = kEpoch) {
    ryno::assessment::ResponseRecord r;
    r.participant_id = participant;
    r.instrument_id = instrument.id;
    r.instrument_version = instrument.version;
    r.timestamp_ms = ts;
    r.wave = wave;
    for (std::size_t i = 0; i < instrument.items.size(); ++i)
        r.answers[instrument.items[i].id] = value(i);
    return r;
}

std::map<std::string, std::string> sample_demographics();

// Pre/post climate, Big Five, political pre/post uploads for one participant.
std::vector<ryno::assessment::ResponseRecord> survey_uploads(const ryno::assessment::InstrumentRegistry& reg,
                                                             const std::string& participant, int base);

// Seeded synthetic participant rows with continuous, tie-free columns.
// When `monotone_post` is set, post_climate is a strictly increasing
// function of pre_climate.
std::vector<ryno::stats::ParticipantRow> synthetic_rows(std::size_t n, std::uint64_t seed,
                                                        bool monotone_post = false);

}  // namespace fixtures
