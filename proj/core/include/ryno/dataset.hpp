#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ryno/assessment.hpp"
#include "ryno/session.hpp"

namespace ryno::stats {

struct ParticipantRow {
    std::string participant_id;
    double pre_climate = 0.0;
    double ingame = 0.0;
    double post_climate = 0.0;
    std::map<std::string, double> big_five;  // trait -> mean
    assessment::PoliticalScores political_pre;
    assessment::PoliticalScores political_post;
    std::map<std::string, std::string> demographics;

    friend bool operator==(const ParticipantRow&, const ParticipantRow&) = default;
};

struct Exclusion {
    std::string participant_id;
    std::vector<std::string> missing;  // e.g. "climate/post", "ingame"
    std::vector<std::string> errors;   // scoring errors on records that were present
};

struct Dataset {
    std::vector<ParticipantRow> rows;       // sorted by participant id
    std::vector<Exclusion> exclusions;      // sorted by participant id
};

// Complete-case assembly. A participant needs climate Pre and Post, an
// in-game score (finished session or InGame record), Big Five Pre, and
// political Pre and Post. When a participant has several records for the
// same instrument and wave, the latest timestamp wins. Everyone else lands
// in the exclusion report with what was missing.
Dataset build_dataset(std::span<const assessment::ResponseRecord> responses, std::span<const SessionState> sessions,
                      const assessment::InstrumentRegistry& registry);

// Fixed column order; numbers printed with enough digits to round-trip.
std::vector<std::string> dataset_columns();
std::string dataset_to_csv(std::span<const ParticipantRow> rows);
std::vector<ParticipantRow> rows_from_csv(std::string_view csv);
std::string exclusions_to_csv(std::span<const Exclusion> exclusions);

void to_json(nlohmann::json& j, const Exclusion& e);

}  // namespace ryno::stats
