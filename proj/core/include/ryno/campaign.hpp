#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ryno {

struct Demonstration {
    std::string question;
    bool label = false;

    friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

inline constexpr std::string_view kDefaultTriggerInstruction =
    "Now answer the question below and tell whether it is true or false.";

// Few-shot classifier gating one level's progression.
struct TriggerSpec {
    std::string id;
    std::string description;
    std::string preamble;
    std::vector<Demonstration> demonstrations;
    std::string instruction{kDefaultTriggerInstruction};

    // Throws ValidationError unless at least one true and one false
    // demonstration are present and id/preamble are set.
    void validate() const;

    friend bool operator==(const TriggerSpec&, const TriggerSpec&) = default;
};

inline constexpr std::string_view kDefaultResponseFormat =
    "Vary your chat styles. Sometimes ask, sometimes share, sometimes ponder. Use simple words and "
    "short sentences that even a 4th grader can understand.";

struct LevelSpec {
    int id = 1;
    std::string goal_text;
    std::string role_description;
    std::set<std::string> context_tags;
    TriggerSpec trigger;
    std::string end_cutscene;
    std::string response_format{kDefaultResponseFormat};

    friend bool operator==(const LevelSpec&, const LevelSpec&) = default;
};

struct CampaignSpec {
    std::string id;
    std::string title;
    std::string npc_name = "Ryno";
    std::string prologue;
    std::string finale;
    std::vector<LevelSpec> levels;
    std::string ingame_survey_ref;

    std::size_t level_count() const noexcept { return levels.size(); }
    // 1-based lookup; throws PreconditionError when out of range.
    const LevelSpec& level(int id) const;

    friend bool operator==(const CampaignSpec&, const CampaignSpec&) = default;
};

// Throws ValidationError on an empty level list, non-consecutive level ids,
// invalid triggers, duplicate trigger ids, or missing texts. When
// known_instruments is non-empty, ingame_survey_ref must be one of them.
void validate_campaign(const CampaignSpec& campaign,
                       const std::vector<std::string>& known_instruments = {});

CampaignSpec parse_campaign(std::string_view document);
CampaignSpec load_campaign_file(const std::string& path);
std::string serialize_campaign(const CampaignSpec& campaign);

void to_json(nlohmann::json& j, const Demonstration& d);
void from_json(const nlohmann::json& j, Demonstration& d);
void to_json(nlohmann::json& j, const TriggerSpec& t);
void from_json(const nlohmann::json& j, TriggerSpec& t);
void to_json(nlohmann::json& j, const LevelSpec& l);
void from_json(const nlohmann::json& j, LevelSpec& l);
void to_json(nlohmann::json& j, const CampaignSpec& c);
void from_json(const nlohmann::json& j, CampaignSpec& c);

}  // namespace ryno
