#include "ryno/campaign.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ryno/error.hpp"
#include "ryno/text.hpp"

namespace ryno {

using nlohmann::json;

void TriggerSpec::validate() const {
    if (id.empty()) throw ValidationError("trigger with empty id");
    if (text::trim(preamble).empty()) throw ValidationError("trigger '" + id + "': empty preamble");
    auto positives = std::count_if(demonstrations.begin(), demonstrations.end(),
                                   [](const Demonstration& d) { return d.label; });
    auto negatives = static_cast<std::ptrdiff_t>(demonstrations.size()) - positives;
    if (positives < 1) throw ValidationError("trigger '" + id + "': no true demonstration");
    if (negatives < 1) throw ValidationError("trigger '" + id + "': no false demonstration");
    for (const auto& d : demonstrations) {
        if (text::trim(d.question).empty())
            throw ValidationError("trigger '" + id + "': empty demonstration question");
    }
}

const LevelSpec& CampaignSpec::level(int level_id) const {
    if (level_id < 1 || static_cast<std::size_t>(level_id) > levels.size())
        throw PreconditionError("campaign '" + id + "' has no level " + std::to_string(level_id));
    return levels[static_cast<std::size_t>(level_id - 1)];
}

void validate_campaign(const CampaignSpec& c, const std::vector<std::string>& known_instruments) {
    if (c.id.empty()) throw ValidationError("campaign with empty id");
    if (c.levels.empty()) throw ValidationError("campaign '" + c.id + "' has no levels");
    if (text::trim(c.prologue).empty()) throw ValidationError("campaign '" + c.id + "': empty prologue");
    if (text::trim(c.finale).empty()) throw ValidationError("campaign '" + c.id + "': empty finale");
    if (c.ingame_survey_ref.empty())
        throw ValidationError("campaign '" + c.id + "': missing ingame_survey_ref");
    if (!known_instruments.empty() &&
        std::find(known_instruments.begin(), known_instruments.end(), c.ingame_survey_ref) ==
            known_instruments.end()) {
        throw ValidationError("campaign '" + c.id + "': ingame_survey_ref '" + c.ingame_survey_ref +
                              "' does not resolve");
    }
    std::unordered_set<std::string> trigger_ids;
    for (std::size_t i = 0; i < c.levels.size(); ++i) {
        const auto& level = c.levels[i];
        if (level.id != static_cast<int>(i + 1)) {
            throw ValidationError("campaign '" + c.id + "': level ids must be consecutive from 1 (found " +
                                  std::to_string(level.id) + " at position " + std::to_string(i + 1) + ")");
        }
        if (text::trim(level.role_description).empty())
            throw ValidationError("level " + std::to_string(level.id) + ": empty role_description");
        if (text::trim(level.end_cutscene).empty())
            throw ValidationError("level " + std::to_string(level.id) + ": empty end_cutscene");
        level.trigger.validate();
        if (!trigger_ids.insert(level.trigger.id).second)
            throw ValidationError("duplicate trigger id '" + level.trigger.id + "'");
    }
}

void to_json(json& j, const Demonstration& d) {
    j = json{{"question", d.question}, {"label", d.label}};
}
void from_json(const json& j, Demonstration& d) {
    d.question = j.at("question").get<std::string>();
    d.label = j.at("label").get<bool>();
}

void to_json(json& j, const TriggerSpec& t) {
    j = json{{"id", t.id},
             {"description", t.description},
             {"preamble", t.preamble},
             {"demonstrations", t.demonstrations},
             {"instruction", t.instruction}};
}
void from_json(const json& j, TriggerSpec& t) {
    t.id = j.at("id").get<std::string>();
    t.description = j.value("description", std::string{});
    t.preamble = j.at("preamble").get<std::string>();
    t.demonstrations = j.at("demonstrations").get<std::vector<Demonstration>>();
    t.instruction = j.value("instruction", std::string(kDefaultTriggerInstruction));
}

void to_json(json& j, const LevelSpec& l) {
    j = json{{"id", l.id},
             {"goal_text", l.goal_text},
             {"role_description", l.role_description},
             {"context_tags", l.context_tags},
             {"trigger", l.trigger},
             {"end_cutscene", l.end_cutscene},
             {"response_format", l.response_format}};
}
void from_json(const json& j, LevelSpec& l) {
    l.id = j.at("id").get<int>();
    l.goal_text = j.value("goal_text", std::string{});
    l.role_description = j.at("role_description").get<std::string>();
    l.context_tags = j.value("context_tags", std::set<std::string>{});
    l.trigger = j.at("trigger").get<TriggerSpec>();
    l.end_cutscene = j.at("end_cutscene").get<std::string>();
    l.response_format = j.value("response_format", std::string(kDefaultResponseFormat));
}

void to_json(json& j, const CampaignSpec& c) {
    j = json{{"id", c.id},
             {"title", c.title},
             {"npc_name", c.npc_name},
             {"prologue", c.prologue},
             {"finale", c.finale},
             {"ingame_survey_ref", c.ingame_survey_ref},
             {"levels", c.levels}};
}
void from_json(const json& j, CampaignSpec& c) {
    c.id = j.at("id").get<std::string>();
    c.title = j.value("title", std::string{});
    c.npc_name = j.value("npc_name", std::string("Ryno"));
    c.prologue = j.at("prologue").get<std::string>();
    c.finale = j.at("finale").get<std::string>();
    c.ingame_survey_ref = j.at("ingame_survey_ref").get<std::string>();
    c.levels = j.at("levels").get<std::vector<LevelSpec>>();
}

CampaignSpec parse_campaign(std::string_view document) {
    CampaignSpec c;
    try {
        c = json::parse(document).get<CampaignSpec>();
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed campaign document: ") + ex.what());
    }
    validate_campaign(c);
    return c;
}

CampaignSpec load_campaign_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open campaign file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_campaign(ss.str());
}

std::string serialize_campaign(const CampaignSpec& campaign) {
    return json(campaign).dump(2) + "\n";
}

}  // namespace ryno
